"""Tests for the bear_raid package."""
