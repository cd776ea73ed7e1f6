"""Run the command-line interface with `python -m bear_raid`."""

import sys

from .cli import main

sys.exit(main())
