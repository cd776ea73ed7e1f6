"""Storage handling for Bear Raid Detection reports."""

from __future__ import annotations

import asyncio
from datetime import datetime, timezone
import logging
import os
import tempfile
from typing import Any

from .const import DOMAIN, FILE_RUN_METADATA, SCHEMA_RUN_METADATA, VERSION
from .helpers import dump_json

_LOGGER = logging.getLogger(__name__)


def atomic_write(path: str, text: str) -> None:
    """Write text through a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    handle = tempfile.NamedTemporaryFile(
        "w",
        encoding="utf-8",
        newline="",
        dir=directory,
        prefix=f".{os.path.basename(path)}.",
        delete=False,
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except BaseException:
        if os.path.exists(handle.name):
            os.unlink(handle.name)
        raise


class ReportStorage:
    """Write report files for one run into an output directory."""

    def __init__(self, out_dir: str) -> None:
        """Initialize storage."""
        self.out_dir = out_dir
        self.written: list[str] = []
        self.started = datetime.now(timezone.utc)

    def path(self, name: str) -> str:
        """Return the full path of a report file."""
        return os.path.join(self.out_dir, name)

    def _save(self, name: str, text: str) -> str:
        """Write one file atomically and remember its name."""
        os.makedirs(self.out_dir, exist_ok=True)
        target = self.path(name)
        atomic_write(target, text)
        if name not in self.written:
            self.written.append(name)
        _LOGGER.debug("Wrote %s", target)
        return target

    async def async_save_text(self, name: str, text: str) -> str:
        """Save a text report."""
        return await asyncio.to_thread(self._save, name, text)

    async def async_save_json(self, name: str, payload: Any) -> str:
        """Save a JSON report in canonical form."""
        return await asyncio.to_thread(self._save, name, dump_json(payload))

    def _create_run_metadata(self, command: str, extra: dict[str, Any]) -> dict[str, Any]:
        """Create the sidecar describing this run."""
        return {
            "schema": SCHEMA_RUN_METADATA,
            "tool": DOMAIN,
            "version": VERSION,
            "command": command,
            "started": self.started.isoformat(),
            "finished": datetime.now(timezone.utc).isoformat(),
            "files": sorted(self.written),
            **extra,
        }

    async def async_save_run_metadata(
        self, command: str, extra: dict[str, Any] | None = None
    ) -> str:
        """Save run metadata; timestamps live only in this file."""
        metadata = self._create_run_metadata(command, extra or {})
        return await self.async_save_json(FILE_RUN_METADATA, metadata)
