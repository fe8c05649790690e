"""JSON-lines journal that lets an interrupted grid sweep resume."""

import hashlib
import json
import logging
from pathlib import Path

logger = logging.getLogger(__name__)


def fingerprint(payload: dict) -> str:
    """Stable hash of the grid and numeric settings that determine the cell values."""
    canonical = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class SweepJournal:
    """Append-only record of finished cells.

    The first line holds the fingerprint; a journal with a different
    fingerprint belongs to another sweep and is reset.
    """

    def __init__(self, path: str | Path, fingerprint: str):
        self.path = Path(path)
        self.fingerprint = fingerprint

    def load(self) -> dict[tuple[int, int], tuple[float, str]]:
        """Completed cells, resetting the journal if it belongs to another sweep."""
        if not self.path.exists():
            self._reset()
            return {}
        with open(self.path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        try:
            header = json.loads(lines[0]) if lines else {}
        except json.JSONDecodeError:
            header = {}
        if header.get("fingerprint") != self.fingerprint:
            logger.warning(f"Journal {self.path} belongs to a different sweep, starting over")
            self._reset()
            return {}

        completed = {}
        for line in lines[1:]:
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                # torn final line from an interrupted write
                continue
            completed[(entry["i"], entry["j"])] = (float(entry["value"]), entry["status"])
        logger.info(f"Journal {self.path}: {len(completed)} completed cells")
        return completed

    def append(self, i: int, j: int, value: float, status: str) -> None:
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps({"i": i, "j": j, "value": value, "status": status}) + "\n")
            handle.flush()

    def _reset(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", encoding="utf-8") as handle:
            handle.write(json.dumps({"fingerprint": self.fingerprint}) + "\n")
