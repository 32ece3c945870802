"""
Result output.

CSV and JSON artifacts are written through a single ``ResultWriter`` per run.
Writes are serialized with a lock so worker threads can hand results over
without interleaving. The output directory is created on first write, which
keeps failed validations from leaving empty directories behind.
"""

import csv
import json
import logging
import threading
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats, plain text for everything else."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class ResultWriter:
    """Serialized writer for one output directory."""

    def __init__(self, out_dir: Path | str):
        self.out_dir = Path(out_dir)
        self._lock = threading.Lock()

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """Write a CSV file with a header row; floats keep full precision."""
        with self._lock:
            path = self._path(name)
            with path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([format_value(v) for v in row])
        logger.info(f"Wrote {path}")
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        """Write a JSON document with sorted keys."""
        with self._lock:
            path = self._path(name)
            text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)
            path.write_text(text + "\n", encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def write_text(self, name: str, text: str) -> Path:
        with self._lock:
            path = self._path(name)
            path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path


def read_matrix_csv(path: Path | str) -> np.ndarray:
    """Read a headed numeric CSV into an ``(n, D)`` array; empty files give ``(0, D)``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        return np.zeros((0, len(header)))
    return np.asarray(rows, dtype=float)
