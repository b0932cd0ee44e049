"""Utility functions for lattice-nls result emission and environment handling."""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

from .constants import FLOAT_FORMAT

logger = logging.getLogger(__name__)


def get_max_workers() -> int:
    """Read the parallelism cap from LATTICE_NLS_THREADS.

    Returns:
        A positive worker count (falls back to the CPU count)
    """
    raw = os.getenv("LATTICE_NLS_THREADS")
    if raw:
        try:
            value = int(raw)
            if value >= 1:
                return value
        except ValueError:
            pass
        logger.warning(
            "Ignoring invalid LATTICE_NLS_THREADS",
            extra={"LATTICE_NLS_THREADS": raw},
        )
    return os.cpu_count() or 4


def format_value(value: Any) -> str:
    """Format one CSV cell.

    Floats use 17 significant digits, booleans are lowercase words.
    """
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(float(value), FLOAT_FORMAT)


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(format_value(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def dump_json(payload: Any) -> str:
    """Deterministic JSON text (sorted keys, two-space indent, trailing newline)."""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n"


def atomic_write_text(path: Path | str, text: str) -> Path:
    """Write `text` to `path` through a temp file in the same directory and rename.

    Args:
        path: Destination file
        text: Full file contents

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("Wrote artifact", extra={"path": str(path), "bytes": len(text)})
    return path
