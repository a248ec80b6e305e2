"""
File IO helpers: line-delimited JSON and atomic writes.
"""

import json
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Tuple, Union

from src.utils.errors import CanonicalParseError, IngestionError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def dumps_record(record: Dict[str, Any]) -> str:
    """Serialize one record to a single JSON line (no trailing newline)."""
    return json.dumps(record, ensure_ascii=False, separators=(", ", ": "))


def iter_jsonl(path: PathLike) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """
    Yield (line_number, record) for every non-blank line of a JSONL file.

    Raises:
        IngestionError: if the file is missing or unreadable
        CanonicalParseError: if a line is not a JSON object
    """
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise IngestionError(f"Cannot read {path}: {e.strerror or str(e)}", path=str(path)) from e
    with fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CanonicalParseError(f"invalid JSON ({e.msg})", line_number) from e
            if not isinstance(record, dict):
                raise CanonicalParseError("record is not an object", line_number)
            yield line_number, record


def atomic_write_text(path: PathLike, text: str) -> None:
    """Write text to path via a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_jsonl(path: PathLike, records: Iterable[Dict[str, Any]]) -> int:
    """Atomically write records as JSONL; returns the number written."""
    lines = [dumps_record(r) for r in records]
    atomic_write_text(path, "".join(f"{line}\n" for line in lines))
    return len(lines)


def write_json(path: PathLike, payload: Any) -> None:
    """Atomically write pretty-printed JSON."""
    atomic_write_text(path, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


def replace_directory(staging: PathLike, target: PathLike) -> None:
    """
    Move a fully written staging directory into place.

    Any existing target is moved aside first and removed only after the
    rename succeeded.
    """
    staging, target = Path(staging), Path(target)
    backup = None
    if target.exists():
        backup = target.with_name(f".{target.name}.old")
        if backup.exists():
            shutil.rmtree(backup)
        os.replace(target, backup)
    os.replace(staging, target)
    if backup is not None:
        shutil.rmtree(backup, ignore_errors=True)
    logger.debug(f"Replaced directory {target}")


def staging_directory(target: PathLike) -> Path:
    """Create an empty sibling directory to stage an atomic directory write."""
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    return Path(tempfile.mkdtemp(prefix=f".{target.name}.tmp-", dir=target.parent))
