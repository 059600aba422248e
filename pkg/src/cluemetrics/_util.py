"""Shared plumbing: errors, hashing, canonical JSON."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, BinaryIO


class DataFormatError(Exception):
    """Raised when an input file or stream violates its declared format."""

    def __init__(self, message: str, *, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DigestMismatchError(DataFormatError):
    """Raised when a chained stage input does not match the recorded digest."""


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class HashingReader:
    """Wraps a binary stream, hashing every byte read and tracking the offset."""

    def __init__(self, stream: BinaryIO):
        self._stream = stream
        self._hash = hashlib.sha256()
        self.offset = 0

    def read(self, n: int = -1) -> bytes:
        data = self._stream.read(n)
        self._hash.update(data)
        self.offset += len(data)
        return data

    def hexdigest(self) -> str:
        return self._hash.hexdigest()


def _jsonable(value: Any) -> Any:
    # numpy scalars/arrays sneak into report dicts; normalize before dumping
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        try:
            return value.item()
        except (AttributeError, ValueError):
            pass
    if hasattr(value, "tolist"):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)!r}")


def canonical_json(obj: Any) -> str:
    """Deterministic single-line JSON: sorted keys, fixed separators."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False,
                      default=_jsonable)


def json_sanitize(obj: Any) -> Any:
    """Replace non-finite floats with None so reports stay valid JSON."""
    if isinstance(obj, dict):
        return {k: json_sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_sanitize(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
