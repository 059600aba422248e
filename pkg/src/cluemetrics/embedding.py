"""Word-vector spaces and the vector operations behind every opacity metric.

Supports the two interchange formats for pretrained embeddings:

* binary: ASCII header line ``"<vocab_count> <dim>\\n"``, then per entry the
  token bytes terminated by a single space followed by ``dim`` little-endian
  float32 values, optionally followed by a newline.
* text: one ``"token v1 v2 ... vdim"`` line per entry, whitespace-delimited
  UTF-8.

Vectors are stored exactly as read (float32, no renormalization): angle
computations are norm-invariant, but raw magnitudes matter for the summed-clue
opacity model and for answer-density distances.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Mapping

import numpy as np

from ._util import DataFormatError, HashingReader

__all__ = [
    "WordVector",
    "EmbeddingSpace",
    "LoadReport",
    "load_embeddings",
    "write_embeddings_binary",
    "write_embeddings_text",
    "cosine",
    "angle_between",
    "vector_sum",
    "euclidean_distance",
]


@dataclass(frozen=True)
class WordVector:
    """A token and its dense vector. Zero-norm vectors are rejected."""

    word: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"vector for {self.word!r} must be a nonempty 1-D array")
        if not np.all(np.isfinite(values)) or not np.linalg.norm(values) > 0.0:
            raise ValueError(f"vector for {self.word!r} has zero norm or non-finite values")
        object.__setattr__(self, "values", values)


@dataclass
class LoadReport:
    """Counts of entries kept and skipped while loading an embedding file."""

    loaded: int = 0
    skipped_zero_norm: int = 0
    skipped_filtered: int = 0
    skipped_duplicate: int = 0
    skipped_malformed: int = 0

    def to_dict(self) -> dict:
        return {
            "loaded": self.loaded,
            "skipped_zero_norm": self.skipped_zero_norm,
            "skipped_filtered": self.skipped_filtered,
            "skipped_duplicate": self.skipped_duplicate,
            "skipped_malformed": self.skipped_malformed,
        }


class EmbeddingSpace:
    """Immutable word -> vector map with a single shared dimension.

    Lookup is case-sensitive exact match. Vectors are exposed as read-only
    float32 views into one matrix, so the space is safely shareable across
    concurrent readers.
    """

    def __init__(self, words: Iterable[str], matrix: np.ndarray,
                 source_digest: str = "", load_report: LoadReport | None = None):
        self._words = list(words)
        matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[0] != len(self._words):
            raise ValueError("matrix must be 2-D with one row per word")
        if matrix.shape[0] > 0 and matrix.shape[1] == 0:
            raise ValueError("vectors must have positive dimension")
        matrix.setflags(write=False)
        self._matrix = matrix
        self._index = {w: i for i, w in enumerate(self._words)}
        if len(self._index) != len(self._words):
            raise ValueError("duplicate words in embedding space")
        self.source_digest = source_digest
        self.load_report = load_report or LoadReport(loaded=len(self._words))

    @classmethod
    def from_entries(cls, entries: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]],
                     source_digest: str = "") -> "EmbeddingSpace":
        items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        if not items:
            raise ValueError("cannot build an empty embedding space")
        vectors = [WordVector(w, v) for w, v in items]
        dim = vectors[0].values.shape[0]
        for wv in vectors:
            if wv.values.shape[0] != dim:
                raise ValueError(f"dimension mismatch for {wv.word!r}: "
                                 f"{wv.values.shape[0]} != {dim}")
        matrix = np.stack([wv.values for wv in vectors])
        return cls([wv.word for wv in vectors], matrix, source_digest)

    @property
    def dimension(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def __len__(self) -> int:
        return len(self._words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __getitem__(self, word: str) -> np.ndarray:
        return self._matrix[self._index[word]]

    def get(self, word: str) -> np.ndarray | None:
        i = self._index.get(word)
        return None if i is None else self._matrix[i]

    def row(self, word: str) -> int:
        return self._index[word]

    def word_vector(self, word: str) -> WordVector:
        return WordVector(word, self[word])

    def words(self) -> Iterator[str]:
        return iter(self._words)


class _ByteScanner:
    """Buffered scanner over a hashing reader; tracks absolute byte offsets."""

    def __init__(self, reader: HashingReader, chunk: int = 1 << 20):
        self._reader = reader
        self._chunk = chunk
        self._buf = b""
        self._pos = 0  # consumed bytes within current buffer

    @property
    def offset(self) -> int:
        return self._reader.offset - (len(self._buf) - self._pos)

    def _fill(self) -> bool:
        data = self._reader.read(self._chunk)
        if not data:
            return False
        self._buf = self._buf[self._pos:] + data
        self._pos = 0
        return True

    def read_until_space(self) -> bytes | None:
        """Token bytes up to the next b' ' (consumed); leading newlines skipped."""
        while True:
            while self._pos < len(self._buf) and self._buf[self._pos:self._pos + 1] in (b"\n", b"\r"):
                self._pos += 1
            idx = self._buf.find(b" ", self._pos)
            if idx >= 0:
                token = self._buf[self._pos:idx]
                self._pos = idx + 1
                return token
            if not self._fill():
                return None if self._pos >= len(self._buf.rstrip(b"\r\n")) else self._buf[self._pos:]

    def read_exact(self, n: int) -> bytes:
        while len(self._buf) - self._pos < n:
            if not self._fill():
                raise DataFormatError("unexpected end of stream", offset=self._reader.offset)
        out = self._buf[self._pos:self._pos + n]
        self._pos += n
        return out

    def read_line(self) -> bytes:
        while True:
            idx = self._buf.find(b"\n", self._pos)
            if idx >= 0:
                line = self._buf[self._pos:idx]
                self._pos = idx + 1
                return line
            if not self._fill():
                raise DataFormatError("unexpected end of stream while reading header",
                                      offset=self._reader.offset)


def _open_stream(source: str | Path | BinaryIO) -> tuple[BinaryIO, bool]:
    if isinstance(source, (str, Path)):
        return open(source, "rb"), True
    return source, False


def load_embeddings(source: str | Path | BinaryIO, format: str,
                    vocab_filter: set[str] | None = None) -> EmbeddingSpace:
    """Parse an embedding file into an :class:`EmbeddingSpace`.

    ``format`` must be ``"binary"`` or ``"text"``. When ``vocab_filter`` is
    given only matching tokens are kept (the rest are counted as filtered).
    Zero-norm or non-finite vectors are skipped and counted in the load
    report; a dimension mismatch mid-file is a format error naming the byte
    offset.
    """
    if format not in ("binary", "text"):
        raise ValueError(f"unknown embedding format {format!r}")
    stream, owned = _open_stream(source)
    try:
        reader = HashingReader(stream)
        if format == "binary":
            words, rows, report = _load_binary(reader, vocab_filter)
        else:
            words, rows, report = _load_text(reader, vocab_filter)
    finally:
        if owned:
            stream.close()
    if not words:
        raise DataFormatError("embedding stream contains no usable entries")
    matrix = np.stack(rows)
    return EmbeddingSpace(words, matrix, source_digest=reader.hexdigest(),
                          load_report=report)


def _keep_entry(word: str, values: np.ndarray, words: list[str], rows: list[np.ndarray],
                seen: set[str], vocab_filter: set[str] | None, report: LoadReport) -> None:
    if vocab_filter is not None and word not in vocab_filter:
        report.skipped_filtered += 1
        return
    if word in seen:
        report.skipped_duplicate += 1
        return
    if not np.all(np.isfinite(values)) or not float(np.linalg.norm(values)) > 0.0:
        report.skipped_zero_norm += 1
        return
    seen.add(word)
    words.append(word)
    rows.append(values)
    report.loaded += 1


def _load_binary(reader: HashingReader, vocab_filter: set[str] | None):
    scanner = _ByteScanner(reader)
    header = scanner.read_line()
    parts = header.split()
    if len(parts) != 2:
        raise DataFormatError(f"malformed binary header {header!r}")
    try:
        vocab_count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise DataFormatError(f"malformed binary header {header!r}") from None
    if vocab_count < 0 or dim <= 0:
        raise DataFormatError(f"malformed binary header {header!r}")

    report = LoadReport()
    words: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    for _ in range(vocab_count):
        token_offset = scanner.offset
        token = scanner.read_until_space()
        if token is None:
            raise DataFormatError("stream ended before declared vocab count",
                                  offset=token_offset)
        raw = scanner.read_exact(4 * dim)
        try:
            word = token.decode("utf-8")
        except UnicodeDecodeError:
            report.skipped_malformed += 1
            continue
        values = np.frombuffer(raw, dtype="<f4").astype(np.float32)
        _keep_entry(word, values, words, rows, seen, vocab_filter, report)
    return words, rows, report


def _load_text(reader: HashingReader, vocab_filter: set[str] | None):
    data = reader.read()
    report = LoadReport()
    words: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    dim: int | None = None
    offset = 0
    for raw_line in data.splitlines(keepends=True):
        line_offset = offset
        offset += len(raw_line)
        line = raw_line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            report.skipped_malformed += 1
            continue
        try:
            word = parts[0].decode("utf-8")
            values = np.array([float(p) for p in parts[1:]], dtype=np.float32)
        except (UnicodeDecodeError, ValueError):
            report.skipped_malformed += 1
            continue
        if dim is None:
            dim = values.shape[0]
        elif values.shape[0] != dim:
            raise DataFormatError(
                f"dimension mismatch for {word!r}: {values.shape[0]} != {dim}",
                offset=line_offset)
        _keep_entry(word, values, words, rows, seen, vocab_filter, report)
    return words, rows, report


def write_embeddings_binary(entries: Iterable[tuple[str, np.ndarray]],
                            target: str | Path | BinaryIO) -> None:
    """Write entries in the binary interchange format (fixture/round-trip aid)."""
    items = [(w, np.asarray(v, dtype=np.float32)) for w, v in entries]
    if not items:
        raise ValueError("nothing to write")
    dim = items[0][1].shape[0]
    stream, owned = (open(target, "wb"), True) if isinstance(target, (str, Path)) \
        else (target, False)
    try:
        stream.write(f"{len(items)} {dim}\n".encode("ascii"))
        for word, values in items:
            stream.write(word.encode("utf-8") + b" ")
            stream.write(values.astype("<f4").tobytes())
            stream.write(b"\n")
    finally:
        if owned:
            stream.close()


def write_embeddings_text(entries: Iterable[tuple[str, np.ndarray]],
                          target: str | Path | io.IOBase) -> None:
    """Write entries in the text interchange format.

    Components are written as the shortest decimal round-tripping the float32
    value, so text -> binary -> text is lossless.
    """
    lines = []
    for word, values in entries:
        values = np.asarray(values, dtype=np.float32)
        comps = " ".join(repr(float(v)) for v in values)
        lines.append(f"{word} {comps}\n")
    text = "".join(lines)
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
    elif isinstance(target, io.TextIOBase):
        target.write(text)
    else:
        target.write(text.encode("utf-8"))


def _as_array(x: "np.ndarray | WordVector", name: str) -> np.ndarray:
    if isinstance(x, WordVector):
        x = x.values
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D vector")
    return arr


def cosine(x, y) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1].

    Clamping absorbs floating-point drift so arccos never sees a value
    fractionally outside its domain.
    """
    xv, yv = _as_array(x, "x"), _as_array(y, "y")
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape[0]} != {yv.shape[0]}")
    nx, ny = float(np.linalg.norm(xv)), float(np.linalg.norm(yv))
    if nx == 0.0 or ny == 0.0:
        raise ValueError("cosine undefined for zero-norm vectors")
    return float(np.clip(float(np.dot(xv, yv)) / (nx * ny), -1.0, 1.0))


def angle_between(x, y) -> float:
    """Angle between two vector directions, in degrees within [0, 180]."""
    return float(np.degrees(np.arccos(cosine(x, y))))


def vector_sum(vectors: Iterable) -> np.ndarray:
    """Componentwise sum, magnitude preserved (no normalization).

    A zero-norm sum is legal here; callers that cannot use one (the summed-clue
    opacity model) must flag it themselves.
    """
    arrays = [_as_array(v, "vector") for v in vectors]
    if not arrays:
        raise ValueError("vector_sum requires at least one vector")
    dim = arrays[0].shape[0]
    for a in arrays:
        if a.shape[0] != dim:
            raise ValueError(f"dimension mismatch: {a.shape[0]} != {dim}")
    return np.sum(np.stack(arrays), axis=0)


def euclidean_distance(x, y) -> float:
    """L2 distance on raw (unnormalized) vectors."""
    xv, yv = _as_array(x, "x"), _as_array(y, "y")
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape[0]} != {yv.shape[0]}")
    return float(np.sqrt(np.sum((xv - yv) ** 2)))
