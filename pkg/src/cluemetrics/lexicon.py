"""Word-frequency tables and the obscurity transform.

Frequencies are stored in occurrences per million words; rarity is measured
as -log10 of that value, so fpm = 1 maps to obscurity 0 and rarer words score
higher. Lookup misses return None rather than an imputed minimum; what to do
with a record that has no frequency is the caller's policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import BinaryIO, Iterator

__all__ = [
    "FrequencyTable",
    "LexiconLoadReport",
    "load_frequencies",
    "obscurity",
    "fixture_lexicon_path",
]


@dataclass
class LexiconLoadReport:
    lines_read: int = 0
    loaded: int = 0
    skipped: int = 0

    def to_dict(self) -> dict:
        return {"lines_read": self.lines_read, "loaded": self.loaded,
                "skipped": self.skipped}


class FrequencyTable:
    """Immutable word -> occurrences-per-million map."""

    def __init__(self, entries: dict[str, float], source: str = "",
                 load_report: LexiconLoadReport | None = None):
        for word, fpm in entries.items():
            if not (fpm > 0.0 and math.isfinite(fpm)):
                raise ValueError(f"frequency for {word!r} must be strictly positive")
        self._entries = dict(entries)
        self.source = source
        self.load_report = load_report or LexiconLoadReport(loaded=len(entries))

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, word: str) -> bool:
        return word in self._entries

    def fpm(self, word: str) -> float | None:
        """Frequency per million words, or None when the word is absent."""
        return self._entries.get(word)

    def words(self) -> Iterator[str]:
        return iter(self._entries)

    def top_words(self, k: int) -> list[str]:
        """The k most frequent words; ties broken lexicographically."""
        ranked = sorted(self._entries.items(), key=lambda kv: (-kv[1], kv[0]))
        return [w for w, _ in ranked[:k]]


def load_frequencies(source: str | Path | BinaryIO, source_label: str = "") -> FrequencyTable:
    """Parse tab-delimited ``word<TAB>per_million`` lines into a table.

    Duplicate words take the last occurrence. Malformed lines and
    zero/negative frequencies are skipped and counted in the load report.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            data = fh.read()
        if not source_label:
            source_label = str(source)
    else:
        data = source.read()
    report = LexiconLoadReport()
    entries: dict[str, float] = {}
    for raw_line in data.splitlines():
        line = raw_line.decode("utf-8", errors="replace").strip()
        if not line:
            continue
        report.lines_read += 1
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0]:
            report.skipped += 1
            continue
        try:
            fpm = float(parts[1])
        except ValueError:
            report.skipped += 1
            continue
        if not (fpm > 0.0 and math.isfinite(fpm)):
            report.skipped += 1
            continue
        if parts[0] in entries:
            report.loaded -= 1
        entries[parts[0]] = fpm
        report.loaded += 1
    return FrequencyTable(entries, source=source_label, load_report=report)


def obscurity(table: FrequencyTable, word: str) -> float | None:
    """-log10(frequency per million); None when the word has no entry."""
    fpm = table.fpm(word)
    if fpm is None:
        return None
    return -math.log10(fpm)


def fixture_lexicon_path() -> Path:
    """Path of the bundled 5,000-word synthetic lexicon used by the tests."""
    with resources.as_file(resources.files("cluemetrics.data") / "fixture_lexicon.tsv") as p:
        return Path(p)
