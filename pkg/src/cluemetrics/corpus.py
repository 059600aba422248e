"""Raw clue parsing, filtering rules, and difficulty/pun labeling.

Raw dumps come in two shapes: crossword rows as delimited text with date,
clue, and answer columns, and quiz records as JSON (an array or one object
per line) with question, answer, value, round, and category fields. Both are
reduced to analysis-ready records: tokenized, stoplist/POS filtered,
restricted to single-word in-vocabulary answers, and labeled with an ordinal
difficulty (1-6 by crossword weekday, 1-8 by quiz dollar value).
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping, Sequence

from ._util import DataFormatError, canonical_json
from .embedding import EmbeddingSpace
from .lexicon import FrequencyTable

__all__ = [
    "RawClue",
    "QuestionRecord",
    "ExclusionReport",
    "ParseReport",
    "CorpusConfig",
    "default_stoplist",
    "load_stoplist",
    "load_pos_annotations",
    "tokenize",
    "tokenize_and_filter",
    "label_crossword_difficulty",
    "label_jeopardy_difficulty",
    "classify_pun",
    "build_corpus",
    "parse_crossword_file",
    "parse_jeopardy_file",
    "write_corpus",
    "read_corpus",
    "CORPUS_FORMAT_VERSION",
]

CORPUS_FORMAT_VERSION = 1

# Letters (any script) with internal apostrophes or hyphens; everything else
# is a separator. Digits and underscores never start or join a token.
_TOKEN_RE = re.compile(r"[^\W\d_]+(?:['’-][^\W\d_]+)*")

CROSSWORD_DIFFICULTY_BY_WEEKDAY = (1, 2, 3, 4, 5, 6, 5)  # Mon..Sun; Sunday rates like Friday

JEOPARDY_VALUE_TO_DIFFICULTY = {
    200: 1, 400: 2, 600: 3, 800: 4, 1000: 5, 1200: 6, 1600: 7, 2000: 8,
}

DEFAULT_ABBREVIATION_PATTERNS = ("abbr",)

_EXCLUSION_REASONS = (
    "non_word_clue",
    "abbreviation",
    "multiword_answer",
    "oov_answer",
    "no_valid_clue_tokens",
    "empty_after_filter",
    "unmappable_difficulty",
)


@dataclass(frozen=True)
class RawClue:
    """One unfiltered clue-answer pair straight from a dump."""

    source: str  # "crossword" | "jeopardy"
    clue_text: str
    answer_text: str
    date: dt.date | None = None          # crossword
    dollar_value: int | None = None      # jeopardy
    round: str | None = None             # jeopardy: "single" | "double"
    category: str | None = None          # jeopardy, informational


@dataclass(frozen=True)
class QuestionRecord:
    """A cleaned record: every content token and the answer resolve in the space."""

    source: str
    raw_tokens: tuple[str, ...]
    content_tokens: tuple[str, ...]
    answer: str
    difficulty: int
    is_pun: bool

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "raw_tokens": list(self.raw_tokens),
            "content_tokens": list(self.content_tokens),
            "answer": self.answer,
            "difficulty": self.difficulty,
            "is_pun": self.is_pun,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "QuestionRecord":
        return cls(source=d["source"], raw_tokens=tuple(d["raw_tokens"]),
                   content_tokens=tuple(d["content_tokens"]), answer=d["answer"],
                   difficulty=int(d["difficulty"]), is_pun=bool(d["is_pun"]))


@dataclass
class ExclusionReport:
    """Why records were dropped. One reason per record, first matching wins.

    Reasons, in the order they are checked:

    * ``non_word_clue`` - no alphabetic token in the clue
    * ``abbreviation`` - crossword clue matches an abbreviation marker pattern
    * ``multiword_answer`` - the answer is not exactly one token
    * ``oov_answer`` - the answer resolves to no vector (lowercase, then
      capitalized fallback)
    * ``no_valid_clue_tokens`` - content tokens survived the stoplist/POS
      filter but none resolve in the embedding space
    * ``empty_after_filter`` - the stoplist/POS filter left no content tokens
    * ``unmappable_difficulty`` - quiz dollar value outside the eight
      canonical board values (wagers, legacy half-scale boards)

    ``answers_without_frequency`` counts kept records whose answer has no
    lexicon entry; it is informational, not an exclusion.
    """

    non_word_clue: int = 0
    abbreviation: int = 0
    multiword_answer: int = 0
    oov_answer: int = 0
    no_valid_clue_tokens: int = 0
    empty_after_filter: int = 0
    unmappable_difficulty: int = 0
    answers_without_frequency: int = 0

    def total_excluded(self) -> int:
        return sum(getattr(self, r) for r in _EXCLUSION_REASONS)

    def merge(self, other: "ExclusionReport") -> "ExclusionReport":
        merged = ExclusionReport()
        for f in fields(ExclusionReport):
            setattr(merged, f.name, getattr(self, f.name) + getattr(other, f.name))
        return merged

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(ExclusionReport)}


@dataclass
class ParseReport:
    rows_read: int = 0
    parsed: int = 0
    skipped_missing_fields: int = 0
    skipped_bad_date: int = 0
    skipped_missing_value: int = 0
    skipped_bad_value: int = 0
    skipped_unsupported_round: int = 0

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(ParseReport)}


@dataclass(frozen=True)
class CorpusConfig:
    """Knobs for the filtering pipeline; defaults follow the bundled lists."""

    stoplist: frozenset[str] | None = None          # None -> bundled default
    pos_map: Mapping[str, str] | None = None        # token -> POS tag; None disables POS filtering
    abbreviation_patterns: tuple[str, ...] = DEFAULT_ABBREVIATION_PATTERNS

    def resolved_stoplist(self) -> frozenset[str]:
        return self.stoplist if self.stoplist is not None else default_stoplist()

    def describe(self) -> dict:
        return {
            "stoplist": "default" if self.stoplist is None else f"custom({len(self.stoplist)})",
            "pos_filter": self.pos_map is not None,
            "abbreviation_patterns": list(self.abbreviation_patterns),
        }


_DEFAULT_STOPLIST: frozenset[str] | None = None


def default_stoplist() -> frozenset[str]:
    """The bundled stopword list (see data/stopwords.txt)."""
    global _DEFAULT_STOPLIST
    if _DEFAULT_STOPLIST is None:
        text = (resources.files("cluemetrics.data") / "stopwords.txt").read_text("utf-8")
        _DEFAULT_STOPLIST = _parse_stoplist(text)
    return _DEFAULT_STOPLIST


def _parse_stoplist(text: str) -> frozenset[str]:
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line)
    return frozenset(words)


def load_stoplist(path: str | Path) -> frozenset[str]:
    return _parse_stoplist(Path(path).read_text("utf-8"))


def load_pos_annotations(path: str | Path) -> dict[str, str]:
    """Read a ``token<TAB>tag`` file into a POS map for tokenize_and_filter."""
    pos: dict[str, str] = {}
    for n, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataFormatError(f"malformed POS annotation on line {n}: {line!r}")
        pos[parts[0].lower()] = parts[1]
    return pos


_CONTENT_POS_PREFIXES = ("NN", "VB", "JJ")
_CONTENT_POS_NAMES = {"noun", "verb", "adj", "adjective", "n", "v", "a"}


def _is_content_pos(tag: str) -> bool:
    return tag.upper().startswith(_CONTENT_POS_PREFIXES) or tag.lower() in _CONTENT_POS_NAMES


def tokenize(text: str) -> list[str]:
    """Lowercased alphabetic tokens; internal apostrophes/hyphens survive."""
    return _TOKEN_RE.findall(text.lower())


def tokenize_and_filter(text: str, stoplist: frozenset[str] | set[str],
                        pos_filter: Mapping[str, str] | None = None,
                        ) -> tuple[list[str], list[str]]:
    """Split text into (raw_tokens, content_tokens).

    Content tokens are the raw tokens minus stoplist entries and, when a POS
    map is supplied, minus tokens not tagged noun/verb/adjective (untagged
    tokens are dropped too). Empty output is legal; record-level rejection is
    build_corpus's job.
    """
    raw = tokenize(text)
    content = [t for t in raw if t not in stoplist]
    if pos_filter is not None:
        content = [t for t in content if _is_content_pos(pos_filter.get(t, ""))]
    return raw, content


def label_crossword_difficulty(weekday: int) -> int:
    """Difficulty 1-6 from the publication weekday (0=Monday ... 6=Sunday).

    Monday is easiest and the scale climbs to Saturday; Sunday carries the
    same rating as Friday.
    """
    if not 0 <= weekday <= 6:
        raise ValueError(f"weekday must be in 0..6, got {weekday}")
    return CROSSWORD_DIFFICULTY_BY_WEEKDAY[weekday]


def label_jeopardy_difficulty(dollar_value: int) -> int:
    """Difficulty 1-8 from the dollar value, rounds collapsed.

    Only the eight canonical doubled-board values map; anything else (wagers,
    legacy half-scale boards) raises and the record is excluded upstream.
    """
    try:
        return JEOPARDY_VALUE_TO_DIFFICULTY[dollar_value]
    except KeyError:
        raise ValueError(f"no difficulty mapping for value {dollar_value}") from None


def classify_pun(clue_text: str) -> bool:
    """Word-play clues are marked by a terminal question mark."""
    return clue_text.strip().endswith("?")


def _lookup_token(space: EmbeddingSpace, token: str) -> str | None:
    """Resolve a lowercased token against the space; capitalized fallback for
    proper nouns. Returns the stored casing, or None."""
    if token in space:
        return token
    cap = token.capitalize()
    if cap != token and cap in space:
        return cap
    return None


def _filter_one(raw: RawClue, space: EmbeddingSpace, stoplist: frozenset[str],
                pos_map: Mapping[str, str] | None, abbr_res: list[re.Pattern],
                report: ExclusionReport) -> QuestionRecord | None:
    raw_tokens, content = tokenize_and_filter(raw.clue_text, stoplist, pos_map)
    if not raw_tokens:
        report.non_word_clue += 1
        return None
    if raw.source == "crossword" and any(p.search(raw.clue_text) for p in abbr_res):
        report.abbreviation += 1
        return None
    answer_tokens = tokenize(raw.answer_text)
    if len(answer_tokens) != 1:
        report.multiword_answer += 1
        return None
    answer = _lookup_token(space, answer_tokens[0])
    if answer is None:
        report.oov_answer += 1
        return None
    if content:
        resolved = [r for t in content if (r := _lookup_token(space, t)) is not None]
        if not resolved:
            report.no_valid_clue_tokens += 1
            return None
    else:
        report.empty_after_filter += 1
        return None

    if raw.source == "crossword":
        difficulty = label_crossword_difficulty(raw.date.weekday())
        is_pun = classify_pun(raw.clue_text)
    else:
        try:
            difficulty = label_jeopardy_difficulty(raw.dollar_value)
        except ValueError:
            report.unmappable_difficulty += 1
            return None
        is_pun = False
    return QuestionRecord(source=raw.source, raw_tokens=tuple(raw_tokens),
                          content_tokens=tuple(resolved), answer=answer,
                          difficulty=difficulty, is_pun=is_pun)


def build_corpus(raws: Sequence[RawClue], space: EmbeddingSpace,
                 table: FrequencyTable, config: CorpusConfig | None = None,
                 parallelism: int = 1,
                 ) -> tuple[list[QuestionRecord], ExclusionReport]:
    """Filter and label raw clues into analysis-ready records.

    Exclusion rules run per record in the documented order (see
    :class:`ExclusionReport`); kept plus excluded always reconciles to the
    input count. Records keep input order regardless of parallelism, so the
    serialized corpus is byte-identical for identical inputs.
    """
    config = config or CorpusConfig()
    stoplist = config.resolved_stoplist()
    abbr_res = [re.compile(p, re.IGNORECASE) for p in config.abbreviation_patterns]

    def process(chunk: Sequence[RawClue]) -> tuple[list[QuestionRecord], ExclusionReport]:
        rep = ExclusionReport()
        recs = [r for raw in chunk
                if (r := _filter_one(raw, space, stoplist, config.pos_map, abbr_res, rep))
                is not None]
        return recs, rep

    if parallelism > 1 and len(raws) > 1:
        n_chunks = min(parallelism * 4, len(raws))
        bounds = [round(i * len(raws) / n_chunks) for i in range(n_chunks + 1)]
        chunks = [raws[bounds[i]:bounds[i + 1]] for i in range(n_chunks)]
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(process, chunks))
    else:
        results = [process(raws)]

    records: list[QuestionRecord] = []
    report = ExclusionReport()
    for recs, rep in results:
        records.extend(recs)
        report = report.merge(rep)
    report.answers_without_frequency = sum(1 for r in records if r.answer not in table)
    assert len(records) + report.total_excluded() == len(raws)
    return records, report


# ---------------------------------------------------------------------------
# Raw dump parsers
# ---------------------------------------------------------------------------

def _open_text(source: str | Path | BinaryIO | io.TextIOBase) -> tuple[io.TextIOBase, bool]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def parse_crossword_file(source: str | Path | BinaryIO) -> tuple[list[RawClue], ParseReport]:
    """Read delimited crossword rows. The header must name date, clue, and
    answer columns (case-insensitive, any order). Answers are lowercased.

    Rows with unparseable dates or blank clue/answer cells are skipped and
    counted.
    """
    stream, owned = _open_text(source)
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("crossword file is empty, expected a header row") from None
        cols = {name.strip().lower(): i for i, name in enumerate(header)}
        missing = [c for c in ("date", "clue", "answer") if c not in cols]
        if missing:
            raise DataFormatError(f"crossword header lacks column(s): {', '.join(missing)}")
        i_date, i_clue, i_answer = cols["date"], cols["clue"], cols["answer"]

        report = ParseReport()
        clues: list[RawClue] = []
        for row in reader:
            if not any(cell.strip() for cell in row):
                continue
            report.rows_read += 1
            if len(row) <= max(i_date, i_clue, i_answer):
                report.skipped_missing_fields += 1
                continue
            clue_text = row[i_clue].strip()
            answer_text = row[i_answer].strip()
            if not clue_text or not answer_text:
                report.skipped_missing_fields += 1
                continue
            try:
                date = dt.date.fromisoformat(row[i_date].strip())
            except ValueError:
                report.skipped_bad_date += 1
                continue
            report.parsed += 1
            clues.append(RawClue(source="crossword", clue_text=clue_text,
                                 answer_text=answer_text.lower(), date=date))
        return clues, report
    finally:
        if owned:
            stream.close()


_VALUE_RE = re.compile(r"^\$?\s*([0-9][0-9,]*)$")


def _parse_dollar_value(value) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value if value > 0 else None
    if isinstance(value, float):
        return int(value) if value > 0 and value == int(value) else None
    m = _VALUE_RE.match(str(value).strip())
    if not m:
        return None
    parsed = int(m.group(1).replace(",", ""))
    return parsed if parsed > 0 else None


def _normalize_round(value) -> str | None:
    text = str(value or "").strip().lower()
    if "final" in text or "tiebreak" in text:
        return None
    if "double" in text:
        return "double"
    return "single"


def parse_jeopardy_file(source: str | Path | BinaryIO) -> tuple[list[RawClue], ParseReport]:
    """Read quiz records from JSON (a top-level array or one object per line).

    Each record needs question, answer, and value fields; round and category
    are carried through when present. Values accept ints or strings like
    ``"$1,200"``. Records with missing/invalid values, blank text, or
    final/tiebreaker rounds are skipped and counted.
    """
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    else:
        data = source.read()
    text = data.decode("utf-8-sig")
    stripped = text.lstrip()
    if not stripped:
        raise DataFormatError("jeopardy file is empty")
    if stripped.startswith("["):
        try:
            objs = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"invalid JSON: {e}") from None
        if not isinstance(objs, list):
            raise DataFormatError("expected a JSON array of records")
    else:
        objs = []
        for n, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                objs.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise DataFormatError(f"invalid JSON on line {n}: {e}") from None

    report = ParseReport()
    clues: list[RawClue] = []
    for obj in objs:
        if not isinstance(obj, dict):
            report.skipped_missing_fields += 1
            report.rows_read += 1
            continue
        report.rows_read += 1
        question = str(obj.get("question") or "").strip()
        answer = str(obj.get("answer") or "").strip()
        if not question or not answer:
            report.skipped_missing_fields += 1
            continue
        if "value" not in obj or obj.get("value") in (None, ""):
            report.skipped_missing_value += 1
            continue
        value = _parse_dollar_value(obj.get("value"))
        if value is None:
            report.skipped_bad_value += 1
            continue
        rnd = _normalize_round(obj.get("round"))
        if rnd is None:
            report.skipped_unsupported_round += 1
            continue
        report.parsed += 1
        clues.append(RawClue(source="jeopardy", clue_text=question,
                             answer_text=answer.lower(), dollar_value=value,
                             round=rnd, category=obj.get("category")))
    return clues, report


# ---------------------------------------------------------------------------
# Corpus file I/O: one header object, then one record per line (JSON)
# ---------------------------------------------------------------------------

def write_corpus(records: Sequence[QuestionRecord], target: str | Path,
                 provenance: Mapping | None = None) -> None:
    header = {"kind": "corpus", "format_version": CORPUS_FORMAT_VERSION,
              "count": len(records)}
    if provenance:
        header["provenance"] = dict(provenance)
    lines = [canonical_json(header)]
    lines.extend(canonical_json(r.to_dict()) for r in records)
    Path(target).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_corpus(source: str | Path) -> tuple[list[QuestionRecord], dict]:
    lines = Path(source).read_text("utf-8").splitlines()
    if not lines:
        raise DataFormatError("corpus file is empty")
    header = json.loads(lines[0])
    if not isinstance(header, dict) or header.get("kind") != "corpus":
        raise DataFormatError("not a corpus file (missing header line)")
    if header.get("format_version") != CORPUS_FORMAT_VERSION:
        raise DataFormatError(f"unsupported corpus format version "
                              f"{header.get('format_version')!r}")
    records = [QuestionRecord.from_dict(json.loads(line))
               for line in lines[1:] if line.strip()]
    if header.get("count") != len(records):
        raise DataFormatError(f"corpus header declares {header.get('count')} records, "
                              f"found {len(records)}")
    return records, header
