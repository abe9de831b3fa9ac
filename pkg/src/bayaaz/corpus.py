"""Corpus ingestion, cleaning, sample splitting and vocabulary building.

Raw corpus files are plain Unicode text with one misra (half-verse) per
line.  Ghazals are separated by blank lines or by a line of "====";
lines starting with "#" are comments.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyInputError, VocabError

logger = logging.getLogger(__name__)

SCRIPT_TAGS = ("devanagari", "perso-arabic", "roman")

# Tokens reserved at the bottom of every vocabulary.  Multi-character
# sentinels cannot collide with real single-codepoint tokens.
PAD_TOKEN = "<PAD>"
END_TOKEN = "<END>"
PAD_ID = 0
END_ID = 1

_LATIN_RE = re.compile(r"[A-Za-z]")
_MARKER_RE = re.compile(r"^={4,}$")


def normalize_script_tag(value: str) -> str:
    """Map user-facing script names onto the canonical tags."""
    aliases = {"urdu": "perso-arabic", "hindi": "devanagari"}
    tag = aliases.get(value.lower(), value.lower())
    if tag not in SCRIPT_TAGS:
        raise ValueError(f"unknown script {value!r}; expected one of {SCRIPT_TAGS} or urdu/hindi")
    return tag


@dataclass(frozen=True)
class RawCorpus:
    """Concatenation of raw poetry files, order preserved."""

    files: list[tuple[str, str]]    # (source name, text)
    script: str

    def __post_init__(self):
        if self.script not in SCRIPT_TAGS:
            raise ValueError(f"bad script tag {self.script!r}")


@dataclass(frozen=True)
class CleanCorpus:
    """Normalized misra lines partitioned into ghazals.

    ghazal_bounds are half-open (start, end) ranges over `lines`,
    disjoint, ordered and jointly covering every line.
    """

    lines: list[str]
    ghazal_bounds: list[tuple[int, int]]
    script: str

    def ghazals(self) -> list[list[str]]:
        return [self.lines[a:b] for a, b in self.ghazal_bounds]


@dataclass(frozen=True)
class CleaningReport:
    lines_before: int
    removed_english: int
    removed_empty: int
    removed_marker: int
    removed_other: int
    lines_after: int
    ghazal_count: int
    sher_count: int

    def as_items(self) -> list[tuple[str, int]]:
        """Key-value pairs in a stable order, for the text report."""
        return [
            ("lines_before", self.lines_before),
            ("removed_english", self.removed_english),
            ("removed_empty", self.removed_empty),
            ("removed_marker", self.removed_marker),
            ("removed_other", self.removed_other),
            ("lines_after", self.lines_after),
            ("ghazal_count", self.ghazal_count),
            ("sher_count", self.sher_count),
        ]

    def format_text(self) -> str:
        return "\n".join(f"{k}\t{v}" for k, v in self.as_items()) + "\n"


class DatasetMode(str, Enum):
    MISRA = "misra"
    SHER = "sher"
    GHAZAL = "ghazal"


@dataclass(frozen=True)
class SampleSet:
    mode: DatasetMode
    samples: list[str]
    script: str


@dataclass(frozen=True)
class CharVocab:
    """Codepoint inventory: PAD, END, then corpus codepoints in first-occurrence order."""

    tokens: list[str]
    index: dict[str, int] = field(compare=False, default_factory=dict)

    @classmethod
    def from_tokens(cls, tokens: list[str]) -> "CharVocab":
        index = {tok: i for i, tok in enumerate(tokens)}
        if len(index) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")
        return cls(tokens=tokens, index=index)

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, text: str) -> list[int]:
        try:
            return [self.index[ch] for ch in text]
        except KeyError as exc:
            raise VocabError(f"character {exc.args[0]!r} not in vocabulary") from None

    def decode(self, ids: list[int]) -> str:
        out = []
        for i in ids:
            if not 0 <= i < len(self.tokens):
                raise VocabError(f"token id {i} out of range for vocab of {len(self.tokens)}")
            if i in (PAD_ID, END_ID):
                continue
            out.append(self.tokens[i])
        return "".join(out)


def ingest_raw(paths: list[str], script: str) -> RawCorpus:
    """Read raw corpus files in order.

    Unreadable paths raise OSError; undecodable bytes raise
    UnicodeDecodeError (which carries the byte offset).
    """
    files = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            files.append((str(path), fh.read()))
    return RawCorpus(files=files, script=normalize_script_tag(script))


def clean(raw: RawCorpus) -> tuple[CleanCorpus, CleaningReport]:
    """Normalize and filter raw lines, recording ghazal boundaries.

    Every input line lands in exactly one bucket (kept, english, empty,
    marker, other), so lines_after + sum(removed) == lines_before.
    Blank lines and "====" markers both end the current ghazal; comment
    lines are ignored without closing it.
    """
    lines: list[str] = []
    bounds: list[tuple[int, int]] = []
    removed_english = removed_empty = removed_marker = removed_other = 0
    lines_before = 0
    ghazal_start = 0

    def close_ghazal():
        nonlocal ghazal_start
        if len(lines) > ghazal_start:
            bounds.append((ghazal_start, len(lines)))
            ghazal_start = len(lines)

    for _, text in raw.files:
        for rawline in text.splitlines():
            lines_before += 1
            line = unicodedata.normalize("NFC", rawline).strip()
            if not line:
                removed_empty += 1
                close_ghazal()
            elif _MARKER_RE.match(line):
                removed_marker += 1
                close_ghazal()
            elif line.startswith("#"):
                removed_other += 1
            elif _LATIN_RE.search(line):
                removed_english += 1
            else:
                lines.append(line)
        close_ghazal()   # a ghazal never spans files

    sher_count = sum((b - a) // 2 for a, b in bounds)
    report = CleaningReport(
        lines_before=lines_before,
        removed_english=removed_english,
        removed_empty=removed_empty,
        removed_marker=removed_marker,
        removed_other=removed_other,
        lines_after=len(lines),
        ghazal_count=len(bounds),
        sher_count=sher_count,
    )
    corpus = CleanCorpus(lines=lines, ghazal_bounds=bounds, script=raw.script)
    return corpus, report


def split(corpus: CleanCorpus, mode: DatasetMode) -> SampleSet:
    """Cut the corpus into training samples for one generation mode."""
    if not corpus.lines:
        raise EmptyInputError("cannot split an empty corpus")
    mode = DatasetMode(mode)
    samples: list[str] = []
    if mode is DatasetMode.MISRA:
        samples = list(corpus.lines)
    elif mode is DatasetMode.SHER:
        dropped = 0
        for a, b in corpus.ghazal_bounds:
            chunk = corpus.lines[a:b]
            for i in range(0, len(chunk) - 1, 2):
                samples.append(chunk[i] + "\n" + chunk[i + 1])
            if len(chunk) % 2:
                dropped += 1
        if dropped:
            logger.warning("sher mode dropped %d trailing odd line(s)", dropped)
    else:
        samples = ["\n".join(corpus.lines[a:b]) for a, b in corpus.ghazal_bounds]
    return SampleSet(mode=mode, samples=samples, script=corpus.script)


def build_vocab(samples: SampleSet) -> CharVocab:
    """Collect distinct codepoints in first-occurrence order, after PAD and END."""
    if not samples.samples:
        raise EmptyInputError("cannot build a vocabulary from an empty sample set")
    tokens = [PAD_TOKEN, END_TOKEN]
    seen = set(tokens)
    for sample in samples.samples:
        for ch in sample:
            if ch not in seen:
                seen.add(ch)
                tokens.append(ch)
    return CharVocab.from_tokens(tokens)


def save_clean_corpus(corpus: CleanCorpus, path: str) -> None:
    """Write a clean corpus back to the raw file format (==== between ghazals)."""
    parts = ["\n".join(corpus.lines[a:b]) for a, b in corpus.ghazal_bounds]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n====\n".join(parts))
        if parts:
            fh.write("\n")


def load_clean_corpus(path: str, script: str) -> CleanCorpus:
    """Ingest + clean a single file already in the raw format."""
    corpus, _ = clean(ingest_raw([path], script))
    return corpus
