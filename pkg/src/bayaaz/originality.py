"""Plagiarism checking of generated text against the training corpus.

Lines are compared in a normalized form (punctuation and combining marks
stripped, whitespace collapsed).  Partial overlap is a common contiguous
word run of at least `min_run` words; posting lists only pre-filter
candidates, the run length itself is always verified pairwise.
"""

from __future__ import annotations

import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field

from .corpus import CleanCorpus
from .errors import EmptyInputError

NGRAM = 3


def normalize_line(line: str) -> str:
    """Strip punctuation and combining marks, collapse whitespace."""
    out = []
    for ch in unicodedata.normalize("NFC", line):
        cat = unicodedata.category(ch)
        if cat.startswith("P") or cat.startswith("M"):
            continue
        out.append(ch)
    return " ".join("".join(out).split())


@dataclass
class LineIndex:
    lines: list[str]                                        # verbatim corpus lines
    line_ghazal: list[int]                                  # line id -> ghazal index
    exact: dict[str, list[tuple[int, int]]]                 # normalized -> (ghazal, line id)
    words: list[list[str]]                                  # normalized words per line
    trigrams: dict[tuple[str, ...], list[int]] = field(default_factory=dict)
    word_postings: dict[str, list[int]] = field(default_factory=dict)


@dataclass(frozen=True)
class ExactMatch:
    query_line: str
    locations: list[tuple[int, int]]       # (ghazal index, line index)
    corpus_lines: list[str]


@dataclass(frozen=True)
class PartialMatch:
    query_line: str
    corpus_line: str
    run_length: int


@dataclass(frozen=True)
class PlagiarismReport:
    exact_matches: list[ExactMatch]
    partial_matches: list[PartialMatch]
    clean: bool

    def to_dict(self) -> dict:
        return {
            "clean": self.clean,
            "exact_matches": [
                {"query_line": m.query_line,
                 "locations": [list(loc) for loc in m.locations],
                 "corpus_lines": m.corpus_lines}
                for m in self.exact_matches
            ],
            "partial_matches": [
                {"query_line": m.query_line, "corpus_line": m.corpus_line,
                 "run_length": m.run_length}
                for m in self.partial_matches
            ],
        }

    def format_text(self) -> str:
        if self.clean:
            return "clean: no matches against the corpus\n"
        parts = []
        for m in self.exact_matches:
            parts.append(f"EXACT\t{m.query_line}")
            for line in m.corpus_lines:
                parts.append(f"\tcorpus: {line}")
        for m in self.partial_matches:
            parts.append(f"PARTIAL\trun={m.run_length}\t{m.query_line}")
            parts.append(f"\tcorpus: {m.corpus_line}")
        return "\n".join(parts) + "\n"


def longest_common_run(a: list[str], b: list[str]) -> int:
    """Length of the longest common contiguous word run (classic DP row sweep)."""
    if not a or not b:
        return 0
    best = 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
                if cur[j] > best:
                    best = cur[j]
        prev = cur
    return best


def build_index(corpus: CleanCorpus) -> LineIndex:
    """Index every corpus line under its normalized form."""
    if not corpus.lines:
        raise EmptyInputError("cannot index an empty corpus")
    line_ghazal = [0] * len(corpus.lines)
    for g, (a, b) in enumerate(corpus.ghazal_bounds):
        for i in range(a, b):
            line_ghazal[i] = g
    exact: dict[str, list[tuple[int, int]]] = defaultdict(list)
    words: list[list[str]] = []
    trigrams: dict[tuple[str, ...], list[int]] = defaultdict(list)
    word_postings: dict[str, list[int]] = defaultdict(list)
    for i, line in enumerate(corpus.lines):
        norm = normalize_line(line)
        exact[norm].append((line_ghazal[i], i))
        ws = norm.split()
        words.append(ws)
        for w in set(ws):
            word_postings[w].append(i)
        for k in range(len(ws) - NGRAM + 1):
            key = tuple(ws[k:k + NGRAM])
            if not trigrams[key] or trigrams[key][-1] != i:
                trigrams[key].append(i)
    return LineIndex(lines=list(corpus.lines), line_ghazal=line_ghazal,
                     exact=dict(exact), words=words,
                     trigrams=dict(trigrams), word_postings=dict(word_postings))


def _candidates(index: LineIndex, query_words: list[str], min_run: int) -> list[int]:
    seen: set[int] = set()
    if min_run >= NGRAM:
        for k in range(len(query_words) - NGRAM + 1):
            seen.update(index.trigrams.get(tuple(query_words[k:k + NGRAM]), ()))
    else:
        # runs of 2 need only one shared word to be found
        for w in set(query_words):
            seen.update(index.word_postings.get(w, ()))
    return sorted(seen)


def check(text: str, index: LineIndex, min_run: int = 3) -> PlagiarismReport:
    """Report exact and partial overlaps of each query line with the corpus."""
    if min_run < 2:
        raise ValueError("min_run must be at least 2")
    exact_matches: list[ExactMatch] = []
    partial_matches: list[PartialMatch] = []
    for query_line in text.split("\n"):
        norm = normalize_line(query_line)
        if not norm:
            continue
        locations = index.exact.get(norm, [])
        if locations:
            exact_matches.append(ExactMatch(
                query_line=query_line,
                locations=list(locations),
                corpus_lines=[index.lines[i] for _, i in locations]))
        qwords = norm.split()
        exact_ids = {i for _, i in locations}
        for cand in _candidates(index, qwords, min_run):
            if cand in exact_ids:
                continue    # already reported as exact
            run = longest_common_run(qwords, index.words[cand])
            if run >= min_run:
                partial_matches.append(PartialMatch(
                    query_line=query_line,
                    corpus_line=index.lines[cand],
                    run_length=run))
    clean = not exact_matches and not partial_matches
    return PlagiarismReport(exact_matches=exact_matches,
                            partial_matches=partial_matches, clean=clean)
