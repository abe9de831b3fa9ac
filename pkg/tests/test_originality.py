import pytest
from hypothesis import given, settings, strategies as st

from bayaaz.corpus import CleanCorpus
from bayaaz.errors import EmptyInputError
from bayaaz.originality import (
    build_index,
    check,
    longest_common_run,
    normalize_line,
)


def corpus_of(lines, bounds=None):
    bounds = bounds or ([(0, len(lines))] if lines else [])
    return CleanCorpus(lines=list(lines), ghazal_bounds=bounds, script="devanagari")


# --- independent oracle helpers -------------------------------------------

def brute_force_run(a, b):
    """All contiguous subruns of a, checked for containment in b."""
    best = 0
    for i in range(len(a)):
        for j in range(i + 1, len(a) + 1):
            sub = a[i:j]
            for k in range(len(b) - len(sub) + 1):
                if b[k:k + len(sub)] == sub:
                    best = max(best, len(sub))
    return best


def brute_force_check(text, corpus_lines, min_run):
    exact, partial = [], []
    for q in text.split("\n"):
        nq = normalize_line(q)
        if not nq:
            continue
        qw = nq.split()
        for i, line in enumerate(corpus_lines):
            nl = normalize_line(line)
            if nq == nl:
                exact.append((q, i))
            else:
                run = brute_force_run(qw, nl.split())
                if run >= min_run:
                    partial.append((q, i, run))
    return exact, partial


# --- tests -----------------------------------------------------------------

class TestNormalize:
    def test_strips_punctuation_and_marks(self):
        # combining vowel signs and punctuation go away, base letters stay
        assert normalize_line("दिल") == "दल"
        assert normalize_line("क्या?  है") == "कय ह"
        assert normalize_line("एक, दो!") == normalize_line("एक दो")

    def test_collapses_whitespace(self):
        assert normalize_line("  एक   दो  ") == "एक द"


class TestLongestCommonRun:
    def test_simple(self):
        assert longest_common_run("a b c d".split(), "x b c d y".split()) == 3

    def test_no_overlap(self):
        assert longest_common_run("a b".split(), "c d".split()) == 0

    def test_matches_brute_force(self):
        import random
        rnd = random.Random(5)
        vocab = list("abcdef")
        for _ in range(200):
            a = [rnd.choice(vocab) for _ in range(rnd.randint(0, 8))]
            b = [rnd.choice(vocab) for _ in range(rnd.randint(0, 8))]
            assert longest_common_run(a, b) == brute_force_run(a, b)


class TestBuildIndex:
    def test_two_lines_two_keys(self):
        idx = build_index(corpus_of(["एक दो", "तीन चार"]))
        assert len(idx.exact) == 2

    def test_duplicates_share_key(self):
        idx = build_index(corpus_of(["एक दो", "एक दो"]))
        assert len(idx.exact) == 1
        assert len(next(iter(idx.exact.values()))) == 2

    def test_punctuation_variants_share_key(self):
        idx = build_index(corpus_of(["एक, दो!", "एक दो"]))
        assert len(idx.exact) == 1

    def test_empty_corpus(self):
        with pytest.raises(EmptyInputError):
            build_index(corpus_of([]))


FIXTURE = [
    "हमको मालूम है जन्नत की हक़ीक़त लेकिन",
    "दिल के ख़ुश रखने को ग़ालिब ये ख़याल अच्छा है",
    "रगों में दौड़ते फिरने के हम नहीं क़ाइल",
    "जब आँख ही से न टपका तो फिर लहू क्या है",
]


class TestCheck:
    def test_verbatim_line_is_exact(self):
        idx = build_index(corpus_of(FIXTURE))
        rep = check(FIXTURE[0], idx)
        assert not rep.clean
        assert len(rep.exact_matches) == 1
        assert rep.exact_matches[0].corpus_lines == [FIXTURE[0]]

    def test_one_word_substitution_is_partial(self):
        # 6+ word line with one middle word replaced: common run >= 3 remains.
        idx = build_index(corpus_of(FIXTURE))
        query = "रगों में दौड़ते चलने के हम नहीं क़ाइल"
        rep = check(query, idx)
        assert rep.exact_matches == []
        assert len(rep.partial_matches) == 1
        m = rep.partial_matches[0]
        assert m.corpus_line == FIXTURE[2]
        assert m.run_length >= 3
        assert m.run_length == brute_force_run(
            normalize_line(query).split(), normalize_line(FIXTURE[2]).split())

    def test_gibberish_is_clean(self):
        idx = build_index(corpus_of(FIXTURE))
        rep = check("पगडंडी चुपचाप अकेली", idx)
        assert rep.clean
        assert rep.exact_matches == [] and rep.partial_matches == []

    def test_min_run_validation(self):
        idx = build_index(corpus_of(FIXTURE))
        with pytest.raises(ValueError):
            check("क्या", idx, min_run=1)

    def test_min_run_two_uses_word_postings(self):
        idx = build_index(corpus_of(["एक दो तीन"]))
        rep = check("चार एक दो", idx, min_run=2)
        assert len(rep.partial_matches) == 1
        assert rep.partial_matches[0].run_length == 2

    def test_report_serialization(self):
        idx = build_index(corpus_of(FIXTURE))
        rep = check(FIXTURE[0] + "\nपगडंडी", idx)
        d = rep.to_dict()
        assert d["clean"] is False
        assert d["exact_matches"][0]["query_line"] == FIXTURE[0]
        assert "EXACT" in rep.format_text()


WORDS = ["dil", "jaan", "gham", "ishq", "raat", "chand", "phool", "aag"]


@st.composite
def small_corpus_and_query(draw):
    n_lines = draw(st.integers(1, 12))
    lines = []
    for _ in range(n_lines):
        k = draw(st.integers(1, 7))
        lines.append(" ".join(draw(st.sampled_from(WORDS)) for _ in range(k)))
    k = draw(st.integers(1, 7))
    query = " ".join(draw(st.sampled_from(WORDS)) for _ in range(k))
    min_run = draw(st.integers(2, 4))
    return lines, query, min_run


class TestOracleAgreement:
    @settings(max_examples=150, deadline=None)
    @given(small_corpus_and_query())
    def test_agrees_with_brute_force(self, case):
        lines, query, min_run = case
        idx = build_index(corpus_of(lines))
        rep = check(query, idx, min_run=min_run)

        oracle_exact, oracle_partial = brute_force_check(query, lines, min_run)
        got_exact = {(m.query_line, i) for m in rep.exact_matches for _, i in m.locations}
        assert got_exact == set(oracle_exact)

        # exact pairs are excluded from the reported partials
        exact_ids = {i for _, i in oracle_exact}
        oracle_partial = {(q, lines[i], r) for q, i, r in oracle_partial if i not in exact_ids}
        got_partial = {(m.query_line, m.corpus_line, m.run_length) for m in rep.partial_matches}
        # duplicate corpus lines may collapse to identical triples on both sides
        assert got_partial == oracle_partial
