"""bayaaz: a poet's notebook, machine edition.

Character-level LSTM language models for Urdu/Hindi poetry, with
temperature-controlled generation, interactive word steering, corpus
plagiarism checks, Devanagari/Perso-Arabic transliteration and
syllable-weight meter analysis.
"""

__version__ = "0.1.0"
