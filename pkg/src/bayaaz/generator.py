"""Generation: temperature sampling, fixed-length decoding, interactive word steering.

Temperature follows the standard convention: sampling distribution
q ~ p^(1/T), so higher T means higher entropy.  T = 0 is greedy argmax
with lowest-id tie-break.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import DatasetMode, END_ID, PAD_ID
from .errors import ChoiceError, VocabError
from .neuralnet import ModelParams, forward
from .trainer import Checkpoint

WORD_BOUNDARY = {" ", "\n"}
MAX_WORD_CHARS = 24     # safety cap for runaway beams


@dataclass(frozen=True)
class GenerationRequest:
    mode: DatasetMode = DatasetMode.MISRA
    length: int = 300
    temperature: float = 0.8
    prefix: str = ""
    seed: int | None = None

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be at least 1")
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must lie in [0, 2] (0 = greedy)")


@dataclass(frozen=True)
class GenerationResult:
    text: str                        # prefix included
    token_logprobs: list[float]      # model log-prob of each generated token


@dataclass(frozen=True)
class InteractiveSession:
    session_id: str
    context: str
    top_n: int = 5
    pending: list[tuple[str, float]] = field(default_factory=list)


def tempered(probs: np.ndarray, temperature: float) -> np.ndarray:
    """q ~ p^(1/T); T=1 is identity, T->0 sharpens toward the argmax."""
    if temperature <= 0:
        raise ValueError("tempered() needs T > 0; handle T = 0 as argmax")
    logp = np.log(np.maximum(probs, 1e-300)) / temperature
    logp -= logp.max()
    q = np.exp(logp)
    return q / q.sum()


def sample_next(params: ModelParams, context: list[int], temperature: float,
                rng: np.random.Generator) -> int:
    probs, _ = forward(params, context)
    if temperature == 0:
        return int(np.argmax(probs))
    q = tempered(probs, temperature)
    return int(rng.choice(len(q), p=q))


def generate(ck: Checkpoint, req: GenerationRequest) -> GenerationResult:
    """Sample up to req.length tokens after the prefix; END (or PAD) stops early."""
    vocab = ck.vocab
    try:
        context = vocab.encode(req.prefix)
    except VocabError:
        bad = next(ch for ch in req.prefix if ch not in vocab.index)
        raise VocabError(f"prefix character {bad!r} not in model vocabulary") from None
    if not context:
        context = [END_ID]     # bootstrap token when no prefix is given
    seq_len = ck.config.seq_len
    rng = np.random.default_rng(req.seed)

    generated: list[int] = []
    logprobs: list[float] = []
    for _ in range(req.length):
        window = (context + generated)[-seq_len:]
        probs, _ = forward(ck.params, window)
        if req.temperature == 0:
            tok = int(np.argmax(probs))
        else:
            tok = int(rng.choice(len(probs), p=tempered(probs, req.temperature)))
        if tok in (END_ID, PAD_ID):
            break
        generated.append(tok)
        logprobs.append(float(np.log(max(float(probs[tok]), 1e-12))))
    return GenerationResult(text=req.prefix + vocab.decode(generated),
                            token_logprobs=logprobs)


def top_n_words(ck: Checkpoint, context: str, n: int,
                beam_width: int | None = None,
                max_word_chars: int = MAX_WORD_CHARS) -> list[tuple[str, float]]:
    """Character-level beam search for the n best next words.

    A word ends at space, newline or END; leading boundary characters are
    consumed so a context without a trailing space still yields whole
    words.  Scores are summed token log-probs including the terminating
    boundary; per word the best-scoring completion wins.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    width = beam_width if beam_width is not None else 4 * n
    vocab = ck.vocab
    seq_len = ck.config.seq_len
    context_ids = vocab.encode(context)
    if not context_ids:
        context_ids = [END_ID]

    # Beam entries: (ids so far, score, word chars so far)
    beams: list[tuple[list[int], float, str]] = [(context_ids, 0.0, "")]
    completed: dict[str, float] = {}
    for _ in range(max_word_chars + 1):   # +1: a full-length word still needs its boundary
        if not beams:
            break
        # Path scores only fall, so once the best live beam cannot beat the
        # n-th best finished word the search is over.
        if len(completed) >= n:
            nth_best = sorted(completed.values(), reverse=True)[n - 1]
            if beams[0][1] <= nth_best:
                break
        candidates: list[tuple[list[int], float, str]] = []
        for ids, score, word in beams:
            probs, _ = forward(ck.params, ids[-seq_len:])
            logp = np.log(np.maximum(probs, 1e-12))
            order = np.argsort(-logp)[:width]
            for tok in order:
                tok = int(tok)
                new_score = score + float(logp[tok])
                ch = vocab.tokens[tok] if tok not in (PAD_ID, END_ID) else ""
                if tok in (PAD_ID, END_ID) or ch in WORD_BOUNDARY:
                    if word:
                        if new_score > completed.get(word, -np.inf):
                            completed[word] = new_score
                    elif tok not in (PAD_ID, END_ID):
                        # leading boundary: consume and keep searching
                        candidates.append((ids + [tok], new_score, ""))
                elif len(word) < max_word_chars:
                    candidates.append((ids + [tok], new_score, word + ch))
        candidates.sort(key=lambda b: -b[1])
        beams = candidates[:width]
    ranked = sorted(completed.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:n]


def start_session(ck: Checkpoint, context: str, top_n: int = 5) -> InteractiveSession:
    pending = top_n_words(ck, context, top_n)
    return InteractiveSession(session_id=uuid.uuid4().hex, context=context,
                              top_n=top_n, pending=pending)


def advance_session(ck: Checkpoint, session: InteractiveSession,
                    choice: int) -> InteractiveSession:
    """Append the chosen pending word (plus a space) and recompute suggestions."""
    if not 0 <= choice < len(session.pending):
        raise ChoiceError(f"choice {choice} out of range for {len(session.pending)} suggestions")
    word = session.pending[choice][0]
    context = session.context + word + " "
    pending = top_n_words(ck, context, session.top_n)
    return replace(session, context=context, pending=pending)


def format_choices(pending: list[tuple[str, float]]) -> str:
    """The numbered next-word prompt shown in interactive mode."""
    lines = ["Choose next word:"]
    lines += [f"{i + 1}. {word}" for i, (word, _) in enumerate(pending)]
    return "\n".join(lines)
