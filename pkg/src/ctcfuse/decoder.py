"""CTC decoding: greedy collapse, prefix beam search, and an exact oracle.

The beam search follows the classic prefix formulation: each hypothesis is
a collapsed output prefix carrying separate probability mass for paths
ending in blank vs non-blank, so merging paths that collapse to the same
prefix is exact.  An optional n-gram model is shallow-fused: every
completed word adds ``alpha * ln P_lm(word | context) + beta`` to the
hypothesis score (LM log10 scores are converted to natural log so alpha is
dimensionless against the acoustic log-probabilities).

``oracle_decode`` enumerates every frame path and is the ground truth the
beam search is tested against; with ``beam_width >= V**T`` the two agree
to float precision.

Vocabulary, EmissionMatrix, ArpaModel, and DecoderParams are immutable;
decoding one utterance is sequential, but utterances are independent and
``batch_decode`` may fan out across them with order-stable, deterministic
results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .ngram_lm import BOS, EOS, ArpaModel, LmState

__all__ = [
    "BLANK_TOKEN",
    "LN10",
    "Vocabulary",
    "EmissionMatrix",
    "DecoderParams",
    "BeamHypothesis",
    "default_vocabulary",
    "ctc_collapse",
    "greedy_decode",
    "beam_hypotheses",
    "beam_search_decode",
    "oracle_decode",
    "batch_decode",
]

BLANK_TOKEN = "<blank>"
NORWEGIAN_LETTERS = "abcdefghijklmnopqrstuvwxyzæøå"
LN10 = math.log(10.0)
NEG_INF = float("-inf")


def _log_add(a: float, b: float) -> float:
    """Numerically stable log(exp(a) + exp(b))."""
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@dataclass(frozen=True)
class Vocabulary:
    """Ordered CTC output symbols with designated blank and word delimiter.

    The delimiter's symbol is the space character; the blank's symbol
    (conventionally ``<blank>``) never reaches output text.
    """

    tokens: tuple[str, ...]
    blank_index: int = 0
    delimiter_index: int = 1

    def __post_init__(self) -> None:
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")
        for name, index in (("blank", self.blank_index), ("delimiter", self.delimiter_index)):
            if not 0 <= index < len(self.tokens):
                raise ValueError(f"{name}_index {index} out of range")
        if self.blank_index == self.delimiter_index:
            raise ValueError("blank and delimiter must be distinct tokens")
        delimiter = self.tokens[self.delimiter_index]
        for i, token in enumerate(self.tokens):
            if i not in (self.blank_index, self.delimiter_index) and delimiter in token:
                raise ValueError(f"token {token!r} contains the delimiter symbol")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def delimiter(self) -> str:
        return self.tokens[self.delimiter_index]


def default_vocabulary(include_hesitation: bool = False) -> Vocabulary:
    """Blank + space + the Norwegian letters a-z æ ø å (optionally + ĥ)."""
    tokens = [BLANK_TOKEN, " ", *NORWEGIAN_LETTERS]
    if include_hesitation:
        tokens.append("ĥ")
    return Vocabulary(tuple(tokens), blank_index=0, delimiter_index=1)


@dataclass(frozen=True, eq=False)
class EmissionMatrix:
    """T x V per-frame natural-log probabilities from an acoustic model.

    Every row must be a normalized distribution (logsumexp 0 within 1e-4,
    loose enough for float32 storage).
    """

    log_probs: np.ndarray

    def __post_init__(self) -> None:
        array = np.asarray(self.log_probs, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError(f"emissions must be a T x V matrix, got shape {array.shape}")
        row_sums = np.logaddexp.reduce(array, axis=1)
        worst = float(np.max(np.abs(row_sums)))
        if worst > 1e-4:
            raise ValueError(f"emission rows must be normalized; worst |logsumexp| = {worst:.3g}")
        object.__setattr__(self, "log_probs", array)

    @property
    def frames(self) -> int:
        return self.log_probs.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.log_probs.shape[1]


@dataclass(frozen=True)
class DecoderParams:
    """Beam-search settings; defaults mirror the tuned fusion weights."""

    alpha: float = 0.5
    beta: float = 0.001
    beam_width: int = 100
    prune_log_floor: Optional[float] = None
    score_eos: bool = True

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")


@dataclass
class BeamHypothesis:
    """One surviving prefix during search (exposed mainly for inspection)."""

    prefix: tuple[int, ...]
    log_p_blank: float
    log_p_nonblank: float
    lm_context: Optional[LmState]
    partial_word: str
    fused_score: float


def ctc_collapse(path: Sequence[int], vocab: Vocabulary) -> str:
    """Collapse a frame path: merge adjacent repeats, drop blanks, map to text."""
    out: list[str] = []
    previous = None
    for index in path:
        if not 0 <= index < len(vocab):
            raise ValueError(f"token index {index} out of range for vocabulary of {len(vocab)}")
        if index != previous and index != vocab.blank_index:
            out.append(vocab.tokens[index])
        previous = index
    return "".join(out)


def greedy_decode(emissions: EmissionMatrix, vocab: Vocabulary) -> str:
    """Collapse the per-frame argmax path (ties go to the lowest index)."""
    _check_width(emissions, vocab)
    path = np.argmax(emissions.log_probs, axis=1)
    return ctc_collapse(path.tolist(), vocab)


def _check_width(emissions: EmissionMatrix, vocab: Vocabulary) -> None:
    if emissions.vocab_size != len(vocab):
        raise ValueError(
            f"emission width {emissions.vocab_size} does not match "
            f"vocabulary size {len(vocab)}"
        )


@dataclass
class _PrefixInfo:
    # Word-level bookkeeping per prefix.  A prefix determines its text, so
    # every path reaching the same prefix shares this state.
    text: str = ""
    partial: str = ""
    context: tuple[str, ...] = (BOS,)
    lm_ln: float = 0.0  # sum of ln P_lm over completed words
    words: int = 0


class _Fusion:
    """Shared scoring rules between the beam search and the oracle."""

    def __init__(self, lm: Optional[ArpaModel], params: DecoderParams):
        self.lm = lm
        self.params = params
        self.active = lm is not None

    def word_ln(self, context: tuple[str, ...], word: str) -> float:
        if self.lm is None or self.params.alpha == 0.0:
            return 0.0
        return self.lm.conditional_log10(context, word) * LN10

    def advance(self, context: tuple[str, ...], word: str) -> tuple[str, ...]:
        assert self.lm is not None
        return self.lm.advance(LmState(context), word).context

    def score(self, acoustic: float, lm_ln: float, words: int) -> float:
        if not self.active:
            return acoustic
        return acoustic + self.params.alpha * lm_ln + self.params.beta * words

    def finalize(self, lm_ln: float, words: int, partial: str, context: tuple[str, ...]) -> tuple[float, int]:
        """Apply end-of-utterance scoring: dangling word, then </s>."""
        if not self.active or not self.params.score_eos:
            return lm_ln, words
        if partial:
            lm_ln += self.word_ln(context, partial)
            words += 1
            if self.lm is not None and self.params.alpha > 0.0:
                context = self.advance(context, partial)
        if self.params.alpha > 0.0:
            lm_ln += self.word_ln(context, EOS)
        return lm_ln, words


_Search = tuple[
    list[tuple[int, ...]],
    dict[tuple[int, ...], list[float]],
    dict[tuple[int, ...], "_PrefixInfo"],
]


def _search(
    emissions: EmissionMatrix,
    vocab: Vocabulary,
    lm: Optional[ArpaModel],
    params: DecoderParams,
) -> _Search:
    # Core prefix beam search; returns the ranked surviving prefixes with
    # their blank/non-blank masses and word-level bookkeeping.
    _check_width(emissions, vocab)
    if emissions.frames == 0:
        raise ValueError("cannot decode an emission matrix with zero frames")
    fusion = _Fusion(lm, params)
    log_probs = emissions.log_probs
    blank = vocab.blank_index
    delimiter = vocab.delimiter_index

    # prefix -> [log P(paths ending in blank), log P(paths ending non-blank)]
    beams: dict[tuple[int, ...], list[float]] = {(): [0.0, NEG_INF]}
    info: dict[tuple[int, ...], _PrefixInfo] = {(): _PrefixInfo()}

    def extend_info(prefix: tuple[int, ...], token: int) -> _PrefixInfo:
        parent = info[prefix]
        symbol = vocab.tokens[token]
        if token != delimiter:
            return _PrefixInfo(
                parent.text + symbol,
                parent.partial + symbol,
                parent.context,
                parent.lm_ln,
                parent.words,
            )
        if not parent.partial:  # delimiter after delimiter: no word completed
            return _PrefixInfo(parent.text + symbol, "", parent.context, parent.lm_ln, parent.words)
        lm_ln = parent.lm_ln + fusion.word_ln(parent.context, parent.partial)
        context = (
            fusion.advance(parent.context, parent.partial)
            if fusion.active and params.alpha > 0.0
            else parent.context
        )
        return _PrefixInfo(parent.text + symbol, "", context, lm_ln, parent.words + 1)

    def fused(prefix: tuple[int, ...], masses: list[float]) -> float:
        state = info[prefix]
        return fusion.score(_log_add(masses[0], masses[1]), state.lm_ln, state.words)

    for t in range(emissions.frames):
        row = log_probs[t]
        survivors = sorted(
            beams, key=lambda prefix: (-fused(prefix, beams[prefix]), info[prefix].text)
        )[: params.beam_width]
        next_beams: dict[tuple[int, ...], list[float]] = {}

        def bucket(prefix: tuple[int, ...], parent: tuple[int, ...], token: int) -> list[float]:
            masses = next_beams.get(prefix)
            if masses is None:
                masses = [NEG_INF, NEG_INF]
                next_beams[prefix] = masses
                if prefix not in info:
                    info[prefix] = extend_info(parent, token)
            return masses

        for prefix in survivors:
            p_blank, p_nonblank = beams[prefix]
            p_total = _log_add(p_blank, p_nonblank)
            for token in range(len(vocab)):
                emit = row[token]
                if (
                    params.prune_log_floor is not None
                    and token != blank
                    and emit < params.prune_log_floor
                ):
                    continue
                if token == blank:
                    masses = bucket(prefix, prefix, token)
                    masses[0] = _log_add(masses[0], p_total + emit)
                elif prefix and token == prefix[-1]:
                    # Repeated symbol: only blank-ending paths start a new
                    # occurrence; non-blank paths collapse into the prefix.
                    masses = bucket(prefix + (token,), prefix, token)
                    masses[1] = _log_add(masses[1], p_blank + emit)
                    masses = bucket(prefix, prefix, token)
                    masses[1] = _log_add(masses[1], p_nonblank + emit)
                else:
                    masses = bucket(prefix + (token,), prefix, token)
                    masses[1] = _log_add(masses[1], p_total + emit)
        beams = next_beams
        info = {prefix: info[prefix] for prefix in beams}

    survivors = sorted(
        beams, key=lambda prefix: (-fused(prefix, beams[prefix]), info[prefix].text)
    )[: params.beam_width]
    return survivors, beams, info


def beam_hypotheses(
    emissions: EmissionMatrix,
    vocab: Vocabulary,
    lm: Optional[ArpaModel] = None,
    params: DecoderParams = DecoderParams(),
) -> list[BeamHypothesis]:
    """Run prefix beam search and return the surviving beam for inspection.

    fused_score here is the mid-search value logaddexp(blank, non-blank) +
    alpha * accumulated LM ln-probability + beta * completed word count;
    end-of-utterance terms are applied by beam_search_decode only.
    """
    fusion = _Fusion(lm, params)
    survivors, beams, info = _search(emissions, vocab, lm, params)
    hypotheses = []
    for prefix in survivors:
        state = info[prefix]
        p_blank, p_nonblank = beams[prefix]
        hypotheses.append(
            BeamHypothesis(
                prefix=prefix,
                log_p_blank=p_blank,
                log_p_nonblank=p_nonblank,
                lm_context=LmState(state.context) if lm is not None else None,
                partial_word=state.partial,
                fused_score=fusion.score(_log_add(p_blank, p_nonblank), state.lm_ln, state.words),
            )
        )
    return hypotheses


def beam_search_decode(
    emissions: EmissionMatrix,
    vocab: Vocabulary,
    lm: Optional[ArpaModel] = None,
    params: DecoderParams = DecoderParams(),
) -> list[tuple[str, float]]:
    """Prefix beam search with optional shallow fusion.

    Returns (text, fused score) pairs ranked by score descending, ties
    broken lexicographically by text.  Distinct prefixes rendering the same
    text are merged; with score_eos the dangling partial word is scored as
    a word and a </s> term is added.  Without an LM the fused score is the
    pure CTC log-probability of the text.

    Parameters
    ----------
    emissions : EmissionMatrix
        T x V natural-log probabilities.
    vocab : Vocabulary
        Symbol inventory matching the emission width.
    lm : ArpaModel or None
        Word-level n-gram model; characters between delimiters form words.
    params : DecoderParams
        alpha/beta fusion weights, beam width, pruning, eos scoring.
    """
    fusion = _Fusion(lm, params)
    survivors, beams, info = _search(emissions, vocab, lm, params)

    # Merge distinct prefixes that render identical text, then apply
    # end-of-utterance scoring per text.
    by_text: dict[str, float] = {}
    final_lm: dict[str, tuple[float, int]] = {}
    for prefix in survivors:
        state = info[prefix]
        mass = _log_add(*beams[prefix])
        by_text[state.text] = _log_add(by_text.get(state.text, NEG_INF), mass)
        if state.text not in final_lm:
            final_lm[state.text] = fusion.finalize(
                state.lm_ln, state.words, state.partial, state.context
            )
    ranked = [
        (text, fusion.score(mass, *final_lm[text]))
        for text, mass in by_text.items()
    ]
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked


def oracle_decode(
    emissions: EmissionMatrix,
    vocab: Vocabulary,
    lm: Optional[ArpaModel] = None,
    params: DecoderParams = DecoderParams(),
) -> list[tuple[str, float]]:
    """Exact decoding by enumerating all V**T frame paths (desk scale only).

    Sums exact path probabilities per collapsed text and applies the same
    fusion rules as the beam search, computed from scratch over the final
    text rather than incrementally.
    """
    _check_width(emissions, vocab)
    paths = len(vocab) ** emissions.frames
    if paths > 10**6:
        raise ValueError(f"oracle_decode limited to 1e6 paths, instance has {paths}")
    fusion = _Fusion(lm, params)
    log_probs = emissions.log_probs

    mass_by_text: dict[str, list[float]] = {}
    for path in product(range(len(vocab)), repeat=emissions.frames):
        log_p = sum(log_probs[t, token] for t, token in enumerate(path))
        text = ctc_collapse(path, vocab)
        mass_by_text.setdefault(text, []).append(log_p)

    ranked = []
    for text, masses in mass_by_text.items():
        acoustic = float(np.logaddexp.reduce(np.array(masses)))
        lm_ln, words = _score_text(text, vocab, fusion)
        ranked.append((text, fusion.score(acoustic, lm_ln, words)))
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked


def _score_text(text: str, vocab: Vocabulary, fusion: _Fusion) -> tuple[float, int]:
    """Word-level fusion terms for a finished text, computed from scratch."""
    if not fusion.active:
        return 0.0, 0
    segments = text.split(vocab.delimiter)
    completed, partial = segments[:-1], segments[-1]
    context: tuple[str, ...] = (BOS,)
    lm_ln = 0.0
    words = 0
    for word in completed:
        if not word:
            continue
        lm_ln += fusion.word_ln(context, word)
        words += 1
        if fusion.params.alpha > 0.0:
            context = fusion.advance(context, word)
    return fusion.finalize(lm_ln, words, partial, context)


def batch_decode(
    emission_files: Sequence[str],
    vocab: Vocabulary,
    lm: Optional[ArpaModel] = None,
    params: DecoderParams = DecoderParams(),
    jobs: Optional[int] = None,
) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Decode a batch of emission files to (utterance id, text) pairs.

    The utterance id is the file name without its extension.  Results keep
    the input order regardless of ``jobs``; per-file format errors are
    collected as (id, message) pairs instead of aborting the batch.
    """
    from concurrent.futures import ThreadPoolExecutor
    from pathlib import Path

    from .corpus import read_emissions

    def decode_one(path: str) -> tuple[str, Optional[str], Optional[str]]:
        stem = Path(path).stem
        try:
            emissions = read_emissions(path)
            hypotheses = beam_search_decode(emissions, vocab, lm, params)
            return stem, hypotheses[0][0], None
        except Exception as error:  # noqa: BLE001 - reported per file
            return stem, None, str(error)

    if not emission_files:
        return [], []
    if jobs is None:
        import os

        jobs = os.cpu_count() or 1
    if jobs <= 1:
        outcomes = [decode_one(path) for path in emission_files]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(decode_one, emission_files))

    results = [(stem, text) for stem, text, error in outcomes if error is None and text is not None]
    failures = [(stem, error) for stem, _, error in outcomes if error is not None]
    return results, failures
