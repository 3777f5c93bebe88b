"""Transcript normalization and record filtering.

References, the language-model corpus, and decoder hypotheses must all live
in one text space: lowercase, a fixed letter inventory (Norwegian a-z plus
æøå by default), single spaces, hesitation markers rewritten to
pseudo-words.  This module implements that mapping plus the record-level
drop rules (too-short clips, digit-bearing transcripts, spelled-out words).

All operations are pure functions over immutable configs and are safe to
call from any number of threads.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

__all__ = [
    "DEFAULT_ALPHABET",
    "DEFAULT_DICTATION_REPLACEMENTS",
    "HesitationStrategy",
    "NormalizationConfig",
    "TranscriptRecord",
    "Verdict",
    "DropReason",
    "FilterDecision",
    "normalize_transcript",
    "filter_record",
    "normalize_corpus",
    "load_config",
]

# Norwegian letters in dictionary order (a-z then æ ø å), plus the space.
DEFAULT_ALPHABET = "abcdefghijklmnopqrstuvwxyzæøå "

# Dictation commands and silence instructions observed in read-speech data.
# The inventory is not standardized, so it is user-extensible via config.
DEFAULT_DICTATION_REPLACEMENTS: Mapping[str, str] = {
    "<komma>": "",
    "<punktum>": "",
    "<utropstegn>": "",
    "<spørsmålstegn>": "",
    "<stille>": "",
    "<pause>": "",
}

_MARKER_RE = re.compile(r"<([^<>\s]+)>")
_DIGIT_RE = re.compile(r"[0-9]")
_SPACE_RUN_RE = re.compile(r" {2,}")


class HesitationStrategy(enum.Enum):
    """How `<xx>` hesitation markers are rewritten before filtering."""

    TRIPLE_LETTER = "triple"
    SINGLE_LETTER = "single"
    SHARED_SYMBOL = "shared"


class Verdict(enum.Enum):
    KEEP = "keep"
    DROP = "drop"


class DropReason(enum.Enum):
    TOO_SHORT = "too_short"
    CONTAINS_DIGITS = "contains_digits"
    SPELLED_WORD = "spelled_word"
    EMPTY_AFTER_NORMALIZATION = "empty_after_normalization"


@dataclass(frozen=True)
class FilterDecision:
    """Keep/drop outcome for one record; a drop always names its reason."""

    verdict: Verdict
    reason: Optional[DropReason] = None

    def __post_init__(self) -> None:
        if (self.verdict is Verdict.DROP) != (self.reason is not None):
            raise ValueError("drop verdicts require a reason, keeps must not have one")

    @property
    def keep(self) -> bool:
        return self.verdict is Verdict.KEEP


@dataclass(frozen=True)
class TranscriptRecord:
    """One utterance's metadata plus its (raw or normalized) transcript."""

    id: str
    audio_path: str
    duration_seconds: float
    raw_text: str
    language: str
    region: Optional[str] = None
    split: Optional[str] = None
    extras: Mapping[str, object] = field(default_factory=dict)

    LANGUAGES = ("nb", "nn")
    SPLITS = ("train", "validation", "test")

    def __post_init__(self) -> None:
        if self.duration_seconds < 0:
            raise ValueError(f"record {self.id!r}: negative duration")
        if self.language not in self.LANGUAGES:
            raise ValueError(
                f"record {self.id!r}: language must be one of {self.LANGUAGES}, "
                f"got {self.language!r}"
            )
        if self.split is not None and self.split not in self.SPLITS:
            raise ValueError(
                f"record {self.id!r}: split must be one of {self.SPLITS}, "
                f"got {self.split!r}"
            )


@dataclass(frozen=True)
class NormalizationConfig:
    """Settings for transcript cleaning.

    alphabet is the ordered inventory of characters allowed in output text
    (must contain the space).  Hesitation markers like ``<ee>`` become
    ``eee`` (triple), ``e`` (single) or the shared symbol ``ĥ`` depending on
    hesitation_strategy.  Dictation markers are replaced verbatim before
    the hesitation pass.
    """

    alphabet: str = DEFAULT_ALPHABET
    hesitation_strategy: HesitationStrategy = HesitationStrategy.TRIPLE_LETTER
    shared_symbol: str = "ĥ"
    min_duration_seconds: float = 0.5
    drop_digits: bool = True
    drop_spelled_words: bool = True
    dictation_replacements: Mapping[str, str] = field(
        default_factory=lambda: dict(DEFAULT_DICTATION_REPLACEMENTS)
    )

    def __post_init__(self) -> None:
        if not self.alphabet:
            raise ValueError("alphabet must be non-empty")
        if " " not in self.alphabet:
            raise ValueError("alphabet must contain the space character")
        if len(self.shared_symbol) != 1:
            raise ValueError("shared_symbol must be a single character")
        if (
            self.hesitation_strategy is not HesitationStrategy.SHARED_SYMBOL
            and self.shared_symbol in self.alphabet
        ):
            raise ValueError(
                "shared_symbol must not be in the alphabet unless the shared "
                "strategy is active"
            )

    @property
    def alphabet_set(self) -> frozenset:
        return frozenset(self.alphabet)


def _rewrite_marker(content: str, config: NormalizationConfig) -> str:
    head = content[0].lower()
    strategy = config.hesitation_strategy
    if strategy is HesitationStrategy.TRIPLE_LETTER:
        return head * 3
    if strategy is HesitationStrategy.SINGLE_LETTER:
        return head
    return config.shared_symbol


def normalize_transcript(raw: str, config: NormalizationConfig = NormalizationConfig()) -> str:
    """Map raw transcript text into the normalized text space.

    Steps, in order: NFC-normalize, lowercase, replace dictation markers,
    rewrite remaining ``<xx>`` hesitation markers, then filter characters:
    whitespace collapses to single spaces, characters already in the
    alphabet pass through, accented characters outside the alphabet are
    NFKD-decomposed and their base letters kept (é→e, ü→u), and everything
    else is deleted.  Total function; the worst case is the empty string.
    """
    text = unicodedata.normalize("NFC", raw).lower()

    for marker, replacement in config.dictation_replacements.items():
        text = text.replace(marker, replacement)
    text = _MARKER_RE.sub(lambda m: _rewrite_marker(m.group(1), config), text)

    allowed = config.alphabet_set
    shared_ok = config.hesitation_strategy is HesitationStrategy.SHARED_SYMBOL
    out: list[str] = []
    for ch in text:
        if ch.isspace():
            out.append(" ")
        elif ch in allowed or (shared_ok and ch == config.shared_symbol):
            out.append(ch)
        else:
            for piece in unicodedata.normalize("NFKD", ch).lower():
                if piece in allowed:
                    out.append(piece)
                elif piece.isspace():
                    out.append(" ")
    return _SPACE_RUN_RE.sub(" ", "".join(out)).strip()


def _has_spelled_word(raw: str) -> bool:
    # NST marks letter-by-letter spellings either with an explicit marker or
    # with a trailing dot per letter ("N. R. K.").
    if "<spelled>" in raw.lower():
        return True
    for token in raw.split():
        if len(token) == 2 and token[0].isalpha() and token[1] == ".":
            return True
    return False


def filter_record(
    record: TranscriptRecord, config: NormalizationConfig = NormalizationConfig()
) -> FilterDecision:
    """Decide whether a record survives cleaning.

    Checks run in a fixed order, first match wins: duration under the
    minimum, digits in the raw text, spelled-out words, and finally a
    transcript that normalizes to nothing.
    """
    if record.duration_seconds < config.min_duration_seconds:
        return FilterDecision(Verdict.DROP, DropReason.TOO_SHORT)
    if config.drop_digits and _DIGIT_RE.search(record.raw_text):
        return FilterDecision(Verdict.DROP, DropReason.CONTAINS_DIGITS)
    if config.drop_spelled_words and _has_spelled_word(record.raw_text):
        return FilterDecision(Verdict.DROP, DropReason.SPELLED_WORD)
    if not normalize_transcript(record.raw_text, config):
        return FilterDecision(Verdict.DROP, DropReason.EMPTY_AFTER_NORMALIZATION)
    return FilterDecision(Verdict.KEEP)


def normalize_corpus(
    records: Iterable[TranscriptRecord],
    config: NormalizationConfig = NormalizationConfig(),
) -> tuple[list[TranscriptRecord], list[tuple[str, DropReason]]]:
    """Filter and normalize a record sequence.

    Returns (kept, dropped): kept records carry normalized text and keep
    their input order; dropped is a list of (record id, reason).  The two
    lists always partition the input.
    """
    kept: list[TranscriptRecord] = []
    dropped: list[tuple[str, DropReason]] = []
    for record in records:
        decision = filter_record(record, config)
        if decision.keep:
            kept.append(replace(record, raw_text=normalize_transcript(record.raw_text, config)))
        else:
            assert decision.reason is not None
            dropped.append((record.id, decision.reason))
    return kept, dropped


_STRATEGY_NAMES = {s.value: s for s in HesitationStrategy}
_BOOL_NAMES = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def load_config(path: str) -> NormalizationConfig:
    """Read a NormalizationConfig from a flat key/value text file.

    Lines are ``key = value``; ``#`` starts a comment.  Recognized keys:
    ``alphabet`` (characters, the space is always added), ``hesitation_strategy``
    (triple|single|shared), ``shared_symbol``, ``min_duration_seconds``,
    ``drop_digits``, ``drop_spelled_words``, and repeatable ``dictation``
    entries of the form ``<marker>:replacement`` that extend the default
    dictation table.
    """
    kwargs: dict = {}
    dictation = dict(DEFAULT_DICTATION_REPLACEMENTS)
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "alphabet":
                kwargs["alphabet"] = value if " " in value else value + " "
            elif key == "hesitation_strategy":
                if value not in _STRATEGY_NAMES:
                    raise ValueError(
                        f"{path}:{line_no}: strategy must be one of "
                        f"{sorted(_STRATEGY_NAMES)}, got {value!r}"
                    )
                kwargs["hesitation_strategy"] = _STRATEGY_NAMES[value]
            elif key == "shared_symbol":
                kwargs["shared_symbol"] = value
            elif key == "min_duration_seconds":
                kwargs["min_duration_seconds"] = float(value)
            elif key in ("drop_digits", "drop_spelled_words"):
                if value.lower() not in _BOOL_NAMES:
                    raise ValueError(f"{path}:{line_no}: expected a boolean, got {value!r}")
                kwargs[key] = _BOOL_NAMES[value.lower()]
            elif key == "dictation":
                if ":" not in value:
                    raise ValueError(
                        f"{path}:{line_no}: dictation entries look like '<marker>:replacement'"
                    )
                marker, replacement = value.split(":", 1)
                dictation[marker.strip()] = replacement.strip()
            else:
                raise ValueError(f"{path}:{line_no}: unknown key {key!r}")
    kwargs["dictation_replacements"] = dictation
    return NormalizationConfig(**kwargs)
