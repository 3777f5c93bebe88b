"""Edit-distance alignment and pooled WER/CER evaluation.

WER and CER are pooled over the corpus: 100 * sum(S+D+I) / sum(reference
lengths), not the mean of per-utterance rates.  Among minimal alignments,
the one maximizing matches+substitutions is chosen (substitutions are
preferred over insertion+deletion pairs), which makes the S/D/I split
deterministic and symmetric.

Before scoring, both references and hypotheses pass through the same text
normalization so punctuation and casing artifacts cannot dominate rates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

from .errors import ToolkitError
from .textnorm import NormalizationConfig, TranscriptRecord, normalize_transcript

__all__ = [
    "EditCounts",
    "GroupScores",
    "EvalReport",
    "edit_distance",
    "wer",
    "cer",
    "evaluate",
]


@dataclass(frozen=True)
class EditCounts:
    """Substitution/deletion/insertion counts against a reference length."""

    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    def __post_init__(self) -> None:
        if min(self.substitutions, self.deletions, self.insertions, self.reference_length) < 0:
            raise ValueError("edit counts must be non-negative")
        if self.substitutions + self.deletions > self.reference_length:
            raise ValueError("S + D cannot exceed the reference length")

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "EditCounts") -> "EditCounts":
        return EditCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.reference_length + other.reference_length,
        )

    @property
    def error_rate_percent(self) -> float:
        if self.reference_length == 0:
            return 0.0 if self.total == 0 else float("inf")
        return 100.0 * self.total / self.reference_length


ZERO_COUNTS = EditCounts(0, 0, 0, 0)

# DP cell: (cost, substitutions, deletions, insertions).  Cells compare by
# (cost, -substitutions) so minimal-cost alignments maximize substitutions.
_Cell = tuple[int, int, int, int]


def _better(a: _Cell, b: _Cell) -> _Cell:
    if (a[0], -a[1]) <= (b[0], -b[1]):
        return a
    return b


def edit_distance(reference: Sequence, hypothesis: Sequence) -> EditCounts:
    """Minimal unit-cost alignment counts between two token sequences."""
    ref_len, hyp_len = len(reference), len(hypothesis)
    previous: list[_Cell] = [(j, 0, 0, j) for j in range(hyp_len + 1)]
    for i in range(1, ref_len + 1):
        current: list[_Cell] = [(i, 0, i, 0)]
        for j in range(1, hyp_len + 1):
            diag = previous[j - 1]
            if reference[i - 1] == hypothesis[j - 1]:
                best = diag
            else:
                best = (diag[0] + 1, diag[1] + 1, diag[2], diag[3])
            deletion = previous[j]
            best = _better(best, (deletion[0] + 1, deletion[1], deletion[2] + 1, deletion[3]))
            insertion = current[j - 1]
            best = _better(best, (insertion[0] + 1, insertion[1], insertion[2], insertion[3] + 1))
            current.append(best)
        previous = current
    _, subs, dels, ins = previous[hyp_len]
    return EditCounts(subs, dels, ins, ref_len)


def _pooled(pairs: Sequence[tuple[Sequence, Sequence]]) -> EditCounts:
    counts = ZERO_COUNTS
    for reference, hypothesis in pairs:
        counts = counts + edit_distance(reference, hypothesis)
    return counts


def wer(pairs: Sequence[tuple[str, str]]) -> float:
    """Pooled word error rate in percent over (reference, hypothesis) texts."""
    counts = _pooled([(ref.split(), hyp.split()) for ref, hyp in pairs])
    if counts.reference_length == 0:
        raise ValueError("total reference word count is zero")
    return counts.error_rate_percent


def cer(pairs: Sequence[tuple[str, str]]) -> float:
    """Pooled character error rate in percent (characters include spaces)."""
    counts = _pooled([(list(ref), list(hyp)) for ref, hyp in pairs])
    if counts.reference_length == 0:
        raise ValueError("total reference character count is zero")
    return counts.error_rate_percent


@dataclass(frozen=True)
class GroupScores:
    """Word- and character-level pooled counts and rates for one group."""

    words: EditCounts
    chars: EditCounts

    @property
    def wer_percent(self) -> float:
        return self.words.error_rate_percent

    @property
    def cer_percent(self) -> float:
        return self.chars.error_rate_percent


@dataclass(frozen=True)
class EvalReport:
    """Overall and per-group pooled error rates."""

    overall: GroupScores
    groups: dict[str, GroupScores]
    group_by: str

    @property
    def wer_percent(self) -> float:
        return self.overall.wer_percent

    @property
    def cer_percent(self) -> float:
        return self.overall.cer_percent

    def to_tsv(self) -> str:
        """Tab-separated rendering; percentages carry 2 decimals."""
        lines = ["group\twer\tcer\tS\tD\tI\tref_len"]

        def row(name: str, scores: GroupScores) -> str:
            w = scores.words
            return (
                f"{name}\t{scores.wer_percent:.2f}\t{scores.cer_percent:.2f}"
                f"\t{w.substitutions}\t{w.deletions}\t{w.insertions}\t{w.reference_length}"
            )

        for name in sorted(self.groups):
            lines.append(row(name, self.groups[name]))
        lines.append(row("overall", self.overall))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        def payload(scores: GroupScores) -> dict:
            return {
                "wer_percent": scores.wer_percent,
                "cer_percent": scores.cer_percent,
                "words": vars(scores.words),
                "chars": vars(scores.chars),
            }

        return json.dumps(
            {
                "group_by": self.group_by,
                "overall": payload(self.overall),
                "groups": {name: payload(scores) for name, scores in sorted(self.groups.items())},
            },
            indent=2,
            ensure_ascii=False,
        )


def _group_value(record: TranscriptRecord, group_by: str) -> str:
    value = getattr(record, group_by, None)
    if value is None:
        value = record.extras.get(group_by)
    return str(value) if value is not None else "unknown"


def evaluate(
    records: Sequence[TranscriptRecord],
    hypotheses: Union[Mapping[str, str], Sequence[tuple[str, str]]],
    group_by: str = "language",
    config: Optional[NormalizationConfig] = None,
) -> EvalReport:
    """Score hypotheses against manifest references with group breakdowns.

    Hypothesis ids must match reference ids exactly (missing or duplicate
    ids raise).  Reference and hypothesis texts are normalized with the
    same config before scoring; groups come from the chosen manifest field.
    """
    config = config or NormalizationConfig()
    if isinstance(hypotheses, Mapping):
        pairs = list(hypotheses.items())
    else:
        pairs = list(hypotheses)
    hyp_by_id: dict[str, str] = {}
    for utt_id, text in pairs:
        if utt_id in hyp_by_id:
            raise ToolkitError(f"duplicate hypothesis id {utt_id!r}")
        hyp_by_id[utt_id] = text

    ref_ids = {record.id for record in records}
    unmatched = set(hyp_by_id) - ref_ids
    if unmatched:
        raise ToolkitError(f"hypothesis ids with no reference: {sorted(unmatched)[:5]}")
    missing = ref_ids - set(hyp_by_id)
    if missing:
        raise ToolkitError(f"references with no hypothesis: {sorted(missing)[:5]}")

    word_counts: dict[str, EditCounts] = {}
    char_counts: dict[str, EditCounts] = {}
    for record in records:
        reference = normalize_transcript(record.raw_text, config)
        hypothesis = normalize_transcript(hyp_by_id[record.id], config)
        group = _group_value(record, group_by)
        word_counts[group] = word_counts.get(group, ZERO_COUNTS) + edit_distance(
            reference.split(), hypothesis.split()
        )
        char_counts[group] = char_counts.get(group, ZERO_COUNTS) + edit_distance(
            list(reference), list(hypothesis)
        )

    groups = {
        name: GroupScores(word_counts[name], char_counts[name]) for name in word_counts
    }
    overall = GroupScores(
        sum(word_counts.values(), ZERO_COUNTS),
        sum(char_counts.values(), ZERO_COUNTS),
    )
    return EvalReport(overall, groups, group_by)
