"""Grid search over the shallow-fusion weights alpha and beta.

Decodes a validation set at every (alpha, beta) pair in the grid, scores
pooled WER per cell, and returns the exhaustive table plus the minimizer.
Emissions are read once and reused across all cells, which is what makes
the 10 x 10 default grid affordable: grid-search cost is decode-dominated.
Ties prefer smaller alpha, then smaller beta (less LM interference).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .decoder import DecoderParams, EmissionMatrix, Vocabulary, beam_search_decode
from .errors import GridSearchError
from .metrics import wer
from .ngram_lm import ArpaModel

__all__ = ["DEFAULT_GRID_VALUES", "GridSpec", "GridSearchResult", "grid_search",
           "emit_grid_report", "parse_grid_report"]

# The tuned sweep used for both weights.
DEFAULT_GRID_VALUES = (0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0)


@dataclass(frozen=True)
class GridSpec:
    """Strictly increasing candidate values for alpha and beta."""

    alpha_values: tuple[float, ...] = DEFAULT_GRID_VALUES
    beta_values: tuple[float, ...] = DEFAULT_GRID_VALUES

    def __post_init__(self) -> None:
        for name, values in (("alpha", self.alpha_values), ("beta", self.beta_values)):
            if not values:
                raise ValueError(f"{name}_values must be non-empty")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValueError(f"{name}_values must be strictly increasing")


@dataclass(frozen=True)
class GridSearchResult:
    """Exhaustive (alpha, beta, wer) table and its minimizer."""

    table: tuple[tuple[float, float, float], ...]
    best_alpha: float
    best_beta: float
    best_wer: float

    def __post_init__(self) -> None:
        if not self.table:
            raise ValueError("result table must be non-empty")
        if (self.best_alpha, self.best_beta, self.best_wer) not in self.table:
            raise ValueError("best cell must appear in the table")
        if any(cell[2] < self.best_wer for cell in self.table):
            raise ValueError("best_wer must be the table minimum")


def grid_search(
    pairs: Sequence[tuple[EmissionMatrix, str]],
    vocab: Vocabulary,
    lm: ArpaModel,
    grid: GridSpec = GridSpec(),
    base_params: DecoderParams = DecoderParams(),
) -> GridSearchResult:
    """Evaluate every (alpha, beta) cell on (emissions, reference) pairs.

    References are expected in normalized text space already.  Decode or
    metric errors are re-raised with the offending grid point named.
    """
    if not pairs:
        raise ValueError("grid_search needs a non-empty validation set")
    if lm is None:
        raise ValueError("grid_search needs a language model")

    table: list[tuple[float, float, float]] = []
    best: Optional[tuple[float, float, float]] = None
    for alpha in grid.alpha_values:
        for beta in grid.beta_values:
            params = replace(base_params, alpha=alpha, beta=beta)
            try:
                scored = [
                    (reference, beam_search_decode(emissions, vocab, lm, params)[0][0])
                    for emissions, reference in pairs
                ]
                cell_wer = wer(scored)
            except Exception as error:
                raise GridSearchError(f"at (alpha={alpha}, beta={beta}): {error}") from error
            table.append((alpha, beta, cell_wer))
            if best is None or cell_wer < best[2]:
                best = (alpha, beta, cell_wer)
    assert best is not None
    return GridSearchResult(tuple(table), best[0], best[1], best[2])


def emit_grid_report(result: GridSearchResult) -> str:
    """TSV of all cells sorted by (alpha, beta); the best row is starred.

    Values are printed with full float precision so re-parsing the report
    reproduces the table exactly.
    """
    lines = ["alpha\tbeta\twer\tbest"]
    for alpha, beta, cell_wer in sorted(result.table):
        marker = "*" if (alpha, beta) == (result.best_alpha, result.best_beta) else ""
        lines.append(f"{alpha!r}\t{beta!r}\t{cell_wer!r}\t{marker}")
    return "\n".join(lines) + "\n"


def parse_grid_report(text: str) -> GridSearchResult:
    """Inverse of emit_grid_report."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != "alpha\tbeta\twer\tbest":
        raise ValueError("not a grid report: bad header")
    table: list[tuple[float, float, float]] = []
    best: Optional[tuple[float, float, float]] = None
    for line in lines[1:]:
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"malformed grid report row: {line!r}")
        cell = (float(parts[0]), float(parts[1]), float(parts[2]))
        table.append(cell)
        if parts[3] == "*":
            best = cell
    if best is None:
        raise ValueError("grid report has no starred best row")
    return GridSearchResult(tuple(table), best[0], best[1], best[2])
