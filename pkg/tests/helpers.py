"""Shared constructors for synthetic decoding fixtures."""

from __future__ import annotations

import numpy as np

from ctcfuse import EmissionMatrix, Vocabulary


def random_emissions(rng: np.random.Generator, frames: int, width: int) -> EmissionMatrix:
    """Random row-normalized natural-log emission matrix."""
    logits = rng.normal(scale=2.0, size=(frames, width))
    rows = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
    return EmissionMatrix(rows)


def emissions_for_text(
    text: str,
    vocab: Vocabulary,
    main_prob: float = 0.9,
    overrides: dict[int, dict[str, float]] | None = None,
) -> EmissionMatrix:
    """One frame per character, concentrating main_prob on that character.

    A blank frame is inserted between repeated characters so the doubled
    letter survives CTC collapse.  ``overrides`` maps a frame index (in the
    expanded frame sequence) to explicit symbol probabilities for that
    frame, with the remaining mass spread over the other symbols; that is
    how acoustically confusable fixtures are built.
    """
    overrides = overrides or {}
    width = len(vocab)
    index_of = {token: i for i, token in enumerate(vocab.tokens)}
    blank = vocab.tokens[vocab.blank_index]
    frames: list[str] = []
    for char in text:
        if frames and frames[-1] == char:
            frames.append(blank)
        frames.append(char)
    rows = np.zeros((len(frames), width))
    for t, symbol in enumerate(frames):
        probs = np.zeros(width)
        if t in overrides:
            stated = overrides[t]
            rest = 1.0 - sum(stated.values())
            probs[:] = rest / (width - len(stated))
            for name, p in stated.items():
                probs[index_of[name]] = p
        else:
            probs[:] = (1.0 - main_prob) / (width - 1)
            probs[index_of[symbol]] = main_prob
        rows[t] = np.log(probs)
    return EmissionMatrix(rows)
