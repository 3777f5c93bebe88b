"""Independent reference implementations used as test oracles.

These are deliberately written against the underlying math rather than by
reusing package code: the Kneser-Ney reference evaluates the interpolation
recursion directly in exact rational arithmetic, and the edit-distance
reference is a memoized recursion over the alignment definition.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

BOS, EOS, UNK = "<s>", "</s>", "<unk>"


class KneserNeyReference:
    """Direct evaluation of interpolated Kneser-Ney with a fixed discount.

    P(w | c) = max(a(c,w) - D, 0) / a(c) + D * N1+(c.) / a(c) * P(w | c')
    with continuation counts below the top order (raw counts for n-grams
    starting with <s>), terminating in a unigram distribution interpolated
    with uniform mass over vocabulary + <unk>.  Contexts never seen simply
    fall through to the shorter context.  All arithmetic is exact.
    """

    def __init__(self, sentences: Sequence[Sequence[str]], max_order: int, discount):
        self.max_order = max_order
        self.discount = Fraction(discount)
        raw: dict[int, Counter] = {n: Counter() for n in range(1, max_order + 1)}
        left: dict[tuple, set] = defaultdict(set)
        for sentence in sentences:
            padded = (BOS, *sentence, EOS)
            for n in range(1, max_order + 1):
                for i in range(len(padded) - n + 1):
                    gram = padded[i : i + n]
                    raw[n][gram] += 1
                    if i > 0:
                        left[gram].add(padded[i - 1])
        self._adjusted: dict[int, dict[tuple, int]] = {}
        for n in range(1, max_order + 1):
            table = {}
            for gram, count in raw[n].items():
                if n == max_order or gram[0] == BOS:
                    table[gram] = count
                else:
                    table[gram] = len(left[gram])
            self._adjusted[n] = table

        self._events = {
            gram[0]: count for gram, count in self._adjusted[1].items() if gram[0] != BOS
        }
        self._event_total = sum(self._events.values())
        self._vocab_size = len(self._events) + 1  # + <unk>

    def probability(self, context: Sequence[str], word: str) -> Fraction:
        context = tuple(context)
        if self.max_order == 1:
            context = ()
        else:
            context = context[-(self.max_order - 1) :]
        return self._conditional(context, word)

    def _conditional(self, context: tuple, word: str) -> Fraction:
        if not context:
            return self._unigram(word)
        order = len(context) + 1
        extensions = {
            gram[-1]: count
            for gram, count in self._adjusted[order].items()
            if gram[:-1] == context
        }
        if not extensions:
            return self._conditional(context[1:], word)
        total = sum(extensions.values())
        lam = self.discount * len(extensions) / total
        seen = extensions.get(word, 0)
        head = (seen - self.discount) / total if seen > self.discount else Fraction(0)
        return head + lam * self._conditional(context[1:], word)

    def _unigram(self, word: str) -> Fraction:
        d = self.discount
        lam = d * len(self._events) / self._event_total
        base = lam / self._vocab_size
        count = self._events.get(word)
        if count is None:
            return base
        head = (count - d) / self._event_total if count > d else Fraction(0)
        return head + base


def reference_edit_counts(reference: Sequence, hypothesis: Sequence) -> tuple[int, int, int, int]:
    """(total, substitutions, deletions, insertions) by memoized recursion.

    Among minimal alignments, the split maximizing substitutions is chosen,
    matching the package's stated preference of substitutions over
    insertion+deletion pairs.
    """
    reference = tuple(reference)
    hypothesis = tuple(hypothesis)

    @lru_cache(maxsize=None)
    def best(i: int, j: int) -> tuple[int, int, int, int]:
        if i == 0:
            return (j, 0, 0, j)
        if j == 0:
            return (i, 0, i, 0)
        candidates = []
        cost, subs, dels, ins = best(i - 1, j - 1)
        if reference[i - 1] == hypothesis[j - 1]:
            candidates.append((cost, subs, dels, ins))
        else:
            candidates.append((cost + 1, subs + 1, dels, ins))
        cost, subs, dels, ins = best(i - 1, j)
        candidates.append((cost + 1, subs, dels + 1, ins))
        cost, subs, dels, ins = best(i, j - 1)
        candidates.append((cost + 1, subs, dels, ins + 1))
        return min(candidates, key=lambda cell: (cell[0], -cell[1]))

    return best(len(reference), len(hypothesis))
