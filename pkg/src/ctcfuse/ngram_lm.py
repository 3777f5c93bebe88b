"""Interpolated Kneser-Ney backoff n-gram language models (orders 1-5).

Counting, estimation, ARPA text serialization, and backoff querying.  The
estimator follows the interpolated formulation with one absolute discount
per order:

    P(w|c) = max(a(c,w) - D, 0) / a(c) + lam(c) * P(w|c')
    lam(c) = D * N1plus(c.) / a(c)

where a(.) are adjusted counts (raw at the highest order and for n-grams
starting with <s>, continuation counts elsewhere), c' drops the oldest
context token, and the unigram level interpolates with the uniform
distribution over the vocabulary so <unk> keeps probability mass.  Written
as ARPA backoff entries, the backoff weight of a context equals lam(c),
which makes backoff querying reproduce the interpolated model exactly.

ArpaModel instances are immutable after construction and safe for any
number of concurrent readers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Sequence, Union

from .errors import ArpaParseError

__all__ = [
    "BOS",
    "EOS",
    "UNK",
    "SENTINEL_LOG10",
    "CountTable",
    "ArpaModel",
    "LmState",
    "count_ngrams",
    "estimate_kneser_ney",
    "train_model",
    "write_arpa",
    "parse_arpa",
]

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

# ARPA convention: <s> is never predicted; its "probability" is stored as a
# large negative log10 sentinel.  Also used for zero backoff weights when a
# fixed discount of 0 removes all interpolation mass.
SENTINEL_LOG10 = -99.0

Gram = tuple[str, ...]


@dataclass(frozen=True)
class CountTable:
    """Sufficient statistics for one order: n-gram -> occurrence count.

    For the highest order the counts are raw; for lower orders they are
    Kneser-Ney continuation counts (number of distinct single-token left
    extensions), except n-grams starting with <s>, which keep raw counts
    because nothing can precede <s>.
    """

    order: int
    counts: dict[Gram, int]
    adjusted: bool

    def __post_init__(self) -> None:
        for gram, count in self.counts.items():
            if len(gram) != self.order:
                raise ValueError(f"{gram!r} is not a {self.order}-gram")
            if count < 1:
                raise ValueError(f"count for {gram!r} must be >= 1, got {count}")


def count_ngrams(sentences: Sequence[Sequence[str]], max_order: int) -> list[CountTable]:
    """Count n-grams of orders 1..max_order over tokenized sentences.

    Each sentence is padded with one <s> at the start and one </s> at the
    end; all contiguous windows inside the padded sentence are counted.
    Sentences must not already contain <s> or </s>.
    """
    if not 1 <= max_order <= 5:
        raise ValueError(f"max_order must be in [1, 5], got {max_order}")
    if not sentences:
        raise ValueError("cannot count n-grams of an empty sentence list")

    raw: list[dict[Gram, int]] = [{} for _ in range(max_order)]
    left_extensions: list[dict[Gram, set]] = [{} for _ in range(max_order)]
    for sentence in sentences:
        if BOS in sentence or EOS in sentence:
            raise ValueError(f"sentences must not contain {BOS!r} or {EOS!r}")
        padded = [BOS, *sentence, EOS]
        for n in range(1, max_order + 1):
            table = raw[n - 1]
            extensions = left_extensions[n - 1]
            for i in range(len(padded) - n + 1):
                gram = tuple(padded[i : i + n])
                table[gram] = table.get(gram, 0) + 1
                if i > 0:
                    extensions.setdefault(gram, set()).add(padded[i - 1])

    tables: list[CountTable] = []
    for n in range(1, max_order + 1):
        if n == max_order:
            tables.append(CountTable(n, dict(raw[n - 1]), adjusted=False))
            continue
        adjusted: dict[Gram, int] = {}
        for gram, count in raw[n - 1].items():
            if gram[0] == BOS:
                adjusted[gram] = count
            else:
                adjusted[gram] = len(left_extensions[n - 1][gram])
        tables.append(CountTable(n, adjusted, adjusted=True))
    return tables


@dataclass(frozen=True)
class LmState:
    """Incremental query state: the most recent context tokens (newest last)."""

    context: Gram = (BOS,)


# Each table maps an n-gram to (log10 probability, log10 backoff weight or
# None when the entry is never used as a context).
Entry = tuple[float, Optional[float]]


@dataclass(frozen=True)
class ArpaModel:
    """Backoff n-gram model over log10 probabilities and backoff weights."""

    max_order: int
    tables: tuple[dict[Gram, Entry], ...]

    def __post_init__(self) -> None:
        if not 1 <= self.max_order <= 5:
            raise ValueError(f"max_order must be in [1, 5], got {self.max_order}")
        if len(self.tables) != self.max_order:
            raise ValueError("need one table per order")
        if not self.tables[0]:
            raise ValueError("model has no unigrams")

    @property
    def vocabulary(self) -> frozenset:
        """All predictable tokens (includes </s> and <unk>, excludes <s>)."""
        return frozenset(w for (w,) in self.tables[0] if w != BOS)

    def lookup(self, gram: Gram) -> Optional[Entry]:
        if not 1 <= len(gram) <= self.max_order:
            return None
        return self.tables[len(gram) - 1].get(gram)

    def conditional_log10(self, context: Sequence[str], word: str) -> float:
        """log10 P(word | context) via standard backoff recursion.

        Contexts longer than max_order-1 are truncated to their most recent
        tokens; words outside the vocabulary score as <unk>.
        """
        if (word,) not in self.tables[0]:
            word = UNK
        ctx = tuple(context)
        if len(ctx) >= self.max_order:
            ctx = ctx[-(self.max_order - 1) :] if self.max_order > 1 else ()
        penalty = 0.0
        while ctx:
            entry = self.tables[len(ctx)].get(ctx + (word,))
            if entry is not None:
                return penalty + entry[0]
            context_entry = self.tables[len(ctx) - 1].get(ctx)
            if context_entry is not None and context_entry[1] is not None:
                penalty += context_entry[1]
            ctx = ctx[1:]
        return penalty + self.tables[0][(word,)][0]

    def advance(self, state: LmState, word: str) -> LmState:
        """New state after emitting a word (context truncated to max_order-1)."""
        if self.max_order == 1:
            return LmState(())
        return LmState((state.context + (word,))[-(self.max_order - 1) :])

    def score_sequence(self, words: Sequence[str]) -> float:
        """log10 probability of a sentence with <s> context and a final </s>."""
        state = LmState()
        total = 0.0
        for word in words:
            total += self.conditional_log10(state.context, word)
            state = self.advance(state, word)
        return total + self.conditional_log10(state.context, EOS)

    def perplexity(self, sentences: Sequence[Sequence[str]]) -> float:
        """10 ** (-mean log10 prob per token), counting one </s> per sentence."""
        if not sentences:
            raise ValueError("perplexity needs a non-empty evaluation set")
        total = sum(self.score_sequence(sentence) for sentence in sentences)
        tokens = sum(len(sentence) + 1 for sentence in sentences)
        return 10.0 ** (-total / tokens)


def _discounts(
    tables: Sequence[CountTable], discount: Union[float, Sequence[float], None]
) -> list[float]:
    if discount is not None and not isinstance(discount, (int, float)):
        values = [float(d) for d in discount]
        if len(values) != len(tables):
            raise ValueError("need one discount per order")
    elif discount is not None:
        values = [float(discount)] * len(tables)
    else:
        # Counts-of-counts rule D = n1 / (n1 + 2*n2) per order, computed on
        # the adjusted counts.  Falls back to 0.5 when the corpus has no
        # singletons at an order, which would otherwise yield D = 0 and an
        # <unk> with zero mass.
        values = []
        for table in tables:
            n1 = sum(1 for g, c in table.counts.items() if c == 1 and g != (BOS,))
            n2 = sum(1 for g, c in table.counts.items() if c == 2 and g != (BOS,))
            d = n1 / (n1 + 2 * n2) if (n1 + 2 * n2) > 0 else 0.5
            values.append(d if d > 0 else 0.5)
    for d in values:
        if not 0 <= d <= 1:
            raise ValueError(f"discounts must lie in [0, 1], got {d}")
    return values


def _log10_or_sentinel(p: float) -> float:
    return math.log10(p) if p > 0 else SENTINEL_LOG10


def estimate_kneser_ney(
    counts: Sequence[CountTable],
    discount: Union[float, Sequence[float], None] = None,
) -> ArpaModel:
    """Estimate an interpolated Kneser-Ney model from count tables.

    discount: a fixed D applied at every order, a per-order sequence, or
    None to estimate D = n1/(n1+2*n2) per order from counts-of-counts.
    Rejects empty count tables.
    """
    if not counts or not counts[0].counts:
        raise ValueError("cannot estimate a model from empty counts")
    for n, table in enumerate(counts, start=1):
        if table.order != n:
            raise ValueError("count tables must cover orders 1..max_order in order")
    max_order = len(counts)
    discounts = _discounts(counts, discount)

    # Unigram level: interpolate with the uniform distribution over the
    # event space (observed words, </s>, <unk>); <s> is excluded from the
    # event space but kept in the table for its backoff weight.
    unigrams = counts[0].counts
    events = {gram[0]: c for gram, c in unigrams.items() if gram[0] != BOS}
    total = sum(events.values())
    if total == 0:
        raise ValueError("degenerate corpus: no predictable unigram events")
    d1 = discounts[0]
    lam1 = d1 * len(events) / total
    vocab_size = len(events) + 1  # + <unk>
    probs: list[dict[Gram, float]] = [{}]
    for word, count in events.items():
        probs[0][(word,)] = max(count - d1, 0.0) / total + lam1 / vocab_size
    probs[0][(UNK,)] = lam1 / vocab_size

    # Higher orders: group grams by context, interpolate with the
    # already-computed next-lower distribution.
    backoffs: list[dict[Gram, float]] = [{} for _ in range(max_order)]
    for n in range(2, max_order + 1):
        d = discounts[n - 1]
        by_context: dict[Gram, list[tuple[str, int]]] = {}
        for gram, count in counts[n - 1].counts.items():
            by_context.setdefault(gram[:-1], []).append((gram[-1], count))
        layer: dict[Gram, float] = {}
        for context, extensions in by_context.items():
            ctx_total = sum(count for _, count in extensions)
            lam = d * len(extensions) / ctx_total
            backoffs[n - 2][context] = lam
            lower_ctx = context[1:]
            for word, count in extensions:
                try:
                    lower = probs[n - 2][lower_ctx + (word,)]
                except KeyError:
                    raise ValueError(
                        f"inconsistent count tables: {lower_ctx + (word,)!r} missing "
                        f"at order {n - 1} (tables must come from count_ngrams)"
                    ) from None
                layer[context + (word,)] = max(count - d, 0.0) / ctx_total + lam * lower
        probs.append(layer)

    tables: list[dict[Gram, Entry]] = []
    for n in range(1, max_order + 1):
        table: dict[Gram, Entry] = {}
        for gram, p in probs[n - 1].items():
            bow = backoffs[n - 1].get(gram)
            table[gram] = (
                _log10_or_sentinel(p),
                None if bow is None else _log10_or_sentinel(bow),
            )
        if n == 1 and (BOS,) in counts[0].counts:
            bow = backoffs[0].get((BOS,))
            table[(BOS,)] = (SENTINEL_LOG10, None if bow is None else _log10_or_sentinel(bow))
        tables.append(table)
    return ArpaModel(max_order, tuple(tables))


def train_model(
    sentences: Sequence[Sequence[str]],
    max_order: int = 5,
    discount: Union[float, Sequence[float], None] = None,
) -> ArpaModel:
    """count_ngrams followed by estimate_kneser_ney."""
    return estimate_kneser_ney(count_ngrams(sentences, max_order), discount)


def _format_value(value: float) -> str:
    return f"{value:.7g}"


def write_arpa(model: ArpaModel, destination: Union[str, IO[str]]) -> None:
    """Write a model as standard ARPA text.

    Sections are ``\\data\\`` with ``ngram N=count`` lines, one
    ``\\N-grams:`` block per order with tab-separated
    ``log10prob<TAB>ngram<TAB>log10backoff`` rows (backoff omitted where
    absent), and a closing ``\\end\\``.  Values carry 7 significant digits;
    entries are sorted for byte-stable output.
    """
    if isinstance(destination, str):
        with open(destination, "w", encoding="utf-8") as handle:
            write_arpa(model, handle)
        return
    out = destination
    out.write("\\data\\\n")
    for n in range(1, model.max_order + 1):
        out.write(f"ngram {n}={len(model.tables[n - 1])}\n")
    for n in range(1, model.max_order + 1):
        out.write(f"\n\\{n}-grams:\n")
        for gram in sorted(model.tables[n - 1]):
            log_p, log_bow = model.tables[n - 1][gram]
            line = f"{_format_value(log_p)}\t{' '.join(gram)}"
            if log_bow is not None:
                line += f"\t{_format_value(log_bow)}"
            out.write(line + "\n")
    out.write("\n\\end\\\n")


def parse_arpa(source: Union[str, IO[str], Iterable[str]]) -> ArpaModel:
    """Parse ARPA text into an ArpaModel.

    Accepts a path, an open text stream, or an iterable of lines.  A
    missing backoff field is treated as log10 backoff 0.0 (i.e. weight 1).
    Malformed headers, count mismatches, and non-numeric fields raise
    ArpaParseError naming the offending line.
    """
    if isinstance(source, str):
        with open(source, encoding="utf-8") as handle:
            return parse_arpa(handle)

    lines = enumerate((line.rstrip("\n") for line in source), start=1)

    def next_content() -> tuple[int, str]:
        for number, line in lines:
            if line.strip():
                return number, line.strip()
        return 0, ""

    number, line = next_content()
    if line != "\\data\\":
        raise ArpaParseError(number or 1, f"expected \\data\\ header, found {line!r}")

    declared: dict[int, int] = {}
    section_start = 0
    while True:
        number, line = next_content()
        if not line.startswith("ngram "):
            section_start, first_section = number, line
            break
        try:
            order_text, count_text = line[len("ngram ") :].split("=", 1)
            declared[int(order_text)] = int(count_text)
        except ValueError:
            raise ArpaParseError(number, f"malformed count line {line!r}") from None
    if not declared:
        raise ArpaParseError(number or 1, "no 'ngram N=count' lines in \\data\\ section")
    max_order = max(declared)
    if sorted(declared) != list(range(1, max_order + 1)):
        raise ArpaParseError(number or 1, "declared orders must be contiguous from 1")

    tables: list[dict[Gram, Entry]] = [{} for _ in range(max_order)]
    number, line = section_start, first_section
    for order in range(1, max_order + 1):
        if line != f"\\{order}-grams:":
            raise ArpaParseError(number or 1, f"expected \\{order}-grams: header, found {line!r}")
        table = tables[order - 1]
        while True:
            number, line = next_content()
            if not line or line.startswith("\\"):
                break
            parts = line.split()
            if len(parts) not in (order + 1, order + 2):
                raise ArpaParseError(
                    number, f"expected {order}-gram row with optional backoff, found {line!r}"
                )
            try:
                log_p = float(parts[0])
                log_bow = float(parts[-1]) if len(parts) == order + 2 else None
            except ValueError:
                raise ArpaParseError(number, f"non-numeric field in {line!r}") from None
            gram = tuple(parts[1 : order + 1])
            # A missing backoff field means weight 1 (log10 0); querying
            # treats the absent entry as 0, so None keeps writes canonical.
            table[gram] = (log_p, log_bow)
        if len(table) != declared[order]:
            raise ArpaParseError(
                number or 1,
                f"\\data\\ declares {declared[order]} {order}-grams "
                f"but section lists {len(table)}",
            )
    if line != "\\end\\":
        raise ArpaParseError(number or 1, f"expected \\end\\, found {line!r}")
    return ArpaModel(max_order, tuple(tables))
