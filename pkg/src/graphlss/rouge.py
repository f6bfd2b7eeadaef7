"""N-gram overlap scoring for summary evaluation.

Implements ROUGE-1, ROUGE-2 and ROUGE-L over pre-tokenized text. Inputs
are plain token lists; no normalization happens here, callers are
expected to pass tokens produced by :func:`graphlss.ingest.rouge_tokens`
so that candidate and reference go through the identical pipeline.

Counting follows the clipped-overlap convention: each n-gram contributes
at most min(count in candidate, count in reference) to the match total.
ROUGE-L uses the length of the longest common subsequence between the
two flat token sequences. All three report precision, recall and the
balanced F1.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

Tokens = Sequence[str]


@dataclass(frozen=True)
class RougeScore:
    """Precision/recall/F1 triple for one metric on one pair of texts."""

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, candidate_total: int, reference_total: int) -> "RougeScore":
        """Build a score from match counts.

        Empty candidate or reference sides yield 0.0 for the affected
        component rather than raising; a degenerate pair scores 0 across
        the board.
        """
        precision = overlap / candidate_total if candidate_total > 0 else 0.0
        recall = overlap / reference_total if reference_total > 0 else 0.0
        denom = precision + recall
        f1 = 2.0 * precision * recall / denom if denom > 0.0 else 0.0
        return cls(precision, recall, f1)


def ngram_counts(tokens: Tokens, n: int) -> Counter:
    """Multiset of n-grams (as tuples) in ``tokens``.

    A sequence shorter than ``n`` has no n-grams and returns an empty
    counter.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def overlap_count(candidate_counts: Counter, reference_counts: Counter) -> int:
    """Clipped intersection size of two n-gram multisets."""
    # Iterate over the smaller dict; Counter & Counter would also work but
    # allocates a third counter per call and this sits on a hot path.
    if len(candidate_counts) > len(reference_counts):
        candidate_counts, reference_counts = reference_counts, candidate_counts
    total = 0
    for gram, count in candidate_counts.items():
        other = reference_counts.get(gram)
        if other is not None:
            total += count if count < other else other
    return total


def rouge_n(candidate: Tokens, reference: Tokens, n: int = 1) -> RougeScore:
    """ROUGE-N between a candidate and a reference token sequence."""
    cand = ngram_counts(candidate, n)
    ref = ngram_counts(reference, n)
    overlap = overlap_count(cand, ref)
    return RougeScore.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Tokens, b: Tokens) -> int:
    """Length of the longest common subsequence of two token sequences.

    Standard dynamic program over two rolling rows, O(len(a) * len(b))
    time and O(min side) memory.
    """
    if not a or not b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    previous = [0] * (len(b) + 1)
    current = [0] * (len(b) + 1)
    for token_a in a:
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                current[j] = previous[j - 1] + 1
            else:
                left = current[j - 1]
                up = previous[j]
                current[j] = left if left > up else up
        previous, current = current, previous
    return previous[len(b)]


def rouge_l(candidate: Tokens, reference: Tokens) -> RougeScore:
    """ROUGE-L between flat token sequences.

    Both sides are treated as single sequences; multi-sentence inputs
    should be concatenated by the caller before scoring.
    """
    overlap = lcs_length(candidate, reference)
    return RougeScore.from_counts(overlap, len(candidate), len(reference))


def score_summary(candidate: Tokens, reference: Tokens) -> dict[str, RougeScore]:
    """ROUGE-1/-2/-L for one candidate/reference pair.

    Keys are ``rouge1``, ``rouge2`` and ``rougeL``.
    """
    return {
        "rouge1": rouge_n(candidate, reference, 1),
        "rouge2": rouge_n(candidate, reference, 2),
        "rougeL": rouge_l(candidate, reference),
    }
