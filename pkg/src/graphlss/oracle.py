"""Greedy extractive label generation.

Selects sentences one at a time, each step adding the sentence that most
increases the ROUGE-1 score of the concatenated selection against the
abstract, until no sentence yields a strict improvement. The objective is
F1 by default; recall is available as a knob. Tokens are the evaluation
tokens (lowercase, punctuation stripped, stopwords kept) so that labels
live in the same metric space as reported scores.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from graphlss.ingest import Document, document_from_json, document_to_json, rouge_tokens
from graphlss.rouge import RougeScore, score_summary

log = logging.getLogger(__name__)

OBJECTIVES = ("f1", "recall")


@dataclass(frozen=True)
class LabeledDocument:
    """Document plus per-sentence relevance bits.

    ``selected`` records the greedy acceptance order; it is derived
    state, reconstructible from labels, and not serialized.
    """

    document: Document
    labels: tuple[int, ...]
    oracle: dict[str, RougeScore]
    selected: tuple[int, ...] = ()

    @property
    def oracle_score(self) -> RougeScore:
        return self.oracle["rouge1"]


def _objective_value(overlap: int, selected_len: int, reference_len: int, objective: str) -> float:
    if objective == "recall":
        return overlap / reference_len if reference_len else 0.0
    precision = overlap / selected_len if selected_len else 0.0
    recall = overlap / reference_len if reference_len else 0.0
    denom = precision + recall
    return 2.0 * precision * recall / denom if denom else 0.0


def greedy_label(
    doc: Document,
    max_selected: int | None = None,
    objective: str = "f1",
) -> LabeledDocument:
    """Label a document by greedy ROUGE-1 maximization against its abstract.

    Each step scans all unselected sentences, computes the objective of
    the selection with that sentence added, and accepts the best strictly
    positive improvement; ties go to the lowest sentence index. Stops
    when nothing improves or ``max_selected`` is reached. A document with
    an empty abstract gets all-zero labels and a warning.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    n = len(doc.sentences)
    reference: list[str] = [token for sent in doc.abstract_sentences for token in sent]
    if not reference:
        log.warning("document %s has an empty abstract; all labels zero", doc.id)
        zero = score_summary([], [])
        return LabeledDocument(doc, (0,) * n, zero, ())

    sentence_tokens = [rouge_tokens(s.raw_text) for s in doc.sentences]
    sentence_counts = [Counter(tokens) for tokens in sentence_tokens]
    reference_counts = Counter(reference)
    reference_len = len(reference)

    selected: list[int] = []
    selected_counts: Counter = Counter()
    selected_len = 0
    overlap = 0
    current = 0.0
    limit = n if max_selected is None else min(n, max_selected)

    while len(selected) < limit:
        best_index = -1
        best_value = current
        best_overlap = overlap
        for i in range(n):
            if sentence_counts[i] is None:
                continue
            gain = 0
            for token, count in sentence_counts[i].items():
                available = reference_counts.get(token, 0)
                have = selected_counts[token]
                if have < available:
                    gain += min(count, available - have)
            candidate_overlap = overlap + gain
            value = _objective_value(
                candidate_overlap, selected_len + len(sentence_tokens[i]), reference_len, objective
            )
            if value > best_value:
                best_value = value
                best_index = i
                best_overlap = candidate_overlap
        if best_index < 0:
            break
        selected.append(best_index)
        selected_counts.update(sentence_counts[best_index])
        selected_len += len(sentence_tokens[best_index])
        overlap = best_overlap
        current = best_value
        sentence_counts[best_index] = None

    labels = tuple(1 if i in set(selected) else 0 for i in range(n))
    summary_tokens = [
        token for i in sorted(selected) for token in sentence_tokens[i]
    ]
    oracle = score_summary(summary_tokens, reference)
    return LabeledDocument(doc, labels, oracle, tuple(selected))


@dataclass
class LabelStats:
    """Corpus-level aggregates produced while labeling."""

    documents: int = 0
    sentences: int = 0
    positives: int = 0
    empty_abstracts: int = 0
    score_sums: dict = field(
        default_factory=lambda: {
            metric: {"precision": 0.0, "recall": 0.0, "f1": 0.0}
            for metric in ("rouge1", "rouge2", "rougeL")
        }
    )

    def add(self, labeled: LabeledDocument) -> None:
        self.documents += 1
        self.sentences += len(labeled.labels)
        self.positives += sum(labeled.labels)
        if not labeled.selected and labeled.oracle_score.f1 == 0.0:
            self.empty_abstracts += int(labeled.document.abstract_token_count == 0)
        for metric, score in labeled.oracle.items():
            sums = self.score_sums[metric]
            sums["precision"] += score.precision
            sums["recall"] += score.recall
            sums["f1"] += score.f1

    @property
    def positive_rate(self) -> float:
        return self.positives / self.sentences if self.sentences else 0.0

    @property
    def mean_selected(self) -> float:
        return self.positives / self.documents if self.documents else 0.0

    def mean_oracle(self) -> dict[str, dict[str, float]]:
        if self.documents == 0:
            return {m: dict(v) for m, v in self.score_sums.items()}
        return {
            metric: {part: value / self.documents for part, value in sums.items()}
            for metric, sums in self.score_sums.items()
        }

    def as_dict(self) -> dict:
        return {
            "documents": self.documents,
            "sentences": self.sentences,
            "positives": self.positives,
            "positive_rate": self.positive_rate,
            "mean_selected": self.mean_selected,
            "empty_abstracts": self.empty_abstracts,
            "mean_oracle": self.mean_oracle(),
        }


def label_corpus(
    docs: Iterable[Document],
    max_selected: int | None = None,
    objective: str = "f1",
    stats: LabelStats | None = None,
) -> Iterator[LabeledDocument]:
    """Label a document stream, accumulating stats if a collector is given."""
    for doc in docs:
        labeled = greedy_label(doc, max_selected=max_selected, objective=objective)
        if stats is not None:
            stats.add(labeled)
        yield labeled


def labeled_to_json(labeled: LabeledDocument) -> dict:
    record = document_to_json(labeled.document)
    record["labels"] = list(labeled.labels)
    record["oracle"] = {
        metric: {"precision": s.precision, "recall": s.recall, "f1": s.f1}
        for metric, s in labeled.oracle.items()
    }
    return record


def labeled_from_json(record: dict) -> LabeledDocument:
    doc = document_from_json(record)
    labels = tuple(int(bit) for bit in record["labels"])
    oracle = {
        metric: RougeScore(value["precision"], value["recall"], value["f1"])
        for metric, value in record["oracle"].items()
    }
    selected = tuple(i for i, bit in enumerate(labels) if bit)
    return LabeledDocument(doc, labels, oracle, selected)
