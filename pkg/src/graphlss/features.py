"""Scalar machinery for graph construction.

Covers the capped corpus vocabulary, the noun/verb/adjective content-word
filter (lexicon plus suffix heuristics, pluggable), word-embedding
loading with an explicit miss policy, sentence-vector provisioning
(external interchange file or mean-pooled fallback), per-document tf-idf,
and cosine similarity.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from graphlss.errors import DataError
from graphlss.ingest import Document, Sentence, load_stopwords

log = logging.getLogger(__name__)

VOCAB_CAP = 50_000
CONTENT_TAGS = frozenset({"noun", "verb", "adj"})

# Suffix fallback for tokens missing from the lexicon, checked in order.
_SUFFIX_RULES: tuple[tuple[str, str], ...] = (
    ("tion", "noun"),
    ("ness", "noun"),
    ("ment", "noun"),
    ("ize", "verb"),
    ("ify", "verb"),
    ("ous", "adj"),
    ("ful", "adj"),
    ("ive", "adj"),
    ("al", "adj"),
)

VOCAB_HEADER = "graphlss-vocab v1"
EMBED_HEADER_PREFIX = "graphlss-embeddings v1 dim="


@dataclass(frozen=True)
class Vocabulary:
    """Capped token inventory with corpus and sentence-level counts.

    Ids are dense 0..len-1, assigned by descending corpus frequency with
    lexicographic tie-breaks, so the same corpus always yields the same
    map.
    """

    token_to_id: dict[str, int]
    frequency: dict[str, int]
    sentence_df: dict[str, int]

    def __len__(self) -> int:
        return len(self.token_to_id)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id_of(self, token: str) -> int | None:
        return self.token_to_id.get(token)

    def tokens_by_id(self) -> list[str]:
        ordered = sorted(self.token_to_id.items(), key=lambda item: item[1])
        return [token for token, _ in ordered]


def build_vocabulary(corpus: Iterable[Document], cap: int = VOCAB_CAP) -> Vocabulary:
    """Count content tokens over a corpus and keep the ``cap`` most frequent.

    Ties rank lexicographically. Sentence-level document frequency counts
    the sentences (across the whole corpus) containing each token.
    """
    frequency: Counter = Counter()
    sentence_df: Counter = Counter()
    empty = True
    for doc in corpus:
        empty = False
        for sentence in doc.sentences:
            frequency.update(sentence.content_tokens)
            sentence_df.update(set(sentence.content_tokens))
    if empty:
        raise DataError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(frequency.items(), key=lambda item: (-item[1], item[0]))[:cap]
    token_to_id = {token: i for i, (token, _) in enumerate(ranked)}
    return Vocabulary(
        token_to_id=token_to_id,
        frequency={token: frequency[token] for token in token_to_id},
        sentence_df={token: sentence_df[token] for token in token_to_id},
    )


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as handle:
        handle.write(VOCAB_HEADER + "\n")
        for token in vocab.tokens_by_id():
            handle.write(f"{token} {vocab.frequency[token]} {vocab.sentence_df[token]}\n")
    tmp.replace(path)


def load_vocabulary(path: str | Path) -> Vocabulary:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"vocabulary file not found: {path}")
    token_to_id: dict[str, int] = {}
    frequency: dict[str, int] = {}
    sentence_df: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        if header != VOCAB_HEADER:
            raise DataError(f"{path}: unexpected vocabulary header {header!r}")
        for line_number, line in enumerate(handle, start=2):
            parts = line.split()
            if len(parts) != 3:
                raise DataError(f"{path} line {line_number}: expected 'token freq df'")
            token, freq, df = parts
            token_to_id[token] = len(token_to_id)
            frequency[token] = int(freq)
            sentence_df[token] = int(df)
    return Vocabulary(token_to_id, frequency, sentence_df)


@dataclass(frozen=True)
class ContentWordFilter:
    """Total classifier from token to coarse part-of-speech tag set.

    Lookup order: stopword set (excluded outright), lexicon, suffix
    rules, then a default of noun so unknown words stay eligible as
    graph nodes.
    """

    stopwords: frozenset[str]
    lexicon: dict[str, frozenset[str]]

    def classify(self, token: str) -> frozenset[str]:
        tags = self.lexicon.get(token)
        if tags is not None:
            return tags
        for suffix, tag in _SUFFIX_RULES:
            if len(token) > len(suffix) and token.endswith(suffix):
                return frozenset({tag})
        return frozenset({"noun"})

    def is_content(self, token: str) -> bool:
        if token in self.stopwords:
            return False
        return bool(self.classify(token) & CONTENT_TAGS)


def load_pos_lexicon(path: str | Path | None = None) -> dict[str, frozenset[str]]:
    """Read a ``token tag[,tag...]`` lexicon; packaged file by default."""
    if path is None:
        text = resources.files("graphlss.data").joinpath("pos_lexicon.txt").read_text("utf-8")
    else:
        try:
            text = Path(path).read_text("utf-8")
        except OSError as exc:
            raise DataError(f"cannot read lexicon file {path}: {exc}") from exc
    lexicon: dict[str, frozenset[str]] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"malformed lexicon line: {line!r}")
        token, tags = parts
        lexicon[token.lower()] = frozenset(tags.lower().split(","))
    return lexicon


def default_content_filter(
    stopwords: frozenset[str] | None = None,
    lexicon_path: str | Path | None = None,
) -> ContentWordFilter:
    if stopwords is None:
        stopwords = load_stopwords()
    return ContentWordFilter(stopwords=stopwords, lexicon=load_pos_lexicon(lexicon_path))


def content_words(tokens: Sequence[str], word_filter: ContentWordFilter) -> list[str]:
    """Tokens whose tag set intersects noun/verb/adjective, order kept."""
    return [token for token in tokens if word_filter.is_content(token)]


@dataclass(frozen=True)
class EmbeddingTable:
    """Vocabulary-restricted word vectors with a miss policy.

    Tokens the file did not cover resolve through the policy: ``zero``
    returns the zero vector, ``hash`` a deterministic unit vector seeded
    from the token bytes.
    """

    dimension: int
    vectors: dict[str, np.ndarray]
    miss_policy: str = "zero"

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def miss_vector(self, token: str) -> np.ndarray:
        if self.miss_policy == "zero":
            return np.zeros(self.dimension)
        seed = int.from_bytes(hashlib.md5(token.encode("utf-8")).digest()[:8], "little")
        vector = np.random.default_rng(seed).standard_normal(self.dimension)
        return vector / np.linalg.norm(vector)

    def lookup(self, token: str) -> np.ndarray:
        vector = self.vectors.get(token)
        if vector is not None:
            return vector
        return self.miss_vector(token)


def load_word_embeddings(
    path: str | Path,
    vocab: Vocabulary,
    miss_policy: str = "zero",
) -> EmbeddingTable:
    """Load ``token v1 .. v_d`` text vectors for the given vocabulary.

    Lines for out-of-vocabulary tokens are skipped. Inconsistent
    dimensions or an empty intersection with the vocabulary are fatal.
    """
    if miss_policy not in ("zero", "hash"):
        raise ValueError(f"unknown miss policy {miss_policy!r}")
    path = Path(path)
    if not path.is_file():
        raise DataError(f"word embedding file not found: {path}")
    vectors: dict[str, np.ndarray] = {}
    dimension: int | None = None
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2 or not parts[0]:
                continue
            token = parts[0]
            if dimension is None:
                dimension = len(parts) - 1
            elif len(parts) - 1 != dimension:
                raise DataError(
                    f"{path} line {line_number}: dimension {len(parts) - 1} != {dimension}"
                )
            if token not in vocab:
                continue
            try:
                vector = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise DataError(f"{path} line {line_number}: bad float: {exc}") from exc
            if not np.all(np.isfinite(vector)):
                raise DataError(f"{path} line {line_number}: non-finite component")
            vectors[token] = vector
    if dimension is None:
        raise DataError(f"{path}: no embedding rows found")
    if not vectors:
        raise DataError(f"{path}: no embedding rows match the vocabulary")
    return EmbeddingTable(dimension=dimension, vectors=vectors, miss_policy=miss_policy)


@dataclass(frozen=True)
class SentenceEmbeddings:
    """External per-sentence vectors keyed by (doc id, sentence index)."""

    dimension: int
    vectors: dict[tuple[str, int], np.ndarray]

    def get(self, doc_id: str, index: int) -> np.ndarray:
        vector = self.vectors.get((doc_id, index))
        if vector is None:
            raise DataError(f"no sentence embedding for document {doc_id!r} sentence {index}")
        return vector


def load_sentence_embeddings(path: str | Path) -> SentenceEmbeddings:
    """Read the sentence-vector interchange format.

    Header line ``graphlss-embeddings v1 dim=<d>``, then one line per
    sentence: ``<doc_id> <sentence_index> v1 .. v_d``.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"sentence embedding file not found: {path}")
    vectors: dict[tuple[str, int], np.ndarray] = {}
    with path.open("r", encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        if not header.startswith(EMBED_HEADER_PREFIX):
            raise DataError(f"{path}: unexpected header {header!r}")
        try:
            dimension = int(header[len(EMBED_HEADER_PREFIX) :])
        except ValueError as exc:
            raise DataError(f"{path}: bad dimension in header {header!r}") from exc
        if dimension < 1:
            raise DataError(f"{path}: dimension must be positive, got {dimension}")
        for line_number, line in enumerate(handle, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dimension + 2:
                raise DataError(
                    f"{path} line {line_number}: expected {dimension + 2} fields, got {len(parts)}"
                )
            doc_id, index = parts[0], int(parts[1])
            vector = np.array([float(x) for x in parts[2:]], dtype=np.float64)
            if not np.all(np.isfinite(vector)):
                raise DataError(f"{path} line {line_number}: non-finite component")
            vectors[(doc_id, index)] = vector
    return SentenceEmbeddings(dimension=dimension, vectors=vectors)


def external_sentence_vectors(doc: Document, table: SentenceEmbeddings) -> list[np.ndarray]:
    """One stored vector per sentence, fatal if any are missing."""
    return [table.get(doc.id, sentence.index) for sentence in doc.sentences]


def pooled_sentence_vectors(
    doc: Document,
    table: EmbeddingTable,
    word_filter: ContentWordFilter,
) -> list[np.ndarray]:
    """Mean of the file-backed vectors of each sentence's content words.

    Sentences whose content words all miss the table get the zero
    vector. This is the offline stand-in for an external encoder.
    """
    out = []
    for sentence in doc.sentences:
        hits = [
            table.vectors[token]
            for token in content_words(sentence.content_tokens, word_filter)
            if token in table.vectors
        ]
        if hits:
            out.append(np.mean(hits, axis=0))
        else:
            out.append(np.zeros(table.dimension))
    return out


def document_df(doc: Document) -> Counter:
    """Sentence-level document frequency of content tokens within one document."""
    df: Counter = Counter()
    for sentence in doc.sentences:
        df.update(set(sentence.content_tokens))
    return df


def tf_idf(
    token: str,
    sentence: Sentence,
    doc: Document,
    df_doc: Counter | None = None,
) -> float:
    """Smoothed tf-idf of a token within one sentence of one document.

    tf is the share of the sentence's content tokens equal to ``token``;
    idf is ln((1+n)/(1+df)) + 1 with df counted over this document's
    sentences. ``df_doc`` may carry a precomputed frequency map to avoid
    rescanning the document on every call.
    """
    occurrences = sentence.content_tokens.count(token)
    if occurrences == 0:
        raise ValueError(f"token {token!r} not in sentence {sentence.index} content tokens")
    tf = occurrences / len(sentence.content_tokens)
    if df_doc is None:
        df_doc = document_df(doc)
    idf = math.log((1 + len(doc.sentences)) / (1 + df_doc[token])) + 1.0
    return tf * idf


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity with the zero-norm convention pinned to 0.0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    norm_u = float(np.linalg.norm(u))
    norm_v = float(np.linalg.norm(v))
    if norm_u == 0.0 or norm_v == 0.0:
        return 0.0
    return float(np.dot(u, v) / (norm_u * norm_v))
