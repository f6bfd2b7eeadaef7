"""Heterogeneous document graph assembly, serialization, and statistics.

Each document becomes one graph with two node families: its n sentences
and the m unique content words (nouns, verbs, adjectives) that survive
the vocabulary cap. Four undirected edge types connect them:

- ``ns``: the sentence-order chain, weight 1,
- ``ss``: sentence pairs within a window whose embedding cosine clears
  a threshold, weighted by that cosine,
- ``ws``: word-in-sentence incidences, tf-idf weighted,
- ``ww``: word pairs whose embedding cosine clears a second threshold.

Graphs are stored one file per document in a compact little-endian
binary layout (magic ``GLSS``), with a JSON mirror for debugging.
Node features are 32-bit floats on disk and in memory; training
promotes them to 64-bit.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from graphlss.errors import GraphFormatError
from graphlss.features import (
    ContentWordFilter,
    EmbeddingTable,
    Vocabulary,
    default_content_filter,
    document_df,
    tf_idf,
)
from graphlss.ingest import Document
from graphlss.oracle import LabeledDocument

log = logging.getLogger(__name__)

MAGIC = b"GLSS"
FORMAT_VERSION = 1
EDGE_TYPES = ("ns", "ss", "ws", "ww")

DEFAULT_WINDOW = 3
DEFAULT_T_SS = 0.6
DEFAULT_T_WW = 0.9

_EDGE_DTYPE = np.dtype([("src", "<u4"), ("dst", "<u4"), ("weight", "<f4")])


@dataclass(frozen=True)
class GraphConfig:
    """Construction knobs: window, similarity thresholds, ablation flags."""

    window: int = DEFAULT_WINDOW
    t_ss: float = DEFAULT_T_SS
    t_ww: float = DEFAULT_T_WW
    include_ns: bool = True
    include_ss: bool = True
    include_ws: bool = True
    include_ww: bool = True

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        for name, value in (("t_ss", self.t_ss), ("t_ww", self.t_ww)):
            if not -1.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [-1, 1], got {value}")

    def includes(self, edge_type: str) -> bool:
        return getattr(self, f"include_{edge_type}")


@dataclass(eq=False)
class HeteroGraph:
    """One document's graph: node features, labels, and typed edge lists.

    Edge arrays come in pairs: an (E, 2) uint32 endpoint array and an
    (E,) float32 weight array. Same-type edges are canonical with
    src < dst; word-sentence edges hold (word index, sentence index).
    """

    doc_id: str
    sentence_features: np.ndarray
    labels: np.ndarray
    word_features: np.ndarray
    word_vocab_ids: np.ndarray
    edges: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.sentence_features.shape[0])

    @property
    def m(self) -> int:
        return int(self.word_features.shape[0])

    def edge_count(self, edge_type: str) -> int:
        index, _ = self.edges[edge_type]
        return int(index.shape[0])


def _empty_edges() -> tuple[np.ndarray, np.ndarray]:
    return np.zeros((0, 2), dtype=np.uint32), np.zeros(0, dtype=np.float32)


def _as_edges(pairs: list[tuple[int, int]], weights: list[float]) -> tuple[np.ndarray, np.ndarray]:
    if not pairs:
        return _empty_edges()
    return (
        np.array(pairs, dtype=np.uint32),
        np.array(weights, dtype=np.float32),
    )


def add_order_edges(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Chain edges (i, i+1) with weight 1 over n sentences."""
    if n < 1:
        raise ValueError("need at least one sentence")
    return _as_edges([(i, i + 1) for i in range(n - 1)], [1.0] * (n - 1))


def _pair_cosine(features: np.ndarray, norms: np.ndarray, i: int, j: int) -> float:
    # same arithmetic as features.cosine, with norms hoisted out
    if norms[i] == 0.0 or norms[j] == 0.0:
        return 0.0
    return float(np.dot(features[i], features[j]) / (norms[i] * norms[j]))


def add_sentence_similarity_edges(
    sent_vectors: Sequence[np.ndarray],
    window: int,
    t_ss: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Edges (i, j, cosine) for 0 < j-i <= window and cosine >= t_ss."""
    features = np.asarray(sent_vectors, dtype=np.float64)
    n = features.shape[0]
    norms = np.linalg.norm(features, axis=1) if n else np.zeros(0)
    pairs, weights = [], []
    for i in range(n):
        for j in range(i + 1, min(i + window, n - 1) + 1):
            similarity = _pair_cosine(features, norms, i, j)
            if similarity >= t_ss:
                pairs.append((i, j))
                weights.append(similarity)
    return _as_edges(pairs, weights)


def add_word_sentence_edges(
    doc: Document,
    word_tokens: Sequence[str],
) -> tuple[np.ndarray, np.ndarray]:
    """One tf-idf-weighted edge per (word node, containing sentence)."""
    df = document_df(doc)
    node_index = {token: i for i, token in enumerate(word_tokens)}
    pairs, weights = [], []
    for sentence in doc.sentences:
        seen_here = set()
        for token in sentence.content_tokens:
            node = node_index.get(token)
            if node is None or token in seen_here:
                continue
            seen_here.add(token)
            pairs.append((node, sentence.index))
            weights.append(tf_idf(token, sentence, doc, df))
    return _as_edges(pairs, weights)


def add_word_similarity_edges(
    word_vectors: np.ndarray,
    t_ww: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Edges (a, b, cosine) over all word-node pairs with cosine >= t_ww."""
    features = np.asarray(word_vectors, dtype=np.float64)
    m = features.shape[0]
    norms = np.linalg.norm(features, axis=1) if m else np.zeros(0)
    pairs, weights = [], []
    for i in range(m):
        for j in range(i + 1, m):
            similarity = _pair_cosine(features, norms, i, j)
            if similarity >= t_ww:
                pairs.append((i, j))
                weights.append(similarity)
    return _as_edges(pairs, weights)


def select_word_nodes(
    doc: Document,
    vocab: Vocabulary,
    word_filter: ContentWordFilter,
) -> list[str]:
    """Unique content words of the document, in first-occurrence order,
    restricted to vocabulary members."""
    seen = set()
    tokens = []
    for sentence in doc.sentences:
        for token in sentence.content_tokens:
            if token in seen or token not in vocab or not word_filter.is_content(token):
                continue
            seen.add(token)
            tokens.append(token)
    return tokens


def build_graph(
    ldoc: LabeledDocument,
    vocab: Vocabulary,
    word_emb: EmbeddingTable,
    sent_vectors: Sequence[np.ndarray],
    config: GraphConfig = GraphConfig(),
    word_filter: ContentWordFilter | None = None,
) -> HeteroGraph:
    """Assemble the full graph for one labeled document.

    ``sent_vectors`` must hold one vector per sentence. Words missing
    from the embedding table still become nodes through its miss policy,
    so topology depends on the text alone.
    """
    doc = ldoc.document
    n = len(doc.sentences)
    if n == 0:
        raise GraphFormatError(f"document {doc.id!r} has no sentences")
    if len(sent_vectors) != n:
        raise GraphFormatError(
            f"document {doc.id!r}: {len(sent_vectors)} sentence vectors for {n} sentences"
        )
    if word_filter is None:
        word_filter = default_content_filter()

    word_tokens = select_word_nodes(doc, vocab, word_filter)
    if not word_tokens:
        log.warning("document %s has no word nodes; sentence-only graph", doc.id)
    word_vectors = (
        np.stack([word_emb.lookup(token) for token in word_tokens])
        if word_tokens
        else np.zeros((0, word_emb.dimension))
    )

    edges: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    edges["ns"] = add_order_edges(n) if config.include_ns else _empty_edges()
    edges["ss"] = (
        add_sentence_similarity_edges(sent_vectors, config.window, config.t_ss)
        if config.include_ss
        else _empty_edges()
    )
    edges["ws"] = (
        add_word_sentence_edges(doc, word_tokens) if config.include_ws else _empty_edges()
    )
    edges["ww"] = (
        add_word_similarity_edges(word_vectors, config.t_ww)
        if config.include_ww
        else _empty_edges()
    )

    graph = HeteroGraph(
        doc_id=doc.id,
        sentence_features=np.asarray(sent_vectors, dtype=np.float32).reshape(n, -1),
        labels=np.array(ldoc.labels, dtype=np.uint8),
        word_features=word_vectors.astype(np.float32),
        word_vocab_ids=np.array(
            [vocab.token_to_id[token] for token in word_tokens], dtype=np.uint32
        ),
        edges=edges,
    )
    validate_graph(graph)
    return graph


def validate_graph(graph: HeteroGraph) -> None:
    """Check structural invariants; raises GraphFormatError on violation."""
    n, m = graph.n, graph.m
    who = f"graph {graph.doc_id!r}"
    if graph.labels.shape != (n,):
        raise GraphFormatError(f"{who}: label count {graph.labels.shape} != n={n}")
    if not np.all((graph.labels == 0) | (graph.labels == 1)):
        raise GraphFormatError(f"{who}: labels must be bits")
    if graph.word_vocab_ids.shape != (m,):
        raise GraphFormatError(f"{who}: vocab id count != m={m}")
    if m and len(np.unique(graph.word_vocab_ids)) != m:
        raise GraphFormatError(f"{who}: duplicate word vocabulary ids")
    missing = [t for t in EDGE_TYPES if t not in graph.edges]
    if missing:
        raise GraphFormatError(f"{who}: missing edge types {missing}")

    def check(edge_type, src_limit, dst_limit, same_family):
        index, weights = graph.edges[edge_type]
        if index.shape != (weights.shape[0], 2):
            raise GraphFormatError(f"{who}: {edge_type} endpoint/weight shape mismatch")
        if index.size == 0:
            return
        if index[:, 0].max(initial=0) >= src_limit or index[:, 1].max(initial=0) >= dst_limit:
            raise GraphFormatError(f"{who}: {edge_type} endpoint out of range")
        if same_family and not np.all(index[:, 0] < index[:, 1]):
            raise GraphFormatError(f"{who}: {edge_type} edges not in canonical src<dst order")

    check("ns", n, n, True)
    check("ss", n, n, True)
    check("ws", m, n, False)
    check("ww", m, m, True)

    ns_index, ns_weights = graph.edges["ns"]
    if ns_index.shape[0] not in (0, n - 1):
        raise GraphFormatError(f"{who}: ns edge count {ns_index.shape[0]} != n-1={n - 1}")
    if ns_index.shape[0] == n - 1 and n > 1:
        expected = np.column_stack([np.arange(n - 1), np.arange(1, n)])
        if not np.array_equal(ns_index, expected.astype(np.uint32)):
            raise GraphFormatError(f"{who}: ns edges do not form the sentence chain")
        if not np.all(ns_weights == 1.0):
            raise GraphFormatError(f"{who}: ns weights must be 1")
    for edge_type in ("ss", "ww"):
        _, weights = graph.edges[edge_type]
        if weights.size and (weights.min() < -1.000001 or weights.max() > 1.000001):
            raise GraphFormatError(f"{who}: {edge_type} weights outside [-1, 1]")
    _, ws_weights = graph.edges["ws"]
    if ws_weights.size and ws_weights.min() < 0.0:
        raise GraphFormatError(f"{who}: ws weights must be nonnegative")


def serialize(graph: HeteroGraph) -> bytes:
    """Binary encoding: magic, version, id, shapes, labels, vocab ids,
    float32 features, then per-type edge blocks."""
    doc_id = graph.doc_id.encode("utf-8")
    n, m = graph.n, graph.m
    sent_dim = graph.sentence_features.shape[1] if n else 0
    word_dim = graph.word_features.shape[1] if graph.word_features.ndim == 2 else 0
    parts = [
        MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        struct.pack("<I", len(doc_id)),
        doc_id,
        struct.pack("<IIII", n, m, sent_dim, word_dim),
        np.ascontiguousarray(graph.labels, dtype=np.uint8).tobytes(),
        np.ascontiguousarray(graph.word_vocab_ids, dtype="<u4").tobytes(),
        np.ascontiguousarray(graph.sentence_features, dtype="<f4").tobytes(),
        np.ascontiguousarray(graph.word_features, dtype="<f4").tobytes(),
    ]
    for edge_type in EDGE_TYPES:
        index, weights = graph.edges[edge_type]
        block = np.zeros(index.shape[0], dtype=_EDGE_DTYPE)
        if index.shape[0]:
            block["src"] = index[:, 0]
            block["dst"] = index[:, 1]
            block["weight"] = weights
        parts.append(struct.pack("<I", index.shape[0]))
        parts.append(block.tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise GraphFormatError(
                f"truncated graph payload: need {size} bytes at offset {self.offset}, "
                f"have {len(self.data) - self.offset}"
            )
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def deserialize(data: bytes) -> HeteroGraph:
    """Decode and validate a serialized graph."""
    reader = _Reader(data)
    if reader.take(4) != MAGIC:
        raise GraphFormatError("bad magic: not a graph file")
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise GraphFormatError(f"unsupported graph format version {version}")
    doc_id = reader.take(reader.u32()).decode("utf-8")
    n, m, sent_dim, word_dim = (reader.u32() for _ in range(4))
    labels = np.frombuffer(reader.take(n), dtype=np.uint8).copy()
    vocab_ids = np.frombuffer(reader.take(4 * m), dtype="<u4").copy()
    sent_features = (
        np.frombuffer(reader.take(4 * n * sent_dim), dtype="<f4").reshape(n, sent_dim).copy()
    )
    word_features = (
        np.frombuffer(reader.take(4 * m * word_dim), dtype="<f4").reshape(m, word_dim).copy()
    )
    edges = {}
    for edge_type in EDGE_TYPES:
        count = reader.u32()
        block = np.frombuffer(reader.take(_EDGE_DTYPE.itemsize * count), dtype=_EDGE_DTYPE)
        index = np.column_stack([block["src"], block["dst"]]).astype(np.uint32)
        edges[edge_type] = (index.reshape(count, 2), block["weight"].astype(np.float32))
    if reader.offset != len(data):
        raise GraphFormatError(f"{len(data) - reader.offset} trailing bytes after graph payload")
    graph = HeteroGraph(
        doc_id=doc_id,
        sentence_features=sent_features,
        labels=labels,
        word_features=word_features,
        word_vocab_ids=vocab_ids,
        edges=edges,
    )
    validate_graph(graph)
    return graph


def graphs_equal(a: HeteroGraph, b: HeteroGraph) -> bool:
    """Structural equality across every field, exact on floats."""
    if a.doc_id != b.doc_id or a.n != b.n or a.m != b.m:
        return False
    if not (
        np.array_equal(a.labels, b.labels)
        and np.array_equal(a.word_vocab_ids, b.word_vocab_ids)
        and np.array_equal(a.sentence_features, b.sentence_features)
        and np.array_equal(a.word_features, b.word_features)
    ):
        return False
    for edge_type in EDGE_TYPES:
        index_a, weights_a = a.edges[edge_type]
        index_b, weights_b = b.edges[edge_type]
        if not (np.array_equal(index_a, index_b) and np.array_equal(weights_a, weights_b)):
            return False
    return True


def save_graph(graph: HeteroGraph, path: str | Path) -> int:
    """Write one graph file atomically; returns the byte count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = serialize(graph)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    tmp.replace(path)
    return len(payload)


def load_graph(path: str | Path) -> HeteroGraph:
    path = Path(path)
    if not path.is_file():
        raise GraphFormatError(f"graph file not found: {path}")
    return deserialize(path.read_bytes())


def to_json_dict(graph: HeteroGraph) -> dict:
    """Debug mirror of the binary layout."""
    return {
        "doc_id": graph.doc_id,
        "n": graph.n,
        "m": graph.m,
        "labels": graph.labels.tolist(),
        "word_vocab_ids": graph.word_vocab_ids.tolist(),
        "sentence_features": graph.sentence_features.tolist(),
        "word_features": graph.word_features.tolist(),
        "edges": {
            edge_type: [
                [int(src), int(dst), float(weight)]
                for (src, dst), weight in zip(index.tolist(), weights.tolist())
            ]
            for edge_type, (index, weights) in graph.edges.items()
        },
    }


def from_json_dict(record: dict) -> HeteroGraph:
    try:
        edges = {}
        for edge_type in EDGE_TYPES:
            rows = record["edges"][edge_type]
            index = np.array([[r[0], r[1]] for r in rows], dtype=np.uint32).reshape(len(rows), 2)
            weights = np.array([r[2] for r in rows], dtype=np.float32)
            edges[edge_type] = (index, weights)
        graph = HeteroGraph(
            doc_id=str(record["doc_id"]),
            sentence_features=np.array(record["sentence_features"], dtype=np.float32).reshape(
                record["n"], -1
            ),
            labels=np.array(record["labels"], dtype=np.uint8),
            word_features=np.array(record["word_features"], dtype=np.float32).reshape(
                record["m"], -1
            ),
            word_vocab_ids=np.array(record["word_vocab_ids"], dtype=np.uint32),
            edges=edges,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"malformed graph JSON: {exc}") from exc
    validate_graph(graph)
    return graph


@dataclass
class GraphStats:
    """Corpus-level means per node and edge type, plus disk usage."""

    graphs: int = 0
    sentence_nodes: int = 0
    word_nodes: int = 0
    edge_totals: dict[str, int] = field(default_factory=lambda: {t: 0 for t in EDGE_TYPES})
    total_bytes: int = 0

    def add(self, graph: HeteroGraph, serialized_size: int | None = None) -> None:
        self.graphs += 1
        self.sentence_nodes += graph.n
        self.word_nodes += graph.m
        for edge_type in EDGE_TYPES:
            self.edge_totals[edge_type] += graph.edge_count(edge_type)
        self.total_bytes += serialized_size if serialized_size is not None else len(serialize(graph))

    def mean(self, total: float) -> float:
        return total / self.graphs if self.graphs else 0.0

    def as_dict(self) -> dict:
        node_total = self.sentence_nodes + self.word_nodes
        edge_total = sum(self.edge_totals.values())
        return {
            "graphs": self.graphs,
            "mean_sentence_nodes": self.mean(self.sentence_nodes),
            "mean_word_nodes": self.mean(self.word_nodes),
            "node_share": {
                "sentence": self.sentence_nodes / node_total if node_total else 0.0,
                "word": self.word_nodes / node_total if node_total else 0.0,
            },
            "mean_edges": {t: self.mean(self.edge_totals[t]) for t in EDGE_TYPES},
            "edge_share": {
                t: self.edge_totals[t] / edge_total if edge_total else 0.0 for t in EDGE_TYPES
            },
            "mean_bytes": self.mean(self.total_bytes),
        }


def graph_stats(graphs: Iterable[HeteroGraph]) -> GraphStats:
    """Aggregate statistics over a graph stream."""
    stats = GraphStats()
    for graph in graphs:
        stats.add(graph)
    if stats.graphs == 0:
        raise GraphFormatError("cannot compute statistics over an empty graph stream")
    return stats
