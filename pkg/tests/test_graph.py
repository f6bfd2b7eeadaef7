"""Tests for graph assembly, binary round trips, and statistics."""

from __future__ import annotations

import numpy as np
import pytest

from graphlss.errors import GraphFormatError
from graphlss.features import EmbeddingTable, build_vocabulary, cosine, default_content_filter, tf_idf
from graphlss.graph import (
    GraphConfig,
    GraphStats,
    add_order_edges,
    add_sentence_similarity_edges,
    add_word_sentence_edges,
    add_word_similarity_edges,
    build_graph,
    deserialize,
    from_json_dict,
    graph_stats,
    graphs_equal,
    load_graph,
    save_graph,
    select_word_nodes,
    serialize,
    to_json_dict,
    validate_graph,
)
from graphlss.oracle import greedy_label
from tests.test_oracle import make_document

FILTER = default_content_filter()


def embedding_table(tokens, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    vectors = {t: rng.normal(size=dim) for t in tokens}
    return EmbeddingTable(dimension=dim, vectors=vectors)


def labeled_fixture(sentence_token_lists, abstract_tokens, doc_id="d"):
    doc = make_document(doc_id, sentence_token_lists, abstract_tokens)
    return greedy_label(doc)


def build_fixture_graph(
    sentence_token_lists,
    abstract_tokens=("alpha",),
    config=GraphConfig(),
    sent_dim=3,
    seed=0,
    doc_id="d",
):
    ldoc = labeled_fixture(sentence_token_lists, list(abstract_tokens), doc_id)
    doc = ldoc.document
    vocab = build_vocabulary([doc])
    tokens = {t for s in doc.sentences for t in s.content_tokens}
    table = embedding_table(tokens, seed=seed)
    rng = np.random.default_rng(seed + 1)
    sent_vectors = [rng.normal(size=sent_dim) for _ in doc.sentences]
    return build_graph(ldoc, vocab, table, sent_vectors, config, FILTER)


class TestOrderEdges:
    def test_single_sentence(self):
        index, weights = add_order_edges(1)
        assert index.shape == (0, 2) and weights.shape == (0,)

    def test_chain_of_four(self):
        index, weights = add_order_edges(4)
        assert index.tolist() == [[0, 1], [1, 2], [2, 3]]
        assert weights.tolist() == [1.0, 1.0, 1.0]

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            add_order_edges(0)


class TestSentenceSimilarityEdges:
    def test_threshold_excludes_all(self):
        vectors = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([-1.0, 0.0])]
        index, _ = add_sentence_similarity_edges(vectors, window=2, t_ss=0.5)
        assert index.shape == (0, 2)

    def test_identical_embeddings_window_one(self):
        vectors = [np.array([1.0, 1.0])] * 4
        index, weights = add_sentence_similarity_edges(vectors, window=1, t_ss=0.99)
        assert index.tolist() == [[0, 1], [1, 2], [2, 3]]
        np.testing.assert_allclose(weights, 1.0, atol=1e-6)

    def test_window_bounds_pairs(self):
        vectors = [np.array([1.0, 0.0])] * 4
        index, _ = add_sentence_similarity_edges(vectors, window=2, t_ss=0.0)
        assert index.tolist() == [[0, 1], [0, 2], [1, 2], [1, 3], [2, 3]]

    def test_matches_brute_force_enumeration(self):
        rng = np.random.default_rng(5)
        vectors = [rng.normal(size=2) for _ in range(4)]
        window, t_ss = 2, 0.9
        index, weights = add_sentence_similarity_edges(vectors, window, t_ss)
        expected = []
        for i in range(4):
            for j in range(i + 1, 4):
                if 0 < j - i <= window and cosine(vectors[i], vectors[j]) >= t_ss:
                    expected.append((i, j, cosine(vectors[i], vectors[j])))
        assert index.tolist() == [[i, j] for i, j, _ in expected]
        np.testing.assert_allclose(weights, [w for _, _, w in expected], atol=1e-6)

    def test_zero_vector_sentence_never_clears_positive_threshold(self):
        # zero-norm pairs score 0.0 by convention
        vectors = [np.zeros(2), np.array([1.0, 0.0])]
        index, _ = add_sentence_similarity_edges(vectors, window=3, t_ss=0.1)
        assert index.shape == (0, 2)


class TestWordSentenceEdges:
    def test_word_in_two_sentences(self):
        doc = make_document("d", [["cat", "dog"], ["cat", "fish"]], ["x"])
        index, weights = add_word_sentence_edges(doc, ["cat", "dog", "fish"])
        pairs = index.tolist()
        assert pairs.count([0, 0]) == 1 and pairs.count([0, 1]) == 1
        assert len(pairs) == 4
        assert np.all(weights > 0)

    def test_weights_delegate_to_tf_idf(self):
        doc = make_document("d", [["cat", "cat", "dog"], ["dog", "fish"]], ["x"])
        tokens = ["cat", "dog", "fish"]
        index, weights = add_word_sentence_edges(doc, tokens)
        for (word_idx, sent_idx), weight in zip(index.tolist(), weights.tolist()):
            expected = tf_idf(tokens[word_idx], doc.sentences[sent_idx], doc)
            assert weight == pytest.approx(expected, rel=1e-6)

    def test_full_incidence_enumeration(self):
        doc = make_document("d", [["cat"], ["cat", "dog"]], ["x"])
        index, _ = add_word_sentence_edges(doc, ["cat", "dog"])
        assert index.tolist() == [[0, 0], [0, 1], [1, 1]]

    def test_duplicate_token_in_sentence_single_edge(self):
        doc = make_document("d", [["cat", "cat"]], ["x"])
        index, _ = add_word_sentence_edges(doc, ["cat"])
        assert index.tolist() == [[0, 0]]


class TestWordSimilarityEdges:
    def test_orthogonal_vectors_no_edges(self):
        vectors = np.eye(3)
        index, _ = add_word_similarity_edges(vectors, t_ww=0.1)
        assert index.shape == (0, 2)

    def test_duplicate_vectors_connect_with_weight_one(self):
        vectors = np.array([[1.0, 2.0], [1.0, 2.0], [-2.0, 1.0]])
        index, weights = add_word_similarity_edges(vectors, t_ww=0.99)
        assert index.tolist() == [[0, 1]]
        assert weights[0] == pytest.approx(1.0, abs=1e-6)

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(9)
        vectors = rng.normal(size=(5, 3))
        index, weights = add_word_similarity_edges(vectors, t_ww=0.3)
        expected = []
        for i in range(5):
            for j in range(i + 1, 5):
                value = cosine(vectors[i], vectors[j])
                if value >= 0.3:
                    expected.append((i, j, value))
        assert index.tolist() == [[i, j] for i, j, _ in expected]
        np.testing.assert_allclose(weights, [w for _, _, w in expected], atol=1e-6)


class TestBuildGraph:
    def test_single_sentence_document(self):
        graph = build_fixture_graph([["cat", "dog", "fish"]], config=GraphConfig(t_ww=1.1 - 0.2))
        assert graph.n == 1 and graph.m == 3
        assert graph.edge_count("ns") == 0
        assert graph.edge_count("ss") == 0
        assert graph.edge_count("ws") == 3

    def test_three_sentences_identical_embeddings(self):
        ldoc = labeled_fixture([["cat"], ["dog"], ["fish"]], ["cat"])
        vocab = build_vocabulary([ldoc.document])
        table = embedding_table(["cat", "dog", "fish"])
        same = np.array([0.5, 0.5])
        graph = build_graph(
            ldoc, vocab, table, [same, same, same], GraphConfig(window=1, t_ss=0.5), FILTER
        )
        assert graph.edges["ss"][0].tolist() == [[0, 1], [1, 2]]
        assert graph.edges["ns"][0].tolist() == [[0, 1], [1, 2]]

    def test_zero_word_nodes_still_valid(self, caplog):
        # every token is a stopword, so no word nodes survive
        ldoc = labeled_fixture([["the", "is"], ["of", "and"]], ["the"])
        vocab = build_vocabulary([make_document("other", [["cat"]], ["x"])])
        table = embedding_table(["cat"])
        graph = build_graph(ldoc, vocab, table, [np.ones(2), np.ones(2)], GraphConfig(), FILTER)
        assert graph.m == 0
        assert graph.edge_count("ws") == 0 and graph.edge_count("ww") == 0
        validate_graph(graph)

    def test_vector_count_mismatch_rejected(self):
        ldoc = labeled_fixture([["cat"], ["dog"]], ["cat"])
        vocab = build_vocabulary([ldoc.document])
        table = embedding_table(["cat", "dog"])
        with pytest.raises(GraphFormatError):
            build_graph(ldoc, vocab, table, [np.ones(2)], GraphConfig(), FILTER)

    def test_out_of_vocabulary_words_dropped(self):
        ldoc = labeled_fixture([["cat", "dog"]], ["cat"])
        vocab = build_vocabulary([make_document("v", [["cat"]], ["x"])])
        table = embedding_table(["cat", "dog"])
        graph = build_graph(ldoc, vocab, table, [np.ones(2)], GraphConfig(), FILTER)
        assert graph.m == 1

    def test_missing_embedding_word_still_a_node(self):
        ldoc = labeled_fixture([["cat", "dog"]], ["cat"])
        vocab = build_vocabulary([ldoc.document])
        table = EmbeddingTable(dimension=2, vectors={"cat": np.array([1.0, 0.0])})
        graph = build_graph(ldoc, vocab, table, [np.ones(2)], GraphConfig(), FILTER)
        assert graph.m == 2
        node_of = {vocab.token_to_id[t]: i for i, t in enumerate(["cat", "dog"])}
        dog_row = list(graph.word_vocab_ids).index(vocab.token_to_id["dog"])
        np.testing.assert_array_equal(graph.word_features[dog_row], np.zeros(2, dtype=np.float32))
        assert node_of  # vocabulary ids resolved

    def test_disabling_edge_type_changes_nothing_else(self):
        base = build_fixture_graph([["cat", "dog"], ["cat", "fish"]], seed=3)
        ablated = build_fixture_graph(
            [["cat", "dog"], ["cat", "fish"]],
            config=GraphConfig(include_ws=False),
            seed=3,
        )
        assert ablated.edge_count("ws") == 0
        assert np.array_equal(base.sentence_features, ablated.sentence_features)
        assert np.array_equal(base.word_features, ablated.word_features)
        assert np.array_equal(base.word_vocab_ids, ablated.word_vocab_ids)
        for edge_type in ("ns", "ss", "ww"):
            assert np.array_equal(base.edges[edge_type][0], ablated.edges[edge_type][0])
            assert np.array_equal(base.edges[edge_type][1], ablated.edges[edge_type][1])

    def test_labels_carried_from_labeling(self):
        ldoc = labeled_fixture([["cat"], ["unrelated", "words"]], ["cat"])
        vocab = build_vocabulary([ldoc.document])
        table = embedding_table(["cat", "unrelated", "words"])
        graph = build_graph(ldoc, vocab, table, [np.ones(2), np.ones(2)], GraphConfig(), FILTER)
        assert graph.labels.tolist() == list(ldoc.labels)

    def test_word_nodes_first_occurrence_order(self):
        doc = make_document("d", [["dog", "cat"], ["cat", "ant"]], ["x"])
        vocab = build_vocabulary([doc])
        assert select_word_nodes(doc, vocab, FILTER) == ["dog", "cat", "ant"]


class TestThresholdMonotonicity:
    def test_raising_thresholds_never_adds_edges(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            n = int(rng.integers(2, 6))
            vectors = [rng.normal(size=3) for _ in range(n)]
            words = rng.normal(size=(int(rng.integers(2, 6)), 3))
            previous_ss = previous_ww = None
            for threshold in (-1.0, -0.5, 0.0, 0.5, 1.0):
                ss_count = add_sentence_similarity_edges(vectors, 3, threshold)[0].shape[0]
                ww_count = add_word_similarity_edges(words, threshold)[0].shape[0]
                if previous_ss is not None:
                    assert ss_count <= previous_ss
                    assert ww_count <= previous_ww
                previous_ss, previous_ww = ss_count, ww_count


class TestSerialization:
    def test_round_trip_identity(self):
        graph = build_fixture_graph([["cat", "dog"], ["cat", "fish"], ["bird", "dog"]])
        restored = deserialize(serialize(graph))
        assert graphs_equal(graph, restored)

    def test_truncated_payload_rejected(self):
        graph = build_fixture_graph([["cat", "dog"]])
        payload = serialize(graph)
        with pytest.raises(GraphFormatError, match="truncated"):
            deserialize(payload[: len(payload) // 2])

    def test_bad_magic_rejected(self):
        with pytest.raises(GraphFormatError, match="magic"):
            deserialize(b"XXXX" + b"\x00" * 64)

    def test_version_mismatch_rejected(self):
        graph = build_fixture_graph([["cat"]])
        payload = bytearray(serialize(graph))
        payload[4:8] = (99).to_bytes(4, "little")
        with pytest.raises(GraphFormatError, match="version"):
            deserialize(bytes(payload))

    def test_trailing_bytes_rejected(self):
        graph = build_fixture_graph([["cat"]])
        with pytest.raises(GraphFormatError, match="trailing"):
            deserialize(serialize(graph) + b"\x00")

    def test_file_round_trip(self, tmp_path):
        graph = build_fixture_graph([["cat", "dog"], ["fish", "cat"]])
        path = tmp_path / "doc.glss"
        size = save_graph(graph, path)
        assert path.stat().st_size == size
        assert graphs_equal(graph, load_graph(path))

    def test_json_mirror_round_trip(self):
        graph = build_fixture_graph([["cat", "dog"], ["cat", "fish"]])
        assert graphs_equal(graph, from_json_dict(to_json_dict(graph)))

    def test_realistic_scale_size_order(self):
        # dims and counts in the region of a long-document corpus average
        rng = np.random.default_rng(0)
        n, m = 80, 156
        sentences = [[f"w{rng.integers(0, m)}" for _ in range(8)] for _ in range(n)]
        ldoc = labeled_fixture(sentences, ["w0", "w1", "w2"])
        vocab = build_vocabulary([ldoc.document])
        tokens = {t for s in ldoc.document.sentences for t in s.content_tokens}
        table = embedding_table(tokens, dim=300, seed=2)
        sent_vectors = [rng.normal(size=384) for _ in range(n)]
        graph = build_graph(ldoc, vocab, table, sent_vectors, GraphConfig(), FILTER)
        size = len(serialize(graph))
        assert 100_000 < size < 700_000


class TestGraphStats:
    def test_single_graph_exact_counts(self):
        graph = build_fixture_graph([["cat", "dog"], ["cat", "fish"]])
        stats = graph_stats([graph])
        summary = stats.as_dict()
        assert summary["graphs"] == 1
        assert summary["mean_sentence_nodes"] == graph.n
        assert summary["mean_word_nodes"] == graph.m
        for edge_type in ("ns", "ss", "ws", "ww"):
            assert summary["mean_edges"][edge_type] == graph.edge_count(edge_type)
        assert summary["mean_bytes"] == len(serialize(graph))

    def test_two_graph_means(self):
        a = build_fixture_graph([["cat", "dog"]], doc_id="a")
        b = build_fixture_graph([["cat", "dog"], ["fish", "bird"], ["ant", "bee"]], doc_id="b")
        summary = graph_stats([a, b]).as_dict()
        assert summary["mean_sentence_nodes"] == pytest.approx((a.n + b.n) / 2)
        assert summary["mean_word_nodes"] == pytest.approx((a.m + b.m) / 2)
        node_total = a.n + b.n + a.m + b.m
        assert summary["node_share"]["sentence"] == pytest.approx((a.n + b.n) / node_total)

    def test_empty_stream_rejected(self):
        with pytest.raises(GraphFormatError):
            graph_stats([])

    def test_incremental_add_matches(self):
        graphs = [build_fixture_graph([["cat", "dog"]], doc_id=f"g{i}") for i in range(3)]
        stats = GraphStats()
        for graph in graphs:
            stats.add(graph)
        assert stats.as_dict() == graph_stats(graphs).as_dict()
