"""Tests for corpus reading, cleaning, splitting, merging, and filtering."""

from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphlss.errors import DataError
from graphlss.ingest import (
    RawDocument,
    build_document,
    clean_text,
    filter_documents,
    load_dataset,
    load_stopwords,
    merge_short_sentences,
    normalize_tokens,
    read_documents,
    rouge_tokens,
    split_sentences,
    write_documents,
)

STOPWORDS = load_stopwords()


class TestCleanText:
    def test_newline_becomes_blank(self):
        assert clean_text("a\nb") == "a b"

    def test_plain_text_unchanged(self):
        assert clean_text("plain text") == "plain text"

    def test_replacement_table_applied(self):
        assert clean_text("x » y … z") == "x y z"

    def test_backslash_pairs_removed(self):
        assert clean_text("a \\\\ b") == "a b"

    def test_quote_marks_removed(self):
        assert clean_text("``quoted'' words") == "quoted words"

    def test_whitespace_collapsed_and_trimmed(self):
        assert clean_text("  a \t b\r\n c  ") == "a b c"

    @given(st.text(max_size=80))
    def test_no_double_spaces_or_replaced_chars(self, text):
        out = clean_text(text)
        assert "  " not in out
        assert not out.startswith(" ") and not out.endswith(" ")
        for bad in ("\n", "…", "»", "«", "“", "”"):
            assert bad not in out


class TestSplitSentences:
    def test_unambiguous_boundaries(self):
        assert split_sentences("A cat. A dog.") == ["A cat.", "A dog."]

    def test_empty_input(self):
        assert split_sentences("") == []

    def test_reference_marker_is_split_then_repairable(self):
        # digit lookahead splits even after an abbreviation
        assert split_sentences("Results in (fig. 1). Next.") == [
            "Results in (fig.",
            "1).",
            "Next.",
        ]

    def test_abbreviation_guard_blocks_uppercase_lookahead(self):
        assert split_sentences("We thank Dr. Smith for help.") == [
            "We thank Dr. Smith for help."
        ]

    def test_multi_word_abbreviation_tail(self):
        assert split_sentences("As shown by Lee et al. Recent work agrees.") == [
            "As shown by Lee et al. Recent work agrees."
        ]

    def test_question_and_exclamation(self):
        assert split_sentences("Why? Because! So there.") == [
            "Why?",
            "Because!",
            "So there.",
        ]

    def test_lowercase_continuation_not_split(self):
        assert split_sentences("approx. half the sample") == ["approx. half the sample"]

    def test_no_boundary_single_sentence(self):
        assert split_sentences("no terminal punctuation here") == [
            "no terminal punctuation here"
        ]

    def test_trailing_space_after_period(self):
        assert split_sentences("Done. ") == ["Done. "]

    @given(st.text(alphabet=" .!?abcdefABC123", max_size=60))
    def test_join_recovers_input(self, text):
        cleaned = clean_text(text)
        assert " ".join(split_sentences(cleaned)) == cleaned


class TestMergeShortSentences:
    def test_tail_fragment_merged(self):
        # only the zero-alpha tail merges at threshold 1
        sents = ["Neptune masses can be excluded by our limits determinations (fig.", "1).", "Next."]
        assert merge_short_sentences(sents, min_tokens=1) == [
            "Neptune masses can be excluded by our limits determinations (fig. 1).",
            "Next.",
        ]

    def test_nothing_short_unchanged(self):
        sents = ["long sentence one here", "long sentence two here"]
        assert merge_short_sentences(sents, min_tokens=2) == sents

    def test_hand_example(self):
        assert merge_short_sentences(["a b c", "x"], min_tokens=2) == ["a b c x"]

    def test_first_sentence_exempt(self):
        assert merge_short_sentences(["x", "a long sentence follows here"], min_tokens=2) == [
            "x",
            "a long sentence follows here",
        ]

    def test_consecutive_short_sentences_collapse(self):
        assert merge_short_sentences(["one two three", "a", "b"], min_tokens=2) == [
            "one two three a b"
        ]

    def test_numeric_tokens_do_not_count(self):
        # "12 34" has zero alphabetic tokens
        assert merge_short_sentences(["a b c", "12 34"], min_tokens=1) == ["a b c 12 34"]

    @given(st.lists(st.text(alphabet="ab1 ", min_size=1, max_size=12), max_size=8), st.integers(1, 6))
    def test_token_multiset_preserved(self, sents, min_tokens):
        before = sorted(" ".join(sents).split())
        after = sorted(" ".join(merge_short_sentences(sents, min_tokens)).split())
        assert before == after


class TestNormalizeTokens:
    def test_lowercase_punctuation_stopwords(self):
        assert normalize_tokens("The Cat RAN.", frozenset({"the"})) == ["cat", "ran"]

    def test_empty(self):
        assert normalize_tokens("", STOPWORDS) == []

    def test_non_ascii_bytes_dropped(self):
        assert normalize_tokens("naïve café", frozenset()) == ["nave", "caf"]

    def test_pure_punctuation_token_disappears(self):
        assert normalize_tokens("wait -- what", frozenset()) == ["wait", "what"]

    def test_digits_kept(self):
        assert normalize_tokens("sample of 120 items", frozenset()) == [
            "sample",
            "of",
            "120",
            "items",
        ]

    def test_rouge_tokens_keep_stopwords(self):
        assert rouge_tokens("The cat ran.") == ["the", "cat", "ran"]


def _raw(i, article, abstract="An abstract with several informative tokens."):
    return {"id": f"d{i}", "article_text": article, "abstract_text": abstract}


class TestLoadDataset:
    def test_valid_lines_in_order(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        lines = [_raw(i, f"Article number {i} has text.") for i in range(3)]
        path.write_text("\n".join(json.dumps(r) for r in lines) + "\n")
        docs = list(load_dataset(path))
        assert [d.id for d in docs] == ["d0", "d1", "d2"]

    def test_empty_article_still_yielded(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps(_raw(0, "")) + "\n")
        docs = list(load_dataset(path))
        assert len(docs) == 1 and docs[0].article_text == ""

    def test_malformed_line_counted_and_skipped(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        rows = [json.dumps(_raw(i, "Some article text here.")) for i in range(5)]
        rows[2] = "{not json"
        path.write_text("\n".join(rows) + "\n")
        counters = {}
        docs = list(load_dataset(path, counters=counters))
        assert len(docs) == 4
        assert counters["malformed"] == 1

    def test_missing_abstract_counted(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps({"id": "x", "article_text": "Text."}) + "\n")
        counters = {}
        assert list(load_dataset(path, counters=counters)) == []
        assert counters["missing_field"] == 1

    def test_article_sections_concatenated(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        record = {
            "id": "s",
            "article_sections": ["First part.", "Second part."],
            "abstract_text": "Short abstract.",
        }
        path.write_text(json.dumps(record) + "\n")
        docs = list(load_dataset(path))
        assert docs[0].article_text == "First part. Second part."

    def test_missing_file_fatal(self, tmp_path):
        with pytest.raises(DataError):
            list(load_dataset(tmp_path / "absent.jsonl"))

    def test_generated_ids_when_absent(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        record = {"article_text": "Text here.", "abstract_text": "Abs."}
        path.write_text(json.dumps(record) + "\n")
        docs = list(load_dataset(path, split="train"))
        assert docs[0].id == "train-000001"


class TestBuildDocument:
    def test_indices_contiguous_after_merge(self):
        raw = RawDocument(
            id="d",
            article_text="Results in (fig. 1). The second sentence is long enough. Third sentence also has enough tokens.",
            abstract_text="A compact abstract sentence.",
        )
        doc = build_document(raw, STOPWORDS, min_tokens=2)
        assert [s.index for s in doc.sentences] == list(range(len(doc.sentences)))
        assert doc.sentences[0].raw_text.startswith("Results in (fig. 1).")

    def test_content_tokens_subset_of_normalized(self):
        raw = RawDocument(id="d", article_text="The cat ran quickly.", abstract_text="Cat ran.")
        doc = build_document(raw, STOPWORDS)
        sentence = doc.sentences[0]
        assert set(sentence.content_tokens) <= set(rouge_tokens(sentence.raw_text))
        assert "the" not in sentence.content_tokens

    def test_abstract_tokenized_with_stopwords_kept(self):
        raw = RawDocument(id="d", article_text="A long article body sentence.", abstract_text="The result was good.")
        doc = build_document(raw, STOPWORDS)
        assert doc.abstract_sentences == (("the", "result", "was", "good"),)


def _doc(i, article, abstract="the reference summary mentions results"):
    raw = RawDocument(id=f"d{i}", article_text=article, abstract_text=abstract)
    return build_document(raw, STOPWORDS)


LONG_ARTICLE = (
    "The first sentence of this article is reasonably long. "
    "The second sentence carries additional content about results. "
    "A third sentence closes the argument with more words."
)


class TestFilterDocuments:
    def test_duplicates_removed_first_kept(self):
        docs = [_doc(0, LONG_ARTICLE), _doc(1, LONG_ARTICLE)]
        counters = {}
        kept = list(filter_documents(docs, counters))
        assert [d.id for d in kept] == ["d0"]
        assert counters["duplicate"] == 1

    def test_abstract_longer_than_article_dropped(self):
        short_article = "Tiny body here."
        long_abstract = " ".join(["word"] * 50) + "."
        docs = [_doc(0, short_article, long_abstract)]
        counters = {}
        assert list(filter_documents(docs, counters)) == []
        assert counters["abstract_too_long"] == 1

    def test_empty_article_dropped(self):
        counters = {}
        assert list(filter_documents([_doc(0, "")], counters)) == []
        assert counters["empty"] == 1

    def test_empty_abstract_dropped(self):
        docs = [_doc(0, LONG_ARTICLE, "")]
        counters = {}
        assert list(filter_documents(docs, counters)) == []
        assert counters["empty"] == 1

    def test_normal_document_passes_unchanged(self):
        doc = _doc(0, LONG_ARTICLE)
        assert list(filter_documents([doc])) == [doc]

    def test_idempotent(self):
        docs = [_doc(0, LONG_ARTICLE), _doc(1, LONG_ARTICLE), _doc(2, "")]
        once = list(filter_documents(docs))
        twice = list(filter_documents(once))
        assert once == twice


class TestDocumentRoundTrip:
    def test_write_then_read_identity(self, tmp_path):
        docs = [_doc(0, LONG_ARTICLE), _doc(1, "Another distinct article sentence with words.")]
        path = tmp_path / "docs.jsonl"
        assert write_documents(docs, path) == 2
        assert list(read_documents(path)) == docs

    def test_read_rejects_malformed(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text("{bad\n")
        with pytest.raises(DataError):
            list(read_documents(path))
