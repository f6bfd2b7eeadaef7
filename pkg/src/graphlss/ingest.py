"""Corpus reading, text cleaning, sentence handling, and token normalization.

The input format is JSON lines: one object per line with ``article_text``
(or ``article_sections``, a list of strings concatenated in order) and
``abstract_text``. Processing per document:

1. replace special characters with blanks and collapse whitespace,
2. split into sentences at ``. ! ?`` followed by whitespace and an
   uppercase letter or digit, guarded by an abbreviation list,
3. merge sentences with too few alphabetic tokens into their
   predecessor,
4. tokenize (surface tokens by whitespace; normalized tokens are
   lowercase, ASCII-only, punctuation-free, optionally stopword-free).

Degenerate documents (duplicates, empty articles or abstracts, abstracts
at least as long as the article) are dropped by :func:`filter_documents`.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from graphlss.errors import DataError

log = logging.getLogger(__name__)

# Replacement table applied by clean_text, in order. Pairs of backslashes
# and typographic quote marks collapse to a blank; literal whitespace
# escapes cover text that arrives with escaped control characters.
CLEAN_REPLACEMENTS: tuple[str, ...] = (
    "\\\\",
    "…",  # horizontal ellipsis
    "«",  # left guillemet
    "»",  # right guillemet
    "``",
    "''",
    "“",  # left double quote
    "”",  # right double quote
    "‘",  # left single quote
    "’",  # right single quote
)

# Final tokens that block a sentence boundary when the next character is
# an uppercase letter. Multi-word abbreviations appear as their final
# token ("et al." ends in "al"). A following digit always splits; the
# short-sentence merge repairs the resulting tails.
ABBREVIATIONS: frozenset[str] = frozenset(
    {
        "al",
        "approx",
        "ca",
        "cf",
        "dr",
        "e.g",
        "eq",
        "eqs",
        "et",
        "fig",
        "figs",
        "i.e",
        "jr",
        "mr",
        "mrs",
        "ms",
        "no",
        "pp",
        "prof",
        "ref",
        "refs",
        "resp",
        "sec",
        "sr",
        "st",
        "vol",
        "vs",
    }
)

DEFAULT_MIN_TOKENS = 5

_BOUNDARY = re.compile(r"[.!?]+ ")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


@dataclass(frozen=True)
class RawDocument:
    """One corpus record before any processing."""

    id: str
    article_text: str
    abstract_text: str


@dataclass(frozen=True)
class Sentence:
    index: int
    raw_text: str
    tokens: tuple[str, ...]
    content_tokens: tuple[str, ...]


@dataclass(frozen=True)
class Document:
    """Cleaned, sentence-split document with a tokenized abstract."""

    id: str
    sentences: tuple[Sentence, ...]
    abstract_sentences: tuple[tuple[str, ...], ...]

    @property
    def article_token_count(self) -> int:
        return sum(len(s.tokens) for s in self.sentences)

    @property
    def abstract_token_count(self) -> int:
        return sum(len(tokens) for tokens in self.abstract_sentences)


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a stopword file (one word per line, ``#`` comments allowed).

    Without a path the packaged English list is used.
    """
    if path is None:
        text = resources.files("graphlss.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        try:
            text = Path(path).read_text("utf-8")
        except OSError as exc:
            raise DataError(f"cannot read stopword file {path}: {exc}") from exc
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def clean_text(text: str) -> str:
    """Replace special characters with blanks and normalize whitespace."""
    for pattern in CLEAN_REPLACEMENTS:
        text = text.replace(pattern, " ")
    return " ".join(text.split())


def _final_token(prefix: str) -> str:
    """Word immediately before a boundary candidate, for the guard check.

    Keeps interior periods ("e.g"), strips surrounding brackets, quotes,
    and trailing periods, and lowercases.
    """
    end = len(prefix)
    start = end
    while start > 0 and not prefix[start - 1].isspace():
        start -= 1
    word = prefix[start:end]
    return word.strip(string.punctuation.replace(".", "")).strip(".").lower()


def split_sentences(text: str) -> list[str]:
    """Rule-based sentence boundary detection over cleaned text.

    A boundary is a run of ``.!?`` followed by a space and an uppercase
    letter or digit. When the following character is uppercase, a final
    token on the abbreviation list suppresses the boundary; a following
    digit always splits (reference markers like "(fig. 1)" are split and
    repaired later by the short-sentence merge).
    """
    if not text:
        return []
    sentences = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        if match.end() >= len(text):
            break
        follow = text[match.end()]
        if follow.isupper():
            if _final_token(text[: match.start()]) in ABBREVIATIONS:
                continue
        elif not follow.isdigit():
            continue
        sentences.append(text[start : match.end() - 1])
        start = match.end()
    tail = text[start:]
    if tail:
        sentences.append(tail)
    return sentences


def _alpha_token_count(sentence: str) -> int:
    return sum(1 for token in sentence.split() if any(c.isalpha() for c in token))


def merge_short_sentences(sents: list[str], min_tokens: int = DEFAULT_MIN_TOKENS) -> list[str]:
    """Merge sentences with fewer than ``min_tokens`` alphabetic tokens
    into their predecessor.

    The first sentence has no predecessor and is kept as-is. Order and
    the whitespace token multiset are preserved.
    """
    merged: list[str] = []
    for sentence in sents:
        if merged and _alpha_token_count(sentence) < min_tokens:
            merged[-1] = merged[-1] + " " + sentence
        else:
            merged.append(sentence)
    return merged


def normalize_tokens(sentence_text: str, stopwords: frozenset[str]) -> list[str]:
    """Lowercase, ASCII-only, punctuation-free tokens, minus stopwords.

    Non-ASCII characters are dropped, not transliterated, so "naïve"
    becomes "nave". Tokens that end up empty disappear.
    """
    text = sentence_text.lower().encode("ascii", "ignore").decode("ascii")
    text = text.translate(_PUNCT_TABLE)
    return [token for token in text.split() if token not in stopwords]


_NO_STOPWORDS: frozenset[str] = frozenset()


def rouge_tokens(text: str) -> list[str]:
    """Evaluation tokenization: normalized tokens with stopwords kept."""
    return normalize_tokens(text, _NO_STOPWORDS)


def load_dataset(
    path: str | Path,
    split: str | None = None,
    counters: dict[str, int] | None = None,
) -> Iterator[RawDocument]:
    """Stream records from a JSON-lines corpus file.

    Malformed lines and records without usable article/abstract fields
    are counted in ``counters`` (keys ``read``, ``malformed``,
    ``missing_field``) and skipped. A missing file is fatal.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    if counters is None:
        counters = {}
    counters.setdefault("read", 0)
    counters.setdefault("malformed", 0)
    counters.setdefault("missing_field", 0)
    label = split or path.stem
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            counters["read"] += 1
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                counters["malformed"] += 1
                log.warning("%s line %d: malformed JSON, skipped", path.name, line_number)
                continue
            if not isinstance(record, dict):
                counters["malformed"] += 1
                log.warning("%s line %d: record is not an object, skipped", path.name, line_number)
                continue
            article = record.get("article_text")
            if article is None and isinstance(record.get("article_sections"), list):
                article = " ".join(str(part) for part in record["article_sections"])
            abstract = record.get("abstract_text")
            if not isinstance(article, str) or not isinstance(abstract, str):
                counters["missing_field"] += 1
                log.warning("%s line %d: missing article/abstract field, skipped", path.name, line_number)
                continue
            doc_id = record.get("id")
            if not doc_id:
                doc_id = f"{label}-{line_number:06d}"
            yield RawDocument(id=str(doc_id), article_text=article, abstract_text=abstract)


def build_document(
    raw: RawDocument,
    stopwords: frozenset[str],
    min_tokens: int = DEFAULT_MIN_TOKENS,
) -> Document:
    """Clean, split, merge, and tokenize a raw record.

    May produce a document with zero sentences or an empty abstract;
    :func:`filter_documents` removes those.
    """
    article_sents = merge_short_sentences(split_sentences(clean_text(raw.article_text)), min_tokens)
    sentences = tuple(
        Sentence(
            index=i,
            raw_text=text,
            tokens=tuple(text.split()),
            content_tokens=tuple(normalize_tokens(text, stopwords)),
        )
        for i, text in enumerate(article_sents)
    )
    abstract_sents = merge_short_sentences(split_sentences(clean_text(raw.abstract_text)), min_tokens)
    abstract = tuple(
        tokens
        for tokens in (tuple(rouge_tokens(text)) for text in abstract_sents)
        if tokens
    )
    return Document(id=raw.id, sentences=sentences, abstract_sentences=abstract)


def filter_documents(
    docs: Iterable[Document],
    counters: dict[str, int] | None = None,
) -> Iterator[Document]:
    """Drop duplicates and degenerate documents.

    Removed: exact duplicates of the cleaned article text (first
    occurrence wins), documents with no sentences or no abstract tokens,
    and documents whose abstract has at least as many tokens as the
    article. Counted under ``duplicate``, ``empty``, and
    ``abstract_too_long``.
    """
    if counters is None:
        counters = {}
    counters.setdefault("duplicate", 0)
    counters.setdefault("empty", 0)
    counters.setdefault("abstract_too_long", 0)
    seen: set[str] = set()
    for doc in docs:
        if not doc.sentences or doc.abstract_token_count == 0:
            counters["empty"] += 1
            continue
        if doc.abstract_token_count >= doc.article_token_count:
            counters["abstract_too_long"] += 1
            continue
        article_text = " ".join(s.raw_text for s in doc.sentences)
        digest = hashlib.md5(article_text.encode("utf-8")).hexdigest()
        if digest in seen:
            counters["duplicate"] += 1
            continue
        seen.add(digest)
        yield doc


def document_to_json(doc: Document) -> dict:
    return {
        "id": doc.id,
        "sentences": [
            {
                "index": s.index,
                "raw_text": s.raw_text,
                "tokens": list(s.tokens),
                "content_tokens": list(s.content_tokens),
            }
            for s in doc.sentences
        ],
        "abstract_sentences": [list(tokens) for tokens in doc.abstract_sentences],
    }


def document_from_json(record: dict) -> Document:
    try:
        sentences = tuple(
            Sentence(
                index=int(s["index"]),
                raw_text=s["raw_text"],
                tokens=tuple(s["tokens"]),
                content_tokens=tuple(s["content_tokens"]),
            )
            for s in record["sentences"]
        )
        abstract = tuple(tuple(tokens) for tokens in record["abstract_sentences"])
        return Document(id=str(record["id"]), sentences=sentences, abstract_sentences=abstract)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed document record: {exc}") from exc


def write_documents(docs: Iterable[Document], path: str | Path) -> int:
    """Write documents as JSON lines; returns the number written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as handle:
        for doc in docs:
            handle.write(json.dumps(document_to_json(doc), ensure_ascii=False) + "\n")
            count += 1
    tmp.replace(path)
    return count


def read_documents(path: str | Path) -> Iterator[Document]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"document file not found: {path}")
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path} line {line_number}: malformed JSON: {exc}") from exc
            yield document_from_json(record)
