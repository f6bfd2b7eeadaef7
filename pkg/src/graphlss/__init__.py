"""Heterogeneous sentence/word graphs for long-document extractive summarization.

The package turns JSON-lines article/abstract corpora into labeled
heterogeneous graphs (sentence and word nodes; order, similarity and
occurrence edges), trains a graph attention classifier over them with
plain numpy, and scores the selected sentences with ROUGE. Everything
is reachable through the ``graphlss`` command line tool; the modules
below are the library surface.
"""

from graphlss.errors import DataError, GraphFormatError, NumericError
from graphlss.rouge import RougeScore, lcs_length, ngram_counts, rouge_l, rouge_n, score_summary

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "GraphFormatError",
    "NumericError",
    "RougeScore",
    "lcs_length",
    "ngram_counts",
    "rouge_l",
    "rouge_n",
    "score_summary",
    "__version__",
]
