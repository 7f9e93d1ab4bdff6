"""Tokenization and TF-IDF features.

The weighting is the classic smoothed scheme: ``idf(t) = ln((1+N)/(1+df(t))) + 1``
with raw term counts and L2-normalized rows. Out-of-vocabulary tokens are
ignored; all-OOV documents produce zero rows (kept, so row indices stay
aligned with instance ids).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ConfigError, ParseError, SchemaError

__all__ = ["tokenize", "Vocabulary", "fit_vectorizer", "vectorize", "TfidfFeaturizer"]

# maximal runs of (unicode) alphanumeric characters, underscore excluded
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

VOCAB_FORMAT = "lfadv-vocabulary"
VOCAB_VERSION = 1


def tokenize(text: str) -> list[str]:
    """Lowercase and split into alphanumeric runs; tokens of length 1 are dropped."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


@dataclass
class Vocabulary:
    index: dict[str, int]  # term -> dense column id
    idf: np.ndarray  # float64, aligned with index values
    fitted_on: int  # number of documents seen at fit time
    min_df: int = 1
    max_df: float = 1.0

    def __len__(self) -> int:
        return len(self.index)

    def save(self, path: str | Path) -> None:
        terms = sorted(self.index, key=self.index.get)
        payload = {
            "format": VOCAB_FORMAT,
            "version": VOCAB_VERSION,
            "fitted_on": self.fitted_on,
            "min_df": self.min_df,
            "max_df": self.max_df,
            "terms": [[t, float(self.idf[self.index[t]])] for t in terms],
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: not a vocabulary file: {exc}") from exc
        if payload.get("format") != VOCAB_FORMAT:
            raise SchemaError(f"{path}: unknown vocabulary format")
        if payload.get("version") != VOCAB_VERSION:
            raise SchemaError(f"{path}: unsupported vocabulary version {payload.get('version')}")
        terms = payload["terms"]
        return cls(
            index={t: i for i, (t, _) in enumerate(terms)},
            idf=np.array([w for _, w in terms], dtype=np.float64),
            fitted_on=int(payload["fitted_on"]),
            min_df=int(payload["min_df"]),
            max_df=float(payload["max_df"]),
        )


def fit_vectorizer(
    texts: Iterable[str],
    min_df: int = 1,
    max_df: float = 1.0,
    tokenizer: Callable[[str], list[str]] = tokenize,
) -> Vocabulary:
    """Build a vocabulary from document frequencies.

    Terms with df < min_df or df > max_df * N are dropped; the surviving
    terms are indexed in lexicographic order.
    """
    df: dict[str, int] = {}
    n_docs = 0
    for text in texts:
        n_docs += 1
        for term in set(tokenizer(text)):
            df[term] = df.get(term, 0) + 1
    if n_docs == 0:
        raise ConfigError("cannot fit a vectorizer on an empty corpus")

    df_cap = max_df * n_docs
    terms = sorted(t for t, d in df.items() if d >= min_df and d <= df_cap)
    if not terms:
        raise ConfigError(f"empty vocabulary after min_df={min_df}/max_df={max_df} filtering")

    idf = np.array(
        [math.log((1.0 + n_docs) / (1.0 + df[t])) + 1.0 for t in terms], dtype=np.float64
    )
    return Vocabulary(
        index={t: i for i, t in enumerate(terms)},
        idf=idf,
        fitted_on=n_docs,
        min_df=min_df,
        max_df=max_df,
    )


def vectorize(
    texts: Sequence[str],
    vocab: Vocabulary,
    tokenizer: Callable[[str], list[str]] = tokenize,
) -> tuple[sp.csr_matrix, list[int]]:
    """TF-IDF rows for ``texts``; returns (matrix, ids of all-OOV zero rows)."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    zero_rows: list[int] = []
    for row, text in enumerate(texts):
        counts: dict[int, int] = {}
        for term in tokenizer(text):
            col = vocab.index.get(term)
            if col is not None:
                counts[col] = counts.get(col, 0) + 1
        if not counts:
            zero_rows.append(row)
        cols = sorted(counts)
        vals = np.array([counts[c] * vocab.idf[c] for c in cols], dtype=np.float64)
        norm = np.linalg.norm(vals)
        if norm > 0:
            vals /= norm
        indices.extend(cols)
        data.extend(vals.tolist())
        indptr.append(len(indices))

    X = sp.csr_matrix(
        (np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64), np.array(indptr)),
        shape=(len(texts), len(vocab)),
    )
    return X, zero_rows


class TfidfFeaturizer(BaseEstimator, TransformerMixin):
    """Sklearn-style transformer over raw documents.

    fit() learns the vocabulary and idf weights, transform() produces
    L2-normalized sparse TF-IDF rows.
    """

    def __init__(self, min_df: int = 1, max_df: float = 1.0):
        self.min_df = min_df
        self.max_df = max_df

    def fit(self, X: Iterable[str], y=None) -> "TfidfFeaturizer":
        self.vocabulary_ = fit_vectorizer(X, min_df=self.min_df, max_df=self.max_df)
        return self

    def transform(self, X: Sequence[str]) -> sp.csr_matrix:
        if not hasattr(self, "vocabulary_"):
            raise ConfigError("TfidfFeaturizer.transform called before fit")
        matrix, _ = vectorize(X, self.vocabulary_)
        return matrix
