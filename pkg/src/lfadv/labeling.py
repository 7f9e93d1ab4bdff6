"""Labeling functions: compilation, matching, weak-label resolution, triples.

A labeling function (LF) is a keyword or regex rule voting for one class.
Keyword LFs match case-insensitively on token boundaries (tokens as produced
by :func:`lfadv.features.tokenize`); regex LFs search the raw text with the
pattern compiled verbatim, case-sensitive.

Resolution is per-instance majority vote over the firing LFs. Each labeled
instance expands into one (instance, label, lf) triple per firing LF that
agrees with the resolved label; dissenting LFs contribute no triple.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus
from .errors import ConfigError, ParseError, SchemaError
from .features import tokenize

__all__ = [
    "LabelingFunction",
    "MatchMatrix",
    "WeakDataset",
    "compile_lf",
    "load_lf_file",
    "save_lf_file",
    "apply_lfs",
    "resolve_weak_labels",
    "coverage_stats",
]

NO_LABEL = -1


@dataclass(frozen=True)
class LabelingFunction:
    lf_id: int
    name: str
    kind: str  # "keyword" | "regex"
    pattern: str
    output_label: int

    def __post_init__(self) -> None:
        if self.kind not in ("keyword", "regex"):
            raise SchemaError(f"LF {self.name!r}: unknown kind {self.kind!r}")
        if not self.pattern:
            raise SchemaError(f"LF {self.name!r}: empty pattern")


def compile_lf(spec: dict, label_names: Sequence[str], lf_id: int = 0) -> LabelingFunction:
    """Build a LabelingFunction from a spec record {name, kind, pattern, label}."""
    for key in ("kind", "pattern", "label"):
        if key not in spec:
            raise SchemaError(f"LF spec missing field {key!r}: {spec}")
    label = spec["label"]
    if label not in label_names:
        raise SchemaError(f"LF {spec.get('name', '?')!r}: unknown label {label!r}")
    kind = spec["kind"]
    pattern = str(spec["pattern"])
    if kind == "regex":
        try:
            re.compile(pattern)
        except re.error as exc:
            raise SchemaError(f"LF {spec.get('name', '?')!r}: bad regex {pattern[:40]!r}: {exc}") from exc
    elif kind == "keyword":
        if not tokenize(pattern):
            raise SchemaError(f"LF {spec.get('name', '?')!r}: keyword {pattern!r} yields no tokens")
    return LabelingFunction(
        lf_id=lf_id,
        name=str(spec.get("name", f"lf_{lf_id}")),
        kind=kind,
        pattern=pattern,
        output_label=list(label_names).index(label),
    )


def load_lf_file(path: str | Path, label_names: Sequence[str]) -> list[LabelingFunction]:
    """Read a JSONL LF spec file; lf_ids follow file order."""
    path = Path(path)
    lfs = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: malformed LF record: {exc}") from exc
            lfs.append(compile_lf(rec, label_names, lf_id=len(lfs)))
    if not lfs:
        raise ParseError(f"{path}: empty LF file")
    return lfs


def save_lf_file(specs: Sequence[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in specs:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


@dataclass
class MatchMatrix:
    """Sparse boolean LF-hit matrix; hits[i, j] = LF j fires on instance i."""

    hits: sp.csr_matrix

    @property
    def n_instances(self) -> int:
        return self.hits.shape[0]

    @property
    def n_lfs(self) -> int:
        return self.hits.shape[1]

    def fire_counts(self) -> np.ndarray:
        return np.asarray(self.hits.sum(axis=0)).ravel().astype(np.int64)


def _keyword_tokens(lf: LabelingFunction) -> list[str]:
    return tokenize(lf.pattern)


def apply_lfs(corpus: Corpus, lfs: Sequence[LabelingFunction]) -> MatchMatrix:
    """Evaluate every LF on every instance.

    Keyword LFs run against a token posting index (first pattern token ->
    documents), so large LF sets stay cheap; regex LFs scan all texts.
    """
    if not lfs:
        raise ConfigError("apply_lfs needs at least one LF")
    texts = corpus.texts()
    doc_tokens = [tokenize(t) for t in texts]

    postings: dict[str, list[int]] = defaultdict(list)
    for i, toks in enumerate(doc_tokens):
        for tok in set(toks):
            postings[tok].append(i)

    rows: list[int] = []
    cols: list[int] = []
    for lf in lfs:
        if lf.kind == "keyword":
            toks = _keyword_tokens(lf)
            candidates = postings.get(toks[0], [])
            if len(toks) == 1:
                hits_i = candidates
            else:
                hits_i = [i for i in candidates if _contains_run(doc_tokens[i], toks)]
        else:
            rx = re.compile(lf.pattern)
            hits_i = [i for i, t in enumerate(texts) if rx.search(t)]
        rows.extend(hits_i)
        cols.extend([lf.lf_id] * len(hits_i))

    hits = sp.csr_matrix(
        (np.ones(len(rows), dtype=bool), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(len(texts), len(lfs)),
    )
    hits.sum_duplicates()
    hits.sort_indices()
    hits.data = hits.data.astype(bool)
    return MatchMatrix(hits=hits)


def _contains_run(tokens: list[str], run: list[str]) -> bool:
    k = len(run)
    for start in range(len(tokens) - k + 1):
        if tokens[start : start + k] == run:
            return True
    return False


@dataclass
class WeakDataset:
    """Resolved weak labels plus (instance, label, lf) training triples."""

    corpus: Corpus
    weak_labels: np.ndarray  # (N,) int64, NO_LABEL where unresolved
    triples: np.ndarray  # (T, 3) int64 columns: instance_id, label, lf_id

    @property
    def n_labeled(self) -> int:
        return int((self.weak_labels != NO_LABEL).sum())

    def labeled_ids(self) -> np.ndarray:
        return np.flatnonzero(self.weak_labels != NO_LABEL)


def resolve_weak_labels(
    matches: MatchMatrix,
    lfs: Sequence[LabelingFunction],
    corpus: Corpus,
    policy: str = "majority_drop_ties",
    tie_seed: int = 0,
) -> WeakDataset:
    """Majority vote over firing LFs; build agreeing-LF triples.

    policy "majority_drop_ties" leaves tied instances unlabeled;
    "majority_random_tie" picks uniformly among the tied top labels using
    ``tie_seed``.
    """
    if policy not in ("majority_drop_ties", "majority_random_tie"):
        raise ConfigError(f"unknown tie policy {policy!r}")
    if matches.n_lfs != len(lfs):
        raise ConfigError("match matrix and LF list disagree on LF count")
    n_classes = corpus.n_classes
    out_labels = np.array([lf.output_label for lf in lfs], dtype=np.int64)

    onehot = np.zeros((len(lfs), n_classes), dtype=np.int64)
    onehot[np.arange(len(lfs)), out_labels] = 1
    votes = np.asarray(matches.hits.astype(np.int64) @ onehot)  # (N, C)

    top = votes.max(axis=1)
    is_top = votes == top[:, None]
    n_top = is_top.sum(axis=1)

    labels = np.full(matches.n_instances, NO_LABEL, dtype=np.int64)
    decided = (top > 0) & (n_top == 1)
    labels[decided] = votes[decided].argmax(axis=1)

    tied = (top > 0) & (n_top > 1)
    if policy == "majority_random_tie" and tied.any():
        rng = np.random.default_rng(tie_seed)
        for i in np.flatnonzero(tied):
            labels[i] = rng.choice(np.flatnonzero(is_top[i]))

    coo = matches.hits.tocoo()
    inst, lf_col = coo.row.astype(np.int64), coo.col.astype(np.int64)
    agree = labels[inst] == out_labels[lf_col]
    agree &= labels[inst] != NO_LABEL
    triples = np.stack([inst[agree], labels[inst[agree]], lf_col[agree]], axis=1)
    order = np.lexsort((triples[:, 2], triples[:, 0]))
    return WeakDataset(corpus=corpus, weak_labels=labels, triples=triples[order])


def coverage_stats(weak: WeakDataset, matches: MatchMatrix) -> dict:
    """Coverage fraction, per-LF fire/triple counts and label distribution."""
    n = len(weak.corpus)
    n_lfs = matches.n_lfs
    labeled = weak.weak_labels != NO_LABEL
    triple_counts = np.bincount(weak.triples[:, 2], minlength=n_lfs) if len(weak.triples) else np.zeros(n_lfs, dtype=np.int64)
    label_dist = np.bincount(weak.weak_labels[labeled], minlength=weak.corpus.n_classes) if labeled.any() else np.zeros(weak.corpus.n_classes, dtype=np.int64)
    return {
        "n_instances": n,
        "coverage": float(labeled.sum() / n) if n else 0.0,
        "n_triples": int(len(weak.triples)),
        "lf_fire_counts": matches.fire_counts().astype(int).tolist(),
        "lf_triple_counts": triple_counts.astype(int).tolist(),
        "label_distribution": {
            weak.corpus.label_names[c]: int(label_dist[c]) for c in range(weak.corpus.n_classes)
        },
    }
