"""Corpus loading, saving, splitting and synthetic corpus generation.

File format: UTF-8 JSON lines. The first line is a header record
``{"label_names": [...]}``; every following line is ``{"text": ..., "label"?: ...}``
where ``label`` is a label name from the header. Labels are kept as integer
ids in memory; the header order defines the id mapping.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, ParseError, SchemaError

__all__ = [
    "Instance",
    "Corpus",
    "SynthSpec",
    "load_corpus",
    "save_corpus",
    "split_corpus",
    "synth_generate",
]


@dataclass(frozen=True)
class Instance:
    """One text instance. ``gold_label`` is None for unlabeled (train) data."""

    id: int
    text: str
    gold_label: Optional[int] = None


@dataclass
class Corpus:
    instances: list[Instance]
    label_names: list[str]
    split_tag: str = "train"

    def __post_init__(self) -> None:
        if len(self.label_names) < 2:
            raise SchemaError("label_names must list at least 2 classes")
        for pos, inst in enumerate(self.instances):
            if inst.id != pos:
                raise SchemaError(f"instance ids must be dense 0..N-1, got {inst.id} at {pos}")
            if not inst.text.strip():
                raise SchemaError(f"instance {inst.id}: empty text")
            if inst.gold_label is not None and not (0 <= inst.gold_label < len(self.label_names)):
                raise SchemaError(f"instance {inst.id}: gold_label {inst.gold_label} out of range")

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def texts(self) -> list[str]:
        return [inst.text for inst in self.instances]

    def gold_labels(self) -> np.ndarray:
        """Gold labels as an int array; -1 marks unlabeled instances."""
        return np.array(
            [-1 if inst.gold_label is None else inst.gold_label for inst in self.instances],
            dtype=np.int64,
        )


def load_corpus(path: str | Path, split_tag: str = "train") -> Corpus:
    """Read a JSONL corpus file (header line + one record per instance)."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty corpus")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:1: bad header: {exc}") from exc
    if not isinstance(header, dict) or "label_names" not in header:
        raise SchemaError(f"{path}:1: first line must be a {{'label_names': [...]}} header")
    label_names = list(header["label_names"])
    label_ids = {name: i for i, name in enumerate(label_names)}

    if len(lines) == 1:
        raise ParseError(f"{path}: empty corpus")

    instances = []
    for lineno, raw in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: malformed record: {exc}") from exc
        if not isinstance(rec, dict) or "text" not in rec:
            raise SchemaError(f"{path}:{lineno}: record must have a 'text' field")
        gold = None
        if rec.get("label") is not None:
            name = rec["label"]
            if name not in label_ids:
                raise SchemaError(f"{path}:{lineno}: unknown label name {name!r}")
            gold = label_ids[name]
        instances.append(Instance(id=len(instances), text=str(rec["text"]), gold_label=gold))

    return Corpus(instances=instances, label_names=label_names, split_tag=split_tag)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"label_names": corpus.label_names}) + "\n")
        for inst in corpus.instances:
            rec: dict = {"text": inst.text}
            if inst.gold_label is not None:
                rec["label"] = corpus.label_names[inst.gold_label]
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def split_corpus(
    corpus: Corpus,
    fraction: float,
    seed: int,
    tags: tuple[str, str] | None = None,
) -> tuple[Corpus, Corpus]:
    """Seed-deterministic shuffle split; ``fraction`` of the data goes to part one.

    Parts are disjoint and exhaustive; instance ids are re-densified per part.
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"split fraction must be in (0, 1), got {fraction}")
    n = len(corpus)
    n_first = int(round(n * fraction))
    if n_first == 0 or n_first == n:
        raise ConfigError(f"empty split: fraction {fraction} of {n} instances")

    order = np.random.default_rng(seed).permutation(n)
    tag_a, tag_b = tags if tags is not None else (corpus.split_tag, corpus.split_tag)

    def take(ids: np.ndarray, tag: str) -> Corpus:
        insts = [
            replace(corpus.instances[int(i)], id=new_id) for new_id, i in enumerate(ids)
        ]
        return Corpus(instances=insts, label_names=list(corpus.label_names), split_tag=tag)

    return take(order[:n_first], tag_a), take(order[n_first:], tag_b)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for the synthetic "LF-leak" corpus generator.

    Training texts of class ``c`` contain each of the class's LF keywords
    independently with probability ``lf_leak_prob`` and each class-correlated
    background token with probability ``background_signal_prob``. Background
    tokens are correlated, not pure: they also show up in other classes'
    texts at ``background_signal_prob * background_cross_ratio``, so they are
    noisier than the prototypical LF keywords. Test texts drop the LF
    keywords when ``strip_lf_tokens_in_test`` is set, so test accuracy
    measures how much non-LF signal a model picked up.
    """

    n_train: int = 2000
    n_test: int = 1000
    n_classes: int = 2
    n_lfs_per_class: int = 3
    lf_leak_prob: float = 0.9
    background_signal_prob: float = 0.6
    noise_vocab_size: int = 100
    seed: int = 0
    strip_lf_tokens_in_test: bool = True
    # class-correlated background token types per class; each appears
    # independently with background_signal_prob
    n_background_per_class: int = 3
    # wrong-class appearance rate as a fraction of background_signal_prob
    background_cross_ratio: float = 1 / 3

    def __post_init__(self) -> None:
        for name in ("lf_leak_prob", "background_signal_prob", "background_cross_ratio"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")
        for name in ("n_train", "n_test", "n_classes", "n_lfs_per_class", "noise_vocab_size"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")


def _synth_texts(
    spec: SynthSpec,
    classes: np.ndarray,
    rng: np.random.Generator,
    with_lf_tokens: bool,
) -> list[str]:
    texts = []
    for c in classes:
        tokens = []
        if with_lf_tokens:
            for k in range(spec.n_lfs_per_class):
                if rng.random() < spec.lf_leak_prob:
                    tokens.append(f"kw{c}x{k}")
        for cc in range(spec.n_classes):
            rate = spec.background_signal_prob
            if cc != c:
                rate *= spec.background_cross_ratio
            for b in range(spec.n_background_per_class):
                if rng.random() < rate:
                    tokens.append(f"bg{cc}x{b}")
        n_noise = int(rng.integers(3, 9))
        for t in rng.integers(0, spec.noise_vocab_size, size=n_noise):
            tokens.append(f"noise{t}")
        rng.shuffle(tokens)
        texts.append(" ".join(tokens))
    return texts


def synth_generate(spec: SynthSpec) -> tuple[Corpus, Corpus, list[dict]]:
    """Generate (train, test, lf_specs) deterministically from ``spec.seed``.

    Train instances carry their generating class as gold_label for
    diagnostics; the training pipeline never reads it. LF specs are records
    in the LF-file schema: one keyword LF per (class, keyword).
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    label_names = [f"c{c}" for c in range(spec.n_classes)]

    def balanced_classes(n: int) -> np.ndarray:
        classes = np.arange(n) % spec.n_classes
        rng.shuffle(classes)
        return classes

    train_classes = balanced_classes(spec.n_train)
    test_classes = balanced_classes(spec.n_test)
    train_texts = _synth_texts(spec, train_classes, rng, with_lf_tokens=True)
    test_texts = _synth_texts(
        spec, test_classes, rng, with_lf_tokens=not spec.strip_lf_tokens_in_test
    )

    train = Corpus(
        instances=[
            Instance(id=i, text=t, gold_label=int(c))
            for i, (t, c) in enumerate(zip(train_texts, train_classes))
        ],
        label_names=label_names,
        split_tag="train",
    )
    test = Corpus(
        instances=[
            Instance(id=i, text=t, gold_label=int(c))
            for i, (t, c) in enumerate(zip(test_texts, test_classes))
        ],
        label_names=label_names,
        split_tag="test",
    )
    lf_specs = [
        {
            "name": f"kw{c}x{k}",
            "kind": "keyword",
            "pattern": f"kw{c}x{k}",
            "label": label_names[c],
        }
        for c in range(spec.n_classes)
        for k in range(spec.n_lfs_per_class)
    ]
    return train, test, lf_specs
