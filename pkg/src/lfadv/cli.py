"""Command-line entry point: synth, apply-lfs, train, eval, search, significance.

Every run writes a manifest (resolved config, seeds, SHA-256 of inputs)
next to its artifacts so it can be replayed exactly.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import SynthSpec, load_corpus, save_corpus, synth_generate
from .errors import ConfigError, LfadvError
from .features import Vocabulary, fit_vectorizer, vectorize
from .labeling import NO_LABEL, coverage_stats, load_lf_file, save_lf_file
from .metrics import approx_randomization_test, metric_value, score
from .pipeline import annotate, carve_validation, training_arrays
from .search import SearchSpace, random_search
from .training import TrainConfig, build_model, load_checkpoint, predict, train

_CONFIG_FLAGS = {
    "lambda_": ("--lambda", float, "weight of the reversed discriminator loss (>= 0)"),
    "n_critic": ("--n-critic", int, "discriminator batches per main batch"),
    "batch_size": ("--batch-size", int, "minibatch size (>= 2)"),
    "epochs": ("--epochs", int, "passes over the training triples"),
    "lr_main": ("--lr-main", float, "learning rate for extractor+classifier"),
    "lr_d": ("--lr-d", float, "learning rate for the discriminator"),
    "optimizer_main": ("--optimizer-main", str, "adam | adamw"),
    "optimizer_d": ("--optimizer-d", str, "adam | adamw"),
    "weight_decay": ("--weight-decay", float, "decoupled decay for adamw"),
    "dropout": ("--dropout", float, "dropout probability"),
    "hidden_size": ("--hidden", int, "shared hidden width"),
    "f_layers": ("--f-layers", int, "extractor layer count"),
    "c_layers": ("--c-layers", int, "classifier layer count"),
    "d_layers": ("--d-layers", int, "discriminator layer count"),
    "eval_every": ("--eval-every", int, "main steps between validation evals (0 = never)"),
    "metric": ("--metric", str, "accuracy | f1_pos"),
    "checkpoint_policy": ("--checkpoint-policy", str, "best | final"),
    "tie_policy": ("--tie-policy", str, "majority_drop_ties | majority_random_tie"),
    "d_holdout_fraction": ("--d-holdout", float, "triple fraction held out for D accuracy"),
    "seed": ("--seed", int, "root seed of the run"),
}


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _manifest(out_dir: Path, command: str, config: dict, inputs: list[Path], outputs: list[str]) -> None:
    _write_json(
        {
            "command": command,
            "argv": sys.argv[1:],
            "config": config,
            "inputs": {str(p): _sha256(p) for p in inputs},
            "outputs": outputs,
            "created_unix": time.time(),
            "version": __version__,
        },
        out_dir / "manifest.json",
    )


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with TrainConfig fields")
    for _field, (flag, typ, help_text) in _CONFIG_FLAGS.items():
        p.add_argument(flag, dest=_field, type=typ, default=None, help=help_text)


def _resolve_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> TrainConfig:
    try:
        cfg = TrainConfig()
        if getattr(args, "config", None):
            cfg = TrainConfig.from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
        overrides = {
            name: getattr(args, name)
            for name in _CONFIG_FLAGS
            if getattr(args, name, None) is not None
        }
        cfg = replace(cfg, **overrides)
        cfg.validate()
        return cfg
    except (ConfigError, json.JSONDecodeError) as exc:
        parser.error(str(exc))


def _positive_class_id(name: str | None, label_names: list[str], parser) -> int:
    if name is None:
        return 1 if len(label_names) > 1 else 0
    if name not in label_names:
        parser.error(f"--positive-class {name!r} not in label names {label_names}")
    return label_names.index(name)


def _load_predictions(path: Path, label_names: list[str], n: int) -> np.ndarray:
    ids_to_label = {}
    with path.open("r", encoding="utf-8") as fh:
        for raw in fh:
            if raw.strip():
                rec = json.loads(raw)
                ids_to_label[int(rec["id"])] = label_names.index(rec["label"])
    if sorted(ids_to_label) != list(range(n)):
        raise ConfigError(f"{path}: predictions do not cover instance ids 0..{n - 1}")
    return np.array([ids_to_label[i] for i in range(n)], dtype=np.int64)


def _save_predictions(preds: np.ndarray, label_names: list[str], path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for i, p in enumerate(preds):
            fh.write(json.dumps({"id": i, "label": label_names[int(p)]}) + "\n")


# ---------------------------------------------------------------- commands


def cmd_synth(args, parser) -> int:
    spec = SynthSpec(
        n_train=args.n_train,
        n_test=args.n_test,
        n_classes=args.classes,
        n_lfs_per_class=args.lfs_per_class,
        lf_leak_prob=args.leak,
        background_signal_prob=args.background,
        noise_vocab_size=args.noise_vocab,
        seed=args.seed,
        strip_lf_tokens_in_test=args.strip_test,
    )
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    train_c, test_c, lf_specs = synth_generate(spec)
    save_corpus(train_c, out / "train.jsonl")
    save_corpus(test_c, out / "test.jsonl")
    save_lf_file(lf_specs, out / "lfs.jsonl")
    _manifest(out, "synth", {"synth": spec.__dict__}, [], ["train.jsonl", "test.jsonl", "lfs.jsonl"])
    print(f"wrote {len(train_c)} train / {len(test_c)} test instances and {len(lf_specs)} LFs to {out}")
    return 0


def cmd_apply_lfs(args, parser) -> int:
    corpus = load_corpus(args.data)
    lfs = load_lf_file(args.lfs, corpus.label_names)
    weak, matches = annotate(corpus, lfs, tie_policy=args.tie_policy, tie_seed=args.tie_seed)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    with (out / "matches.jsonl").open("w", encoding="utf-8") as fh:
        csr = matches.hits.tocsr()
        for i in range(matches.n_instances):
            fired = csr.indices[csr.indptr[i] : csr.indptr[i + 1]].tolist()
            fh.write(json.dumps({"id": i, "fired": fired}) + "\n")
    with (out / "weak_labels.jsonl").open("w", encoding="utf-8") as fh:
        for i, lab in enumerate(weak.weak_labels):
            rec = {"id": i, "label": None if lab == NO_LABEL else corpus.label_names[int(lab)]}
            fh.write(json.dumps(rec) + "\n")
    with (out / "triples.jsonl").open("w", encoding="utf-8") as fh:
        for inst, lab, lf_id in weak.triples:
            fh.write(json.dumps({"instance": int(inst), "label": corpus.label_names[int(lab)], "lf": int(lf_id)}) + "\n")
    stats = coverage_stats(weak, matches)
    _write_json(stats, out / "coverage.json")
    _manifest(
        out,
        "apply-lfs",
        {"tie_policy": args.tie_policy, "tie_seed": args.tie_seed},
        [args.data, args.lfs],
        ["matches.jsonl", "weak_labels.jsonl", "triples.jsonl", "coverage.json"],
    )
    print(f"coverage {stats['coverage']:.3f}, {stats['n_triples']} triples over {len(lfs)} LFs")
    return 0


def _prepare_training(args, parser, cfg: TrainConfig):
    """Shared by train and search: corpus -> features + triple arrays + validation."""
    corpus = load_corpus(args.train)
    lfs = load_lf_file(args.lfs, corpus.label_names)
    weak, matches = annotate(corpus, lfs, tie_policy=cfg.tie_policy, tie_seed=cfg.seed)

    vocab = fit_vectorizer(corpus.texts(), min_df=args.min_df)
    X_all, _ = vectorize(corpus.texts(), vocab)

    X_val = y_val = None
    exclude = None
    if args.val is not None:
        val_corpus = load_corpus(args.val, split_tag="validation")
        if val_corpus.label_names != corpus.label_names:
            raise ConfigError("validation label names differ from training label names")
        golds = val_corpus.gold_labels()
        if (golds == NO_LABEL).any():
            raise ConfigError("validation corpus must be fully labeled")
        X_val, _ = vectorize(val_corpus.texts(), vocab)
        y_val = golds
    elif args.val_fraction is not None:
        val_ids, y_val = carve_validation(weak, args.val_fraction, cfg.seed)
        X_val = X_all[val_ids]
        exclude = val_ids

    X_rows, y_rows, lf_rows = training_arrays(weak, X_all, exclude_instances=exclude)
    return corpus, lfs, vocab, weak, matches, X_rows, y_rows, lf_rows, X_val, y_val


def cmd_train(args, parser) -> int:
    cfg = _resolve_config(args, parser)
    corpus, lfs, vocab, weak, matches, X_rows, y_rows, lf_rows, X_val, y_val = _prepare_training(
        args, parser, cfg
    )
    cfg = replace(cfg, positive_class=_positive_class_id(args.positive_class, corpus.label_names, parser))

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    vocab.save(out / "vocabulary.json")

    n_lfs = None if args.no_adversary else len(lfs)
    model = build_model(len(vocab), corpus.n_classes, n_lfs, cfg)
    result = train(
        model,
        X_rows,
        y_rows,
        None if args.no_adversary else lf_rows,
        cfg,
        X_val=X_val,
        y_val=y_val,
        history_path=out / "history.jsonl",
        checkpoint_path=out / "checkpoint.npz",
        checkpoint_meta={"label_names": corpus.label_names, "vocabulary": "vocabulary.json"},
    )
    summary = {
        "n_instances": len(corpus),
        "n_triples": int(len(weak.triples)),
        "coverage": coverage_stats(weak, matches)["coverage"],
        "main_steps": result.n_main_steps,
        "best_metric": result.best_metric,
        "best_step": result.best_step,
        "d_holdout_accuracy": result.d_holdout_accuracy,
    }
    _write_json(summary, out / "train_summary.json")
    inputs = [args.train, args.lfs] + ([args.val] if args.val else [])
    _manifest(
        out,
        "train",
        {"train": cfg.to_dict(), "min_df": args.min_df, "no_adversary": args.no_adversary,
         "val_fraction": args.val_fraction},
        inputs,
        ["checkpoint.npz", "vocabulary.json", "history.jsonl", "train_summary.json"],
    )
    best = "n/a" if result.best_metric is None else f"{result.best_metric:.4f}"
    print(f"trained {result.n_main_steps} main steps; best val {cfg.metric} {best}; artifacts in {out}")
    return 0


def cmd_eval(args, parser) -> int:
    model, extra = load_checkpoint(args.checkpoint)
    label_names = extra.get("label_names")
    corpus = load_corpus(args.data, split_tag="test")
    if label_names is None:
        label_names = corpus.label_names
    if list(label_names) != list(corpus.label_names):
        raise ConfigError("checkpoint and dataset disagree on label names")
    golds = corpus.gold_labels()
    if (golds == NO_LABEL).any():
        raise ConfigError("eval corpus must be fully labeled")

    vocab = Vocabulary.load(args.vocab)
    if len(vocab) != model.input_dim:
        raise ConfigError(f"vocabulary size {len(vocab)} != model input dim {model.input_dim}")
    X, _ = vectorize(corpus.texts(), vocab)
    preds, _logp = predict(model, X)

    pos = _positive_class_id(args.positive_class, list(label_names), parser)
    report = score(preds, golds, positive_class=pos)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    _save_predictions(preds, list(label_names), out / "predictions.jsonl")
    _write_json(report.to_dict(), out / "eval_report.json")
    _manifest(out, "eval", {"positive_class": int(pos)}, [args.checkpoint, args.vocab, args.data],
              ["predictions.jsonl", "eval_report.json"])
    print(
        f"n={report.n} accuracy={report.accuracy:.4f} "
        f"P={report.precision:.4f} R={report.recall:.4f} F1={report.f1:.4f} "
        f"(positive class {label_names[pos]!r})"
    )
    return 0


def cmd_significance(args, parser) -> int:
    corpus = load_corpus(args.data, split_tag="test")
    golds = corpus.gold_labels()
    if (golds == NO_LABEL).any():
        raise ConfigError("significance corpus must be fully labeled")
    preds_a = _load_predictions(args.preds_a, corpus.label_names, len(corpus))
    preds_b = _load_predictions(args.preds_b, corpus.label_names, len(corpus))
    pos = _positive_class_id(args.positive_class, corpus.label_names, parser)
    result = approx_randomization_test(
        preds_a, preds_b, golds,
        metric=args.metric, n_permutations=args.rounds, seed=args.seed, positive_class=pos,
    )
    payload = result.to_dict()
    payload["significant_at_0.05"] = result.p_value < 0.05

    rows = [("A", args.preds_a, score(preds_a, golds, pos)), ("B", args.preds_b, score(preds_b, golds, pos))]
    print(f"{'system':<8} {'accuracy':>9} {'precision':>10} {'recall':>8} {'f1':>8}")
    for name, path, rep in rows:
        print(f"{name:<8} {rep.accuracy:>9.4f} {rep.precision:>10.4f} {rep.recall:>8.4f} {rep.f1:>8.4f}  {path}")
    star = "*" if payload["significant_at_0.05"] else ""
    print(
        f"observed {args.metric} diff (A-B) {result.observed_diff:+.4f}, "
        f"p = {result.p_value:.4f}{star} (R = {result.n_permutations}, two-sided)"
    )
    if args.out is not None:
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        _write_json(payload, out / "significance.json")
        _manifest(
            out,
            "significance",
            {"metric": args.metric, "rounds": args.rounds, "seed": args.seed,
             "positive_class": int(pos)},
            [args.preds_a, args.preds_b, args.data],
            ["significance.json"],
        )
    return 0


def cmd_search(args, parser) -> int:
    cfg = _resolve_config(args, parser)
    if args.val is None and args.val_fraction is None:
        parser.error("search requires --val or --val-fraction")
    corpus, lfs, vocab, weak, matches, X_rows, y_rows, lf_rows, X_val, y_val = _prepare_training(
        args, parser, cfg
    )
    cfg = replace(cfg, positive_class=_positive_class_id(args.positive_class, corpus.label_names, parser))
    space = SearchSpace()
    if args.space is not None:
        space = SearchSpace(**{
            k: tuple(v) for k, v in json.loads(args.space.read_text(encoding="utf-8")).items()
        })

    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    def train_fn(trial_cfg: TrainConfig) -> float:
        model = build_model(len(vocab), corpus.n_classes, len(lfs), trial_cfg)
        result = train(model, X_rows, y_rows, lf_rows, trial_cfg, X_val=X_val, y_val=y_val)
        if result.best_metric is not None:
            return result.best_metric
        preds, _ = predict(model, X_val)
        return metric_value(trial_cfg.metric, preds, y_val, trial_cfg.positive_class)

    trials = random_search(space, args.budget, train_fn, cfg.seed, base=cfg, log_path=out / "trials.jsonl")
    best = trials[0]
    if best.metric is None:
        raise LfadvError(f"all {len(trials)} trials failed; first error: {best.error}")
    _write_json(best.config.to_dict(), out / "best_config.json")
    _manifest(
        out,
        "search",
        {"budget": args.budget, "base": cfg.to_dict()},
        [args.train, args.lfs] + ([args.val] if args.val else []),
        ["trials.jsonl", "best_config.json"],
    )
    print(f"best trial #{best.index}: metric {best.metric:.4f}, lambda {best.config.lambda_:.2f}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfadv",
        description="Weak supervision with labeling functions and an adversarial LF discriminator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic LF-leak corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--lfs-per-class", type=int, default=3)
    p.add_argument("--leak", type=float, default=0.9)
    p.add_argument("--background", type=float, default=0.6)
    p.add_argument("--noise-vocab", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strip-test", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("apply-lfs", help="apply LFs and resolve weak labels")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--lfs", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--tie-policy", default="majority_drop_ties",
                   choices=["majority_drop_ties", "majority_random_tie"])
    p.add_argument("--tie-seed", type=int, default=0)
    p.set_defaults(fn=cmd_apply_lfs)

    p = sub.add_parser("train", help="train the adversarial classifier")
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--lfs", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--val", type=Path, help="gold-labeled validation corpus")
    p.add_argument("--val-fraction", type=float,
                   help="carve this fraction of weakly labeled instances for validation")
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--positive-class", help="label name treated as positive for f1_pos")
    p.add_argument("--no-adversary", action="store_true",
                   help="feature baseline: train without the discriminator")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a labeled corpus")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--vocab", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--positive-class")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("significance", help="paired approximate randomization test")
    p.add_argument("--preds-a", type=Path, required=True)
    p.add_argument("--preds-b", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--metric", default="accuracy", choices=["accuracy", "f1_pos"])
    p.add_argument("--rounds", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--positive-class")
    p.add_argument("--out", type=Path, help="directory for significance.json + manifest")
    p.set_defaults(fn=cmd_significance)

    p = sub.add_parser("search", help="seeded random hyperparameter search")
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--lfs", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--val", type=Path)
    p.add_argument("--val-fraction", type=float)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--positive-class")
    p.add_argument("--space", type=Path, help="JSON overrides for the search space")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_search)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args, parser)
    except LfadvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
