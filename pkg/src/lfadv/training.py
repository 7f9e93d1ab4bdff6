"""Adversarial weak-supervision training.

Three modules interact: a shared feature extractor F, a task classifier C
and an LF discriminator D that predicts which labeling function annotated a
sample. Per batch the losses are

    j_c  = NLL(C(F(x)), y)        j_d = NLL(D(F(x)), lf)
    j_fs = j_c - lambda * j_d

F and C descend j_fs together (the reversed, lambda-scaled discriminator
gradient flows through F), while D is trained by its own optimizer on j_d
with F and C frozen. ``n_critic`` D-only batches precede every main batch.
Freezing is strict: the frozen networks run with frozen statistics and none
of their parameters or buffers change during the other player's step.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CheckpointError, ConfigError
from .metrics import metric_value
from .nn import EVAL, Mode, Network, make_optimizer, nll_loss

__all__ = [
    "TrainConfig",
    "AdversarialModel",
    "StepReport",
    "TrainResult",
    "build_model",
    "compute_objectives",
    "forward_objectives",
    "backward_combined",
    "backward_classifier_path",
    "backward_discriminator_path",
    "ObjectiveState",
    "d_step",
    "main_step",
    "train",
    "predict",
    "discriminator_accuracy",
    "save_checkpoint",
    "load_checkpoint",
    "save_history",
]

logger = logging.getLogger(__name__)

# per-component seed stream tags
_EXTRACTOR, _CLASSIFIER, _DISCRIMINATOR = 1, 2, 3
_SHUFFLE, _HOLDOUT = 100, 101

CKPT_FORMAT = "lfadv-checkpoint"
CKPT_VERSION = 1

METRICS = ("accuracy", "f1_pos")


@dataclass
class TrainConfig:
    """Hyperparameters of one training run; ``lambda_`` scales the reversed loss."""

    lambda_: float = 2.0
    n_critic: int = 5
    batch_size: int = 32
    epochs: int = 10
    lr_main: float = 1e-4
    lr_d: float = 1e-4
    optimizer_main: str = "adam"
    optimizer_d: str = "adam"
    weight_decay: float = 0.0
    dropout: float = 0.4
    hidden_size: int = 700
    f_layers: int = 1
    c_layers: int = 1
    d_layers: int = 1
    eval_every: int = 1  # main steps between validation evals; 0 disables
    metric: str = "accuracy"
    positive_class: int = 1
    checkpoint_policy: str = "best"  # "best" | "final"
    tie_policy: str = "majority_drop_ties"
    d_holdout_fraction: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.lambda_ < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lambda_}")
        if self.n_critic < 0:
            raise ConfigError(f"n_critic must be >= 0, got {self.n_critic}")
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.lr_main <= 0 or self.lr_d <= 0:
            raise ConfigError("learning rates must be > 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.hidden_size <= 0:
            raise ConfigError("hidden_size must be > 0")
        if min(self.f_layers, self.c_layers, self.d_layers) < 1:
            raise ConfigError("layer counts must be >= 1")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.checkpoint_policy not in ("best", "final"):
            raise ConfigError(f"unknown checkpoint_policy {self.checkpoint_policy!r}")
        if not 0.0 <= self.d_holdout_fraction < 1.0:
            raise ConfigError("d_holdout_fraction must be in [0, 1)")
        if self.optimizer_main not in ("adam", "adamw") or self.optimizer_d not in ("adam", "adamw"):
            raise ConfigError("optimizer kinds must be 'adam' or 'adamw'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "lambda" in d:
            d["lambda_"] = d.pop("lambda")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass
class AdversarialModel:
    extractor: Network
    classifier: Network
    discriminator: Optional[Network]
    input_dim: int
    n_classes: int
    n_lfs: Optional[int]

    def networks(self) -> list[Network]:
        nets = [self.extractor, self.classifier]
        if self.discriminator is not None:
            nets.append(self.discriminator)
        return nets


@dataclass
class StepReport:
    step: int
    kind: str  # "main" | "d" | "probe"
    j_c: Optional[float]
    j_d: Optional[float]
    j_fs: Optional[float]
    time: float = field(default_factory=time.time)


@dataclass
class TrainResult:
    history: list[dict]
    d_holdout_accuracy: list[float]
    best_metric: Optional[float]
    best_step: Optional[int]
    n_main_steps: int
    checkpoint_path: Optional[str] = None


def _extractor_specs(input_dim: int, cfg: TrainConfig) -> list[dict]:
    specs: list[dict] = []
    width = input_dim
    for _ in range(cfg.f_layers):
        specs.append({"kind": "dense", "in_dim": width, "out_dim": cfg.hidden_size})
        specs.append({"kind": "relu"})
        specs.append({"kind": "dropout", "p": cfg.dropout})
        width = cfg.hidden_size
    return specs


def _head_specs(hidden: int, n_out: int, n_layers: int, p: float) -> list[dict]:
    specs: list[dict] = []
    for _ in range(n_layers - 1):
        specs.append({"kind": "dropout", "p": p})
        specs.append({"kind": "dense", "in_dim": hidden, "out_dim": hidden})
        specs.append({"kind": "batchnorm", "dim": hidden})
        specs.append({"kind": "relu"})
    specs.append({"kind": "dense", "in_dim": hidden, "out_dim": n_out})
    specs.append({"kind": "log_softmax"})
    return specs


def build_model(
    input_dim: int,
    n_classes: int,
    n_lfs: Optional[int],
    cfg: TrainConfig,
    seed: Optional[int] = None,
) -> AdversarialModel:
    """Instantiate F, C and (when ``n_lfs`` is given) D, deterministically.

    Each component draws its weights and dropout masks from its own seed
    stream, so a model built without a discriminator has bit-identical F and
    C to one built with it.
    """
    if input_dim <= 0 or n_classes < 2:
        raise ConfigError("input_dim must be positive and n_classes >= 2")
    seed = cfg.seed if seed is None else seed
    extractor = Network.build(_extractor_specs(input_dim, cfg), (seed, _EXTRACTOR))
    classifier = Network.build(
        _head_specs(cfg.hidden_size, n_classes, cfg.c_layers, cfg.dropout), (seed, _CLASSIFIER)
    )
    discriminator = None
    if n_lfs is not None:
        if n_lfs < 1:
            raise ConfigError("n_lfs must be >= 1 when a discriminator is requested")
        discriminator = Network.build(
            _head_specs(cfg.hidden_size, n_lfs, cfg.d_layers, cfg.dropout), (seed, _DISCRIMINATOR)
        )
    return AdversarialModel(
        extractor=extractor,
        classifier=classifier,
        discriminator=discriminator,
        input_dim=input_dim,
        n_classes=n_classes,
        n_lfs=n_lfs,
    )


def _dense(X) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X.todense(), dtype=np.float64)
    return np.asarray(X, dtype=np.float64)


@dataclass
class ObjectiveState:
    """One shared forward pass with everything needed to backprop any path."""

    j_c: float
    j_d: Optional[float]
    j_fs: float
    caches_f: list
    caches_c: list
    caches_d: Optional[list]
    dlogp_c: np.ndarray
    dlogp_d: Optional[np.ndarray]


def forward_objectives(
    model: AdversarialModel,
    X: np.ndarray,
    y: np.ndarray,
    lf: Optional[np.ndarray],
    lambda_: float,
    mode_fc: Mode,
) -> ObjectiveState:
    h, caches_f = model.extractor.forward(X, mode_fc)
    logp_c, caches_c = model.classifier.forward(h, mode_fc)
    j_c, dlogp_c = nll_loss(logp_c, y)
    j_d = None
    caches_d = None
    dlogp_d = None
    if model.discriminator is not None and lf is not None:
        # D stays strictly frozen on the main path: eval statistics, no buffer drift
        logp_d, caches_d = model.discriminator.forward(h, EVAL)
        j_d, dlogp_d = nll_loss(logp_d, lf)
    j_fs = j_c if j_d is None else j_c - lambda_ * j_d
    return ObjectiveState(
        j_c=j_c, j_d=j_d, j_fs=j_fs,
        caches_f=caches_f, caches_c=caches_c, caches_d=caches_d,
        dlogp_c=dlogp_c, dlogp_d=dlogp_d,
    )


def backward_combined(model: AdversarialModel, st: ObjectiveState, lambda_: float) -> None:
    """Populate grads of j_fs = j_c - lambda*j_d for every parameter.

    With lambda == 0 the discriminator path is skipped entirely, so the
    computation is identical to a discriminator-free model.
    """
    dh = model.classifier.backward(st.caches_c, st.dlogp_c)
    if st.caches_d is not None and lambda_ != 0.0:
        dh = dh + model.discriminator.backward(st.caches_d, -lambda_ * st.dlogp_d)
    model.extractor.backward(st.caches_f, dh)


def backward_classifier_path(model: AdversarialModel, st: ObjectiveState) -> None:
    """Grads of j_c alone, through C and F."""
    dh = model.classifier.backward(st.caches_c, st.dlogp_c)
    model.extractor.backward(st.caches_f, dh)


def backward_discriminator_path(model: AdversarialModel, st: ObjectiveState) -> None:
    """Grads of j_d alone, through D and F."""
    dh = model.discriminator.backward(st.caches_d, st.dlogp_d)
    model.extractor.backward(st.caches_f, dh)


def compute_objectives(
    model: AdversarialModel,
    X,
    y: np.ndarray,
    lf: Optional[np.ndarray],
    lambda_: float,
    train: bool = False,
    step: int = 0,
) -> StepReport:
    """Losses on one batch without touching any parameter or buffer."""
    mode = Mode(train=train, update_stats=False) if train else EVAL
    st = forward_objectives(model, _dense(X), y, lf, lambda_, mode)
    return StepReport(step=step, kind="probe", j_c=st.j_c, j_d=st.j_d, j_fs=st.j_fs)


def d_step(model: AdversarialModel, opt_d, X, lf: np.ndarray, step: int = 0) -> StepReport:
    """One discriminator update; F and C are frozen (eval statistics, no writes)."""
    if model.discriminator is None:
        raise ConfigError("d_step requires a model with a discriminator")
    h, _ = model.extractor.forward(_dense(X), EVAL)
    logp_d, caches_d = model.discriminator.forward(h, Mode(train=True))
    j_d, dlogp_d = nll_loss(logp_d, lf)
    model.discriminator.zero_grads()
    model.discriminator.backward(caches_d, dlogp_d)
    opt_d.step(model.discriminator.params())
    return StepReport(step=step, kind="d", j_c=None, j_d=j_d, j_fs=None)


def main_step(
    model: AdversarialModel,
    opt_main,
    X,
    y: np.ndarray,
    lf: Optional[np.ndarray],
    lambda_: float,
    step: int = 0,
) -> StepReport:
    """One update of F and C on j_fs = j_c - lambda*j_d; D is frozen."""
    st = forward_objectives(model, _dense(X), y, lf, lambda_, Mode(train=True))
    model.extractor.zero_grads()
    model.classifier.zero_grads()
    if model.discriminator is not None:
        model.discriminator.zero_grads()
    backward_combined(model, st, lambda_)
    opt_main.step(model.extractor.params() + model.classifier.params())
    return StepReport(step=step, kind="main", j_c=st.j_c, j_d=st.j_d, j_fs=st.j_fs)


def predict(model: AdversarialModel, X, chunk: int = 1024) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode class ids and log-probabilities from C(F(x))."""
    n = X.shape[0]
    if X.shape[1] != model.input_dim:
        raise ConfigError(f"feature dim {X.shape[1]} != model input dim {model.input_dim}")
    out = np.empty((n, model.n_classes), dtype=np.float64)
    for start in range(0, n, chunk):
        rows = _dense(X[start : start + chunk])
        h, _ = model.extractor.forward(rows, EVAL)
        logp, _ = model.classifier.forward(h, EVAL)
        out[start : start + len(rows)] = logp
    return out.argmax(axis=1), out


def discriminator_accuracy(model: AdversarialModel, X, lf: np.ndarray, chunk: int = 1024) -> float:
    """Eval-mode LF-prediction accuracy of D on (x, lf) pairs."""
    if model.discriminator is None:
        raise ConfigError("model has no discriminator")
    n = X.shape[0]
    correct = 0
    for start in range(0, n, chunk):
        rows = _dense(X[start : start + chunk])
        h, _ = model.extractor.forward(rows, EVAL)
        logp, _ = model.discriminator.forward(h, EVAL)
        correct += int((logp.argmax(axis=1) == lf[start : start + len(rows)]).sum())
    return correct / n


def _batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    out = [order[s : s + batch_size] for s in range(0, len(order), batch_size)]
    return [b for b in out if len(b) >= 2]


def _eval_metric(model, X_val, y_val, cfg: TrainConfig) -> float:
    preds, _ = predict(model, X_val)
    return metric_value(cfg.metric, preds, y_val, cfg.positive_class)


def train(
    model: AdversarialModel,
    X,
    y: np.ndarray,
    lf: Optional[np.ndarray],
    cfg: TrainConfig,
    X_val=None,
    y_val: Optional[np.ndarray] = None,
    history_path: Optional[str | Path] = None,
    checkpoint_path: Optional[str | Path] = None,
    checkpoint_meta: Optional[dict] = None,
) -> TrainResult:
    """Alternating adversarial loop over training rows (one row per triple).

    Per main batch, ``n_critic`` discriminator batches are consumed first
    from the same shuffled epoch stream. Validation runs every
    ``eval_every`` main steps; the best model (by the configured metric) is
    restored at the end under the "best" checkpoint policy. A held-out
    fraction of rows is excluded from training and used to measure D's
    LF-prediction accuracy once per epoch.
    """
    cfg.validate()
    y = np.asarray(y, dtype=np.int64)
    n_rows = X.shape[0]
    if n_rows != len(y):
        raise ConfigError("X and y disagree on row count")
    if lf is not None:
        lf = np.asarray(lf, dtype=np.int64)
        if len(lf) != n_rows:
            raise ConfigError("X and lf disagree on row count")
    if model.discriminator is not None and lf is None:
        raise ConfigError("model has a discriminator but no lf targets were given")
    if X_val is not None and y_val is None:
        raise ConfigError("X_val given without y_val")
    if X_val is None and cfg.eval_every > 0 and cfg.checkpoint_policy == "best":
        logger.warning("no validation data: falling back to the final-model policy")

    opt_main = make_optimizer(cfg.optimizer_main, cfg.lr_main, cfg.weight_decay)
    opt_d = make_optimizer(cfg.optimizer_d, cfg.lr_d, cfg.weight_decay)

    # held-out rows for measuring D accuracy; carved independently of D's
    # presence so baseline and adversarial runs see identical batch streams
    row_ids = np.arange(n_rows)
    n_hold = int(round(cfg.d_holdout_fraction * n_rows))
    if n_hold > 0:
        hold_perm = np.random.default_rng(np.random.SeedSequence((cfg.seed, _HOLDOUT))).permutation(n_rows)
        hold_ids, row_ids = hold_perm[:n_hold], hold_perm[n_hold:]
    else:
        hold_ids = np.array([], dtype=np.int64)

    shuffle_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, _SHUFFLE)))
    history: list[dict] = []
    d_holdout_acc: list[float] = []
    best_state: Optional[list[dict]] = None
    best_metric: Optional[float] = None
    best_step: Optional[int] = None
    n_main = 0

    for _epoch in range(cfg.epochs):
        order = row_ids[shuffle_rng.permutation(len(row_ids))]
        batches = _batches(order, cfg.batch_size)
        i = 0
        while i < len(batches):
            if model.discriminator is not None:
                for _ in range(cfg.n_critic):
                    if i >= len(batches):
                        break
                    b = batches[i]
                    i += 1
                    rep = d_step(model, opt_d, X[b], lf[b], step=n_main)
                    history.append({"step": n_main, "kind": "d", "j_d": rep.j_d})
            if i >= len(batches):
                break
            b = batches[i]
            i += 1
            rep = main_step(
                model, opt_main, X[b], y[b], None if lf is None else lf[b], cfg.lambda_, step=n_main
            )
            n_main += 1
            row = {"step": n_main, "kind": "main", "j_c": rep.j_c, "j_d": rep.j_d, "j_fs": rep.j_fs}
            if X_val is not None and cfg.eval_every > 0 and n_main % cfg.eval_every == 0:
                m = _eval_metric(model, X_val, y_val, cfg)
                row["val_metric"] = m
                if best_metric is None or m > best_metric:
                    best_metric, best_step = m, n_main
                    best_state = [net.copy_state() for net in model.networks()]
            history.append(row)
        if model.discriminator is not None and len(hold_ids) > 0:
            d_holdout_acc.append(discriminator_accuracy(model, X[hold_ids], lf[hold_ids]))

    if cfg.checkpoint_policy == "best" and best_state is not None:
        for net, state in zip(model.networks(), best_state):
            net.load_state(state)

    result = TrainResult(
        history=history,
        d_holdout_accuracy=d_holdout_acc,
        best_metric=best_metric,
        best_step=best_step,
        n_main_steps=n_main,
    )
    if history_path is not None:
        save_history(history, history_path)
    if checkpoint_path is not None:
        save_checkpoint(model, checkpoint_path, extra_meta=checkpoint_meta)
        result.checkpoint_path = str(checkpoint_path)
    return result


def save_history(history: Sequence[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in history:
            fh.write(json.dumps(row) + "\n")


def save_checkpoint(model: AdversarialModel, path: str | Path, extra_meta: Optional[dict] = None) -> None:
    """Write the full model state: specs, parameters, optimizer moments,
    batchnorm buffers and dropout rng states. Round-trips bitwise."""
    names = ["extractor", "classifier"] + (["discriminator"] if model.discriminator is not None else [])
    nets = dict(zip(names, model.networks()))
    meta = {
        "format": CKPT_FORMAT,
        "version": CKPT_VERSION,
        "input_dim": model.input_dim,
        "n_classes": model.n_classes,
        "n_lfs": model.n_lfs,
        "specs": {name: net.spec_list() for name, net in nets.items()},
        "rng": {name: net.rng_state_json() for name, net in nets.items()},
        "extra": extra_meta or {},
    }
    arrays = {
        f"{name}/{key}": arr for name, net in nets.items() for key, arr in net.named_arrays().items()
    }
    with Path(path).open("wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path: str | Path) -> tuple[AdversarialModel, dict]:
    """Rebuild a model from a checkpoint; returns (model, extra_meta)."""
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta.get("format") != CKPT_FORMAT:
                raise CheckpointError(f"{path}: not a checkpoint file")
            if meta.get("version") != CKPT_VERSION:
                raise CheckpointError(f"{path}: unsupported checkpoint version {meta.get('version')}")
            arrays = {k: z[k] for k in z.files if k != "meta"}
    except CheckpointError:
        raise
    except Exception as exc:
        raise CheckpointError(f"{path}: cannot read checkpoint: {exc}") from exc

    nets = {}
    for name, specs in meta["specs"].items():
        net = Network.build(specs, 0)
        prefix = f"{name}/"
        net.load_named_arrays({k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)})
        net.set_rng_state_json(meta["rng"][name])
        nets[name] = net
    model = AdversarialModel(
        extractor=nets["extractor"],
        classifier=nets["classifier"],
        discriminator=nets.get("discriminator"),
        input_dim=int(meta["input_dim"]),
        n_classes=int(meta["n_classes"]),
        n_lfs=None if meta["n_lfs"] is None else int(meta["n_lfs"]),
    )
    return model, meta.get("extra", {})
