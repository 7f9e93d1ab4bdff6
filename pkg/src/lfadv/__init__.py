"""lfadv: weak supervision with labeling functions and an adversarial LF discriminator.

Label a corpus with keyword/regex labeling functions, train a classifier on
the resolved weak labels, and use a reversed-gradient LF discriminator to
keep the learned representation from latching onto LF-specific signals.
"""

__version__ = "0.1.0"

from .corpus import Corpus, Instance, SynthSpec, load_corpus, save_corpus, split_corpus, synth_generate
from .errors import (
    CheckpointError,
    ConfigError,
    LfadvError,
    NumericError,
    ParseError,
    SchemaError,
)
from .estimator import LfAdversarialClassifier
from .features import TfidfFeaturizer, Vocabulary, fit_vectorizer, tokenize, vectorize
from .labeling import (
    LabelingFunction,
    MatchMatrix,
    WeakDataset,
    apply_lfs,
    compile_lf,
    coverage_stats,
    load_lf_file,
    resolve_weak_labels,
)
from .metrics import EvalReport, SignificanceResult, approx_randomization_test, metric_value, score
from .pipeline import annotate, carve_validation, training_arrays
from .search import SearchSpace, Trial, random_search, sample_config
from .training import (
    AdversarialModel,
    StepReport,
    TrainConfig,
    TrainResult,
    build_model,
    compute_objectives,
    d_step,
    discriminator_accuracy,
    load_checkpoint,
    main_step,
    predict,
    save_checkpoint,
    train,
)

__all__ = [
    "AdversarialModel",
    "CheckpointError",
    "ConfigError",
    "Corpus",
    "EvalReport",
    "Instance",
    "LabelingFunction",
    "LfAdversarialClassifier",
    "LfadvError",
    "MatchMatrix",
    "NumericError",
    "ParseError",
    "SchemaError",
    "SearchSpace",
    "SignificanceResult",
    "StepReport",
    "SynthSpec",
    "TfidfFeaturizer",
    "TrainConfig",
    "TrainResult",
    "Trial",
    "Vocabulary",
    "WeakDataset",
    "annotate",
    "apply_lfs",
    "approx_randomization_test",
    "build_model",
    "carve_validation",
    "compile_lf",
    "compute_objectives",
    "coverage_stats",
    "d_step",
    "discriminator_accuracy",
    "fit_vectorizer",
    "load_checkpoint",
    "load_corpus",
    "load_lf_file",
    "main_step",
    "metric_value",
    "predict",
    "random_search",
    "resolve_weak_labels",
    "sample_config",
    "save_checkpoint",
    "save_corpus",
    "score",
    "split_corpus",
    "synth_generate",
    "tokenize",
    "train",
    "training_arrays",
    "vectorize",
]
