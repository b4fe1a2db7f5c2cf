"""Wine-spoilage detection from gas-sensor arrays.

Two pipelines over six-sensor conductance measurements: a conventional one
(fingerprint extraction, RFECV feature selection, one-vs-one kernel SVM)
and a rapid online one (rising windows of raw data fed to a deep MLP) that
classifies from the first seconds of a measurement.
"""

from .dataset import (
    Dataset,
    GeneratorConfig,
    Measurement,
    SensorTrace,
    default_generator_config,
    generate_synthetic,
    load_dataset,
    trim_to_interval,
    validate_measurement,
    write_dataset,
)
from .evaluate import (
    RunReport,
    grouped_kfold,
    loo_by_bottle,
    mann_whitney_u,
    pca_fit,
    pca_scores,
    run_experiment,
)
from .features import FingerprintExtractor, extract_fingerprint, fingerprint_matrix
from .mlp import MlpClassifier, build_architecture, gradient_check, param_count
from .selection import RfecvSelector, rfe_rank, rfecv_select
from .svm import OneVsOneSvc, train_binary_svm
from .windows import (
    OnlineSession,
    WindowPlan,
    select_earliest,
    slice_window,
    sweep,
    window_to_seconds,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "GeneratorConfig",
    "Measurement",
    "SensorTrace",
    "default_generator_config",
    "generate_synthetic",
    "load_dataset",
    "trim_to_interval",
    "validate_measurement",
    "write_dataset",
    "RunReport",
    "grouped_kfold",
    "loo_by_bottle",
    "mann_whitney_u",
    "pca_fit",
    "pca_scores",
    "run_experiment",
    "FingerprintExtractor",
    "extract_fingerprint",
    "fingerprint_matrix",
    "MlpClassifier",
    "build_architecture",
    "gradient_check",
    "param_count",
    "RfecvSelector",
    "rfe_rank",
    "rfecv_select",
    "OneVsOneSvc",
    "train_binary_svm",
    "OnlineSession",
    "WindowPlan",
    "select_earliest",
    "slice_window",
    "sweep",
    "window_to_seconds",
]
