"""Adaptive k-nearest-neighbor classification with abstention.

Core package: datasets, exact neighbor profiles, the adaptive decision rule,
analytic distributions with pointwise-advantage oracles, Monte-Carlo bound
validators, and experiment runners. A FastAPI service (``aknn.service``)
exposes everything over HTTP and the ``aknn`` CLI is a thin client for it.
"""

from .classify import (
    ConfidenceRule,
    EvalReport,
    Practical,
    Prediction,
    TheoryDefault,
    TheoryVC,
    delta_threshold,
    evaluate,
    knn_predict,
    predict_binary,
    predict_multiclass,
    resolve_single_label,
)
from .data import (
    DatasetError,
    LabeledDataset,
    NoiseSpec,
    inject_label_noise,
    load_binary,
    load_csv,
    load_csv_text,
    save_binary,
    save_csv,
    split,
)
from .neighbors import NeighborIndex, NeighborProfile, build
from .synthetic import (
    AdvantageEstimate,
    PiecewiseDistribution,
    format_distribution,
    parse_distribution,
    sample_product,
    step_distribution,
)
from .validate import (
    IntervalFamily,
    ValidationReport,
    counterexample_statistic,
    validate_bias_lemma,
    validate_mass_lemma,
    validate_ucecm,
)

__version__ = "0.1.0"
