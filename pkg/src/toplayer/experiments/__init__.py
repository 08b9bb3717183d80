"""Reproduction drivers: optimisation, regularised regression and features."""

from .features import (
    N_FEATURES,
    AttackResult,
    FeatureExtractor,
    LinearClassifier,
    gradient_attack,
    topo_features,
)
from .optimize import (
    OptimizationConfig,
    OptimizationError,
    OptimizationResult,
    optimize_point_cloud,
    optimize_scalar_field,
)
from .regression import (
    PENALTIES,
    RegressionProblem,
    RegressionResult,
    log_grid,
    penalty,
    regularized_regression,
    simulate,
)
from .synth import shape_dataset, synth_data
