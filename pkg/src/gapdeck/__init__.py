"""gapdeck: doubly robust decomposition of gender gaps in stated wage expectations."""

from .data import (
    DataError,
    IngestReport,
    Outcome,
    PostingRecord,
    SeekerRecord,
    load_postings,
    load_seekers,
    outcome,
)
from .forest import ForestModel, forest_fit
from .learners import (
    ConvergenceError,
    DesignMatrix,
    EstimationError,
    LearnerConfig,
    LinearModel,
    NuisanceFits,
    cross_fit,
    default_lambda_grid,
    lasso_cv,
    lasso_fit,
    lasso_lambda_max,
    make_folds,
    ols_fit,
    stack,
)
from .simulator import (
    PRESETS,
    OracleValues,
    ScenarioConfig,
    clipped_mass,
    compute_oracle,
    draw_postings,
    draw_seekers,
    generate,
    oracle_phi,
    population_quintiles,
    preset,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DataError",
    "DesignMatrix",
    "EstimationError",
    "ForestModel",
    "IngestReport",
    "LearnerConfig",
    "LinearModel",
    "NuisanceFits",
    "Outcome",
    "OracleValues",
    "PRESETS",
    "PostingRecord",
    "ScenarioConfig",
    "SeekerRecord",
    "clipped_mass",
    "compute_oracle",
    "cross_fit",
    "default_lambda_grid",
    "draw_postings",
    "draw_seekers",
    "forest_fit",
    "generate",
    "lasso_cv",
    "lasso_fit",
    "lasso_lambda_max",
    "load_postings",
    "load_seekers",
    "make_folds",
    "ols_fit",
    "oracle_phi",
    "outcome",
    "population_quintiles",
    "preset",
    "stack",
]
