"""Interactive symbolic regression over a reinforcable lattice of graphs.

Workflow: register a dataset, ask a question (GraphSpec + filters) to get a
pool of candidate graphs, fit the pool, inspect the survivors, reinforce
the lattice with the ones worth keeping, repeat.  Fitted graphs convert to
closed-form equations and standard diagnostics.
"""

__version__ = "0.1.0"

from .analysis import (
    PlotData,
    RocCurve,
    partial2d,
    plot_data,
    probability_scores,
    roc_auc,
    segmented_loss,
)
from .data import (
    Dataset,
    InputStats,
    ParseError,
    SplitSpec,
    compute_stats,
    load_csv,
    loads_csv,
    stratified_split,
)
from .estimator import SymbolicClassifier, SymbolicRegressor
from .expression import (
    eval_expression,
    graph_equation,
    render,
    to_expression,
    weight_tables,
)
from .fitting import (
    AIC,
    BIC,
    CROSS_ENTROPY,
    RMSE,
    FitConfig,
    aic,
    batch_loss,
    bic,
    criterion_value,
    fit_graph,
    gradient,
    init_params,
    predict,
)
from .graph import (
    CATEGORICAL,
    CLASSIFIER,
    KINDS,
    NUMERICAL,
    REGRESSOR,
    EvaluationError,
    Graph,
    GraphStructureError,
    MissingFeatureError,
    Node,
    NonFiniteError,
    SingularInputError,
    UnseenCategoryWarning,
    eval_interaction,
    interaction_arity,
)
from .lattice import (
    ConfigError,
    Contains,
    Excludes,
    FilterStarvationError,
    Functions,
    GraphSpec,
    Lattice,
    LatticeConfig,
    MaxDepth,
)
from .pool import GraphPool
from .session import (
    HoldoutLockedError,
    Session,
    SessionIntegrityError,
    SessionVersionError,
    UnknownIdError,
)

__all__ = [
    "__version__",
    # graphs
    "Graph",
    "Node",
    "KINDS",
    "NUMERICAL",
    "CATEGORICAL",
    "CLASSIFIER",
    "REGRESSOR",
    "eval_interaction",
    "interaction_arity",
    "EvaluationError",
    "SingularInputError",
    "NonFiniteError",
    "MissingFeatureError",
    "GraphStructureError",
    "UnseenCategoryWarning",
    # lattice
    "Lattice",
    "LatticeConfig",
    "GraphSpec",
    "Contains",
    "Excludes",
    "MaxDepth",
    "Functions",
    "ConfigError",
    "FilterStarvationError",
    # pool and fitting
    "GraphPool",
    "FitConfig",
    "fit_graph",
    "init_params",
    "predict",
    "batch_loss",
    "gradient",
    "criterion_value",
    "aic",
    "bic",
    "CROSS_ENTROPY",
    "RMSE",
    "AIC",
    "BIC",
    # data
    "Dataset",
    "SplitSpec",
    "InputStats",
    "load_csv",
    "loads_csv",
    "stratified_split",
    "compute_stats",
    "ParseError",
    # analysis
    "roc_auc",
    "RocCurve",
    "PlotData",
    "probability_scores",
    "partial2d",
    "segmented_loss",
    "plot_data",
    # expressions
    "to_expression",
    "eval_expression",
    "render",
    "graph_equation",
    "weight_tables",
    # estimators
    "SymbolicClassifier",
    "SymbolicRegressor",
    # sessions
    "Session",
    "UnknownIdError",
    "HoldoutLockedError",
    "SessionIntegrityError",
    "SessionVersionError",
]
