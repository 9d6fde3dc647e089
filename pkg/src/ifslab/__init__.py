"""Stationary measures, pressure, dimensions, and parameter sweeps for
weighted contraction schemes on the unit interval.

The public surface re-exported here covers the library API; the
command-line interface lives in :mod:`ifslab.cli` and is deliberately
not imported at package load time.
"""

__version__ = "0.1.0"

from .errors import (
    BindError,
    BracketError,
    BudgetError,
    ConfigError,
    ConvergenceError,
    EvalDomainError,
    ExprSyntaxError,
    IfsLabError,
    NoiseFloorError,
    ValidationError,
)
from .expressions import (
    compile_scalar,
    compile_scalar_bound,
    diff_x,
    eval_expr,
    parse_expr,
    to_source,
)
from .system import (
    ExprWeight,
    FamilySpec,
    IFSInstance,
    StepWeight,
    ValidationReport,
    bind,
    validate,
)
from .measure import (
    DiscreteMeasure,
    EvolveConfig,
    chaos_game,
    depth_n_measure,
    integrate,
    markov_step,
    stationarity_residual,
    w1_distance,
)
from .rng import RNG_ALGORITHM, SplitMix64
from .thermo import (
    Potential,
    PressureEstimate,
    SymbolWord,
    WORD_BUDGET,
    eval_potential,
    gibbs_cylinder,
    gibbs_integral,
    pressure_derivative_check,
    pressure_periodic,
    pressure_second_difference,
    pressure_transfer,
    project,
    pushforward_integral,
    shift_metric,
)
from .dimension import (
    DimensionResult,
    bowen_root,
    dimension_summary,
    equilibrium_entropy_lyapunov,
    measure_dimension,
    moran_dimension,
)
from .sweep import (
    EngineConfig,
    Quantity,
    ScalarFn,
    SmoothnessDiagnostic,
    SweepRow,
    SweepSpec,
    diagnose_function,
    dyadic_ladder,
    preset,
    PRESET_NAMES,
    run_sweep,
    smoothness_diagnostic,
)

__all__ = [
    "__version__",
    # errors
    "IfsLabError",
    "ExprSyntaxError",
    "EvalDomainError",
    "BindError",
    "ValidationError",
    "BudgetError",
    "ConvergenceError",
    "BracketError",
    "NoiseFloorError",
    "ConfigError",
    # expressions
    "parse_expr",
    "to_source",
    "eval_expr",
    "diff_x",
    "compile_scalar",
    "compile_scalar_bound",
    # systems
    "FamilySpec",
    "IFSInstance",
    "ExprWeight",
    "StepWeight",
    "ValidationReport",
    "bind",
    "validate",
    # measures
    "DiscreteMeasure",
    "EvolveConfig",
    "markov_step",
    "depth_n_measure",
    "chaos_game",
    "integrate",
    "w1_distance",
    "stationarity_residual",
    "SplitMix64",
    "RNG_ALGORITHM",
    # thermodynamics
    "SymbolWord",
    "shift_metric",
    "project",
    "Potential",
    "eval_potential",
    "PressureEstimate",
    "pressure_periodic",
    "pressure_transfer",
    "gibbs_cylinder",
    "gibbs_integral",
    "pushforward_integral",
    "pressure_derivative_check",
    "pressure_second_difference",
    "WORD_BUDGET",
    # dimensions
    "DimensionResult",
    "moran_dimension",
    "bowen_root",
    "measure_dimension",
    "dimension_summary",
    "equilibrium_entropy_lyapunov",
    # sweeps and diagnostics
    "ScalarFn",
    "Quantity",
    "EngineConfig",
    "SweepSpec",
    "SweepRow",
    "run_sweep",
    "preset",
    "PRESET_NAMES",
    "SmoothnessDiagnostic",
    "dyadic_ladder",
    "diagnose_function",
    "smoothness_diagnostic",
]
