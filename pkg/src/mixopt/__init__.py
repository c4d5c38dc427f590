"""Data mixture optimization on a simulated group-loss trainer.

The package provides: simplex utilities for mixture proportions, a
simulated trainer whose ground-truth dynamics are known, parametric
mixing laws with scikit-learn style estimators, an exponentiated-gradient
solver, six mixing methods under a shared budget ledger, analysis tools
relating method parameters to estimated true dynamics, and a CLI harness
that turns JSON configs into deterministic reports.
"""

from .analysis import (
    GreedyComparison,
    SimilarityScore,
    diagonal_projection,
    estimate_a_star,
    greedy_vs_exhaustive,
    replay_segments,
    similarity,
    smooth_trace,
    sweep_loss_drops,
    trace_similarity,
)
from .budget import (
    RESTRICTED,
    UNRESTRICTED,
    BudgetLedger,
    RunAllocation,
    allocation,
    extra_allowance,
)
from .egd import egd_step, ema_interaction, normalize_interaction, unrolled_egd
from .errors import (
    BudgetError,
    ComplexityError,
    ConfigError,
    ConvergenceError,
    DegenerateMatrixError,
    DegenerateScaleError,
    DimensionError,
    FitError,
    InsufficientSamplesError,
    MixoptError,
    SimplexError,
    SingularDesignError,
    SnapshotError,
    TraceError,
)
from .harness import (
    ExperimentConfig,
    MethodSpec,
    analyze_greedy,
    analyze_similarity,
    build_candidates,
    emit_report,
    load_config,
    report_to_csv,
    report_to_json,
    run_candidate_sweep,
    run_cell,
    run_experiment,
)
from .laws import (
    FitReport,
    LinearDynamicLaw,
    LogLinearStaticLaw,
    dynamic_next_losses,
    fit_dynamic_law,
    fit_scalar_scale,
    fit_static_law,
    goodness,
    static_losses,
)
from .methods import (
    AioliParams,
    DmlParams,
    DogeParams,
    DoremiParams,
    MethodResult,
    SkillItParams,
    TraceEntry,
    TrainerFactory,
    extract_parameters,
    learn_params,
    learn_params_ood,
    learn_proportions,
    multiplicative_update,
    run_aioli,
    run_aioli_ood,
    run_dml,
    run_doge,
    run_doremi,
    run_grid_search,
    run_skill_it,
    run_stratified,
)
from .simplex import (
    candidate_dirichlet,
    candidate_grid,
    candidate_sweep,
    candidates_from_table,
    candidates_to_table,
    interleave_order,
    smoothed_onehot,
    uniform,
    validate_proportions,
)
from .trainer import (
    DynamicsSchedule,
    LinearTrainer,
    ScheduleSegment,
    StaticLawConfig,
    StaticLawTrainer,
    TrainerConfig,
    TrainerSnapshot,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
