"""Online Fisher markets: trading-post clearing, proportional-response bidding
dynamics under stochastic valuation streams, and the regret metrics that
evaluate them against the static equilibrium."""

from .dynamics import (
    EquilibriumSolution,
    StepRule,
    Trajectory,
    omd_step_numeric,
    pr_step,
    pr_step_eta,
    run_online,
    solve_equilibrium,
)
from .errors import (
    BaselineMismatch,
    ConfigError,
    ConvergenceFailure,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidModelParams,
    MarketError,
    NonPositiveBid,
    NonPositiveInput,
    NonPositivePrice,
    NonPositiveSeries,
    SupportMismatch,
    ZeroPrice,
    ZeroUtility,
    ZeroUtilityRow,
)
from .harness import (
    ExperimentConfig,
    load_config,
    parse_config,
    run_experiment,
    run_instance_sweep,
    run_stepsize_comparison,
)
from .input_models import (
    NoiseModel,
    ValueStream,
    baseline_log_values,
    make_stream,
    mean_values,
)
from .market import (
    MarketInstance,
    TradingPostResult,
    normalize_market,
    trading_post,
    uniform_bids,
    utilities,
)
from .metrics import (
    RegretSeries,
    envy_check,
    fairness_regret,
    individual_regret,
    loglog_slope,
    price_diagnostics,
    proportionality_check,
)
from .objectives import (
    bregman_identity_residual,
    eg_sample_objective,
    expected_objective,
    kl_divergence,
    relative_smoothness_gap,
    shmyrev_gradient,
    shmyrev_objective,
)

__version__ = "0.1.0"
