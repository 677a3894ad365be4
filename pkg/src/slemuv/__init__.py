"""Portfolio selection when the covariance is only known to lie in a band.

The package estimates interval moments from overlapping blocks, solves the
blended minimum-variance program over the simplex with a return floor,
sweeps the risk-factor grid into a Pareto frontier, and evaluates the model
against a plain sample-covariance baseline in rolling backtests.
"""

from .backtest import (
    BacktestConfig,
    BacktestReport,
    ModelResult,
    compare_models,
    cumulative_wealth,
    max_drawdown,
    mv_baseline_covariance,
    rolling_backtest,
    sharpe_ratio,
    turnover,
)
from .estimation import (
    BlockConfig,
    GNormalParams,
    UncertainCovariance,
    block_means,
    build_uncertain_covariance,
    demean_miniblocks,
    ensure_positive_definite,
    estimate_cross_bounds,
    estimate_lower_variance,
    estimate_mean_bounds,
    estimate_upper_variance,
    load_params,
    psd_check,
    psd_repair,
    save_params,
)
from .frontier import (
    FrontierPoint,
    check_convexity,
    check_nondominance,
    frontier_csv_rows,
    frontier_report,
    scan_objective_over_w,
    sweep_frontier,
)
from .market_data import (
    PricePanel,
    ReturnPanel,
    load_prices,
    load_returns,
    prices_to_returns,
    save_returns,
    validate_panel,
)
from .optimizer import (
    PortfolioSolution,
    ProblemSpec,
    active_set_solve,
    blend_covariance,
    fallback_solve,
    kkt_residual,
    risk_interval,
    solve_equality_and_return,
    solve_equality_only,
)
from .synthetic import RegimeSpec, four_asset_reference_specs, generate_panel, generate_series

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig",
    "BacktestReport",
    "BlockConfig",
    "FrontierPoint",
    "GNormalParams",
    "ModelResult",
    "PortfolioSolution",
    "PricePanel",
    "ProblemSpec",
    "RegimeSpec",
    "ReturnPanel",
    "UncertainCovariance",
    "active_set_solve",
    "blend_covariance",
    "block_means",
    "build_uncertain_covariance",
    "check_convexity",
    "check_nondominance",
    "compare_models",
    "cumulative_wealth",
    "demean_miniblocks",
    "ensure_positive_definite",
    "estimate_cross_bounds",
    "estimate_lower_variance",
    "estimate_mean_bounds",
    "estimate_upper_variance",
    "fallback_solve",
    "four_asset_reference_specs",
    "frontier_csv_rows",
    "frontier_report",
    "generate_panel",
    "generate_series",
    "kkt_residual",
    "load_params",
    "load_prices",
    "load_returns",
    "max_drawdown",
    "mv_baseline_covariance",
    "prices_to_returns",
    "psd_check",
    "psd_repair",
    "risk_interval",
    "rolling_backtest",
    "save_params",
    "save_returns",
    "scan_objective_over_w",
    "sharpe_ratio",
    "solve_equality_and_return",
    "solve_equality_only",
    "sweep_frontier",
    "turnover",
    "validate_panel",
]
