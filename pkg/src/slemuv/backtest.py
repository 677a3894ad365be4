"""Rolling-window out-of-sample evaluation.

Each out-of-sample day re-estimates moments on the trailing window, solves
the allocation, and applies the weights to that day's realized returns. The
uncertainty-aware model and a plain sample-covariance baseline run side by
side on identical windows and return floors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .estimation import (
    BlockConfig,
    UncertainCovariance,
    build_uncertain_covariance,
    ensure_positive_definite,
    psd_check,
    psd_repair,
)
from .market_data import ReturnPanel
from .optimizer import ProblemSpec, active_set_solve

R0Rule = Union[float, str]
EQUAL_WEIGHT_MEAN = "equal_weight_mean"

# estimator hook: trailing-window returns -> (mu, V_lower, V_upper)
Estimator = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


def cumulative_wealth(returns: Sequence[float]) -> np.ndarray:
    """Wealth path from 1.0: W_t = W_{t-1} * (1 + r_t). Length len(returns)+1."""
    r = np.asarray(returns, dtype=float).ravel()
    if (r <= -1.0).any():
        raise ValueError("returns at or below -1 are not valid")
    return np.concatenate(([1.0], np.cumprod(1.0 + r)))


def sharpe_ratio(returns: Sequence[float], rf: float = 0.0, periods_per_year: int = 252) -> float:
    """Annualized mean excess return over sample standard deviation."""
    r = np.asarray(returns, dtype=float).ravel()
    if r.size < 2:
        raise ValueError("need at least 2 returns")
    excess = r - rf
    sd = float(excess.std(ddof=1))
    if sd == 0.0:
        raise ValueError("zero variance")
    return float(excess.mean() / sd * np.sqrt(periods_per_year))


def max_drawdown(wealth: Sequence[float]) -> float:
    """Largest peak-to-trough loss of a positive wealth path, as a value <= 0."""
    wlt = np.asarray(wealth, dtype=float).ravel()
    if wlt.size == 0:
        raise ValueError("empty wealth path")
    if (wlt <= 0.0).any():
        raise ValueError("wealth must stay positive")
    peaks = np.maximum.accumulate(wlt)
    return float(-np.max(1.0 - wlt / peaks))


def turnover(weights: np.ndarray) -> tuple[float, float]:
    """Mean and sample std of tau_t = 0.5 * sum_i |w_t,i - w_{t-1,i}|.

    Rows must lie on the simplex within 1e-6. With a single rebalance the
    sample std is undefined and reported as 0.0.
    """
    W = np.asarray(weights, dtype=float)
    if W.ndim != 2 or W.shape[0] < 2:
        raise ValueError("need at least 2 weight rows")
    if np.abs(W.sum(axis=1) - 1.0).max() > 1e-6 or W.min() < -1e-6:
        raise ValueError("weight rows must lie on the simplex")
    tau = 0.5 * np.abs(np.diff(W, axis=0)).sum(axis=1)
    std = float(tau.std(ddof=1)) if tau.size >= 2 else 0.0
    return float(tau.mean()), std


def _sample_cov(window_returns: np.ndarray) -> tuple[np.ndarray, bool]:
    X = np.asarray(window_returns, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("window must have at least 2 rows")
    Xc = X - X.mean(axis=0)
    C = Xc.T @ Xc / (X.shape[0] - 1)
    C = (C + C.T) / 2.0
    if psd_check(C) <= 0.0:
        return psd_repair(C), True
    return C, False


def mv_baseline_covariance(window_returns: np.ndarray) -> np.ndarray:
    """Sample covariance (divisor T-1) of a T x n window, repaired to PD if needed."""
    C, repaired = _sample_cov(window_returns)
    if repaired:
        warnings.warn("sample covariance was not positive definite; repaired", stacklevel=2)
    return C


@dataclass(frozen=True)
class BacktestConfig:
    window: int = 252
    horizon: Optional[int] = None
    w: Union[float, Sequence[float]] = 0.5
    r0_rule: R0Rule = EQUAL_WEIGHT_MEAN
    block: BlockConfig = field(default_factory=BlockConfig)
    baseline: bool = True

    def w_list(self) -> list[float]:
        ws = [self.w] if isinstance(self.w, (int, float)) else list(self.w)
        if not ws:
            raise ValueError("need at least one w value")
        for w in ws:
            if not 0.0 <= float(w) <= 1.0:
                raise ValueError("w must lie in [0,1]")
        return [float(w) for w in ws]

    def validate(self, T: int, n1: int) -> None:
        if self.window < max(2, n1):
            raise ValueError("window must be at least max(2, n1)")
        if self.window + 1 > T:
            raise ValueError("panel too short for the window")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be positive when given")
        if isinstance(self.r0_rule, str) and self.r0_rule != EQUAL_WEIGHT_MEAN:
            raise ValueError(f"unknown r0 rule {self.r0_rule!r}")


@dataclass
class ModelResult:
    """Per-model outcome of one backtest run."""

    weights: np.ndarray
    returns: np.ndarray
    wealth: np.ndarray
    cumulative_wealth: float
    sharpe: float
    max_drawdown: float
    turnover_mean: float
    turnover_std: float
    infeasible_days: list[int]


@dataclass
class BacktestReport:
    dates: list[str]
    assets: list[str]
    config: BacktestConfig
    sle: dict[float, ModelResult]
    baseline: Optional[ModelResult]
    diagnostics: dict


def _default_estimator(cfg: BacktestConfig) -> Estimator:
    def estimate(window_returns: np.ndarray):
        panel = ReturnPanel(
            dates=[str(t) for t in range(window_returns.shape[0])],
            assets=[str(j) for j in range(window_returns.shape[1])],
            returns=window_returns,
        )
        params, cov = build_uncertain_covariance(panel, cfg.block)
        return np.array([p.mu for p in params]), cov.v_lower, cov.v_upper

    return estimate


def _resolve_r0(rule: R0Rule, mu: np.ndarray) -> float:
    if isinstance(rule, str):
        return float(mu.mean())
    return float(rule)


def _finish_model(weights: list[np.ndarray], rets: list[float], infeasible: list[int]) -> ModelResult:
    W = np.vstack(weights)
    r = np.asarray(rets, dtype=float)
    wealth = cumulative_wealth(r)
    t_mean, t_std = turnover(W) if W.shape[0] >= 2 else (0.0, 0.0)
    return ModelResult(
        weights=W,
        returns=r,
        wealth=wealth,
        cumulative_wealth=float(wealth[-1]),
        sharpe=sharpe_ratio(r) if r.size >= 2 else 0.0,
        max_drawdown=max_drawdown(wealth),
        turnover_mean=t_mean,
        turnover_std=t_std,
        infeasible_days=infeasible,
    )


def rolling_backtest(
    panel: ReturnPanel,
    cfg: BacktestConfig,
    estimator: Optional[Estimator] = None,
) -> BacktestReport:
    """Daily-rebalanced walk forward over the panel.

    The first out-of-sample day is row `window`; the number of evaluated days
    is min(horizon, T - window). When a day's return floor is infeasible the
    previous day's weights are carried (equal weights on day one) and the day
    index is recorded. Passing `estimator` replaces the moment estimation for
    the uncertainty-aware model, which the degeneracy tests use to inject
    V_lower = V_upper.
    """
    R = panel.returns
    T, n = R.shape
    cfg.validate(T, cfg.block.n1)
    ws = cfg.w_list()
    est = estimator if estimator is not None else _default_estimator(cfg)

    days = T - cfg.window if cfg.horizon is None else min(cfg.horizon, T - cfg.window)
    sle_weights: dict[float, list[np.ndarray]] = {w: [] for w in ws}
    sle_rets: dict[float, list[float]] = {w: [] for w in ws}
    sle_infeasible: dict[float, list[int]] = {w: [] for w in ws}
    base_weights: list[np.ndarray] = []
    base_rets: list[float] = []
    base_infeasible: list[int] = []
    sle_repaired_days = 0
    base_repaired_days = 0

    equal = np.full(n, 1.0 / n)
    for d in range(days):
        t = cfg.window + d
        window_returns = R[t - cfg.window : t]
        realized = R[t]

        mu, vl, vu = est(window_returns)
        cov = ensure_positive_definite(UncertainCovariance(v_lower=vl, v_upper=vu))
        if cov.repaired:
            sle_repaired_days += 1
        r0 = _resolve_r0(cfg.r0_rule, mu)
        feasible = r0 <= mu.max() + 1e-10 * max(1.0, abs(r0))

        for w in ws:
            if feasible:
                beta = active_set_solve(ProblemSpec(mu=mu, r0=r0, cov=cov, w=w)).beta
            else:
                beta = sle_weights[w][-1] if sle_weights[w] else equal
                sle_infeasible[w].append(d)
            sle_weights[w].append(beta)
            sle_rets[w].append(float(beta @ realized))

        if cfg.baseline:
            mu_hat = window_returns.mean(axis=0)
            C, repaired = _sample_cov(window_returns)
            if repaired:
                base_repaired_days += 1
            r0_b = _resolve_r0(cfg.r0_rule, mu_hat)
            if r0_b <= mu_hat.max() + 1e-10 * max(1.0, abs(r0_b)):
                cov_b = UncertainCovariance(v_lower=C, v_upper=C)
                beta_b = active_set_solve(
                    ProblemSpec(mu=mu_hat, r0=r0_b, cov=cov_b, w=0.5)
                ).beta
            else:
                beta_b = base_weights[-1] if base_weights else equal
                base_infeasible.append(d)
            base_weights.append(beta_b)
            base_rets.append(float(beta_b @ realized))

    dates = list(panel.dates[cfg.window : cfg.window + days])
    sle = {
        w: _finish_model(sle_weights[w], sle_rets[w], sle_infeasible[w]) for w in ws
    }
    baseline = (
        _finish_model(base_weights, base_rets, base_infeasible) if cfg.baseline else None
    )
    return BacktestReport(
        dates=dates,
        assets=list(panel.assets),
        config=cfg,
        sle=sle,
        baseline=baseline,
        diagnostics={
            "days": days,
            "sle_repaired_days": sle_repaired_days,
            "baseline_repaired_days": base_repaired_days,
        },
    )


def compare_models(report: BacktestReport) -> list[dict]:
    """One row per w: model metrics next to the shared baseline block.

    Requires the baseline to have run.
    """
    if report.baseline is None:
        raise ValueError("baseline missing; rerun with baseline enabled")
    if not report.sle:
        raise ValueError("no w values in the report")
    b = report.baseline
    rows = []
    for w in sorted(report.sle):
        m = report.sle[w]
        rows.append(
            {
                "w": w,
                "cw_sle_muv": m.cumulative_wealth,
                "sr_sle_muv": m.sharpe,
                "md_sle_muv": m.max_drawdown,
                "cw_mv": b.cumulative_wealth,
                "sr_mv": b.sharpe,
                "md_mv": b.max_drawdown,
            }
        )
    return rows
