"""Moment-bound estimation from overlapping blocks.

A series of length T is scanned with m = T - n1 + 1 overlapping blocks of
length n1. Block statistics give interval estimates instead of point
estimates:

* mean bounds     ->  min / max of the m block means
* lower variance  ->  min over blocks of the block's own sample variance
* upper variance  ->  max over blocks of sum(x~^2) / (n1 - 1), where x~ is
                      the series demeaned chunk-wise over disjoint windows of
                      length n2
* cross bounds    ->  mean bounds of the elementwise product series, shifted
                      by the product of the full-sample means

The point mean stays the full-sample mean. Covariance bound matrices are
assembled from the variance bounds on the diagonal and the cross bounds off
it, then eigenvalue-clipped to positive definite when needed.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .market_data import ReturnPanel

DEFAULT_EPS_SCALE = 1e-8


@dataclass(frozen=True)
class BlockConfig:
    """Block lengths for the interval estimators.

    n1 is the rolling block length, n2 the disjoint demeaning chunk length.
    """

    n1: int = 60
    n2: int = 20

    def __post_init__(self) -> None:
        if self.n1 < 2:
            raise ValueError("n1 must be at least 2")
        if self.n2 < 1:
            raise ValueError("n2 must be at least 1")
        if self.n2 > self.n1:
            raise ValueError("n2 must not exceed n1")

    def check_length(self, T: int) -> None:
        if self.n1 > T:
            raise ValueError(f"n1={self.n1} exceeds series length {T}")


@dataclass(frozen=True)
class GNormalParams:
    """Interval moment estimates for one series."""

    mu: float
    mu_lower: float
    mu_upper: float
    var_lower: float
    var_upper: float


@dataclass
class UncertainCovariance:
    """Elementwise-ordered covariance bound pair, with a repair flag."""

    v_lower: np.ndarray
    v_upper: np.ndarray
    repaired: bool = False

    def __post_init__(self) -> None:
        self.v_lower = np.asarray(self.v_lower, dtype=float)
        self.v_upper = np.asarray(self.v_upper, dtype=float)
        if self.v_lower.shape != self.v_upper.shape or self.v_lower.ndim != 2:
            raise ValueError("covariance bounds must be square arrays of equal shape")
        if self.v_lower.shape[0] != self.v_lower.shape[1]:
            raise ValueError("covariance bounds must be square")

    @property
    def n_assets(self) -> int:
        return self.v_lower.shape[0]


def block_means(x: np.ndarray, n1: int) -> np.ndarray:
    """Means of the m = T - n1 + 1 overlapping length-n1 blocks."""
    x = np.asarray(x, dtype=float).ravel()
    if n1 < 1:
        raise ValueError("n1 must be positive")
    if n1 > x.size:
        raise ValueError(f"n1={n1} exceeds series length {x.size}")
    csum = np.concatenate(([0.0], np.cumsum(x)))
    return (csum[n1:] - csum[:-n1]) / n1


def _rolling_sum(x: np.ndarray, n1: int) -> np.ndarray:
    csum = np.concatenate(([0.0], np.cumsum(x)))
    return csum[n1:] - csum[:-n1]


def estimate_mean_bounds(x: np.ndarray, cfg: BlockConfig) -> tuple[float, float, float]:
    """Full-sample mean plus (min, max) of the block means.

    The full-sample mean is not guaranteed to fall inside the block-mean
    envelope because the blocks overlap; a violation is reported as a
    warning, never an error.
    """
    x = np.asarray(x, dtype=float).ravel()
    cfg.check_length(x.size)
    bm = block_means(x, cfg.n1)
    mu = float(x.mean())
    lo, hi = float(bm.min()), float(bm.max())
    slack = 1e-12 * max(1.0, abs(mu))
    if mu < lo - slack or mu > hi + slack:
        warnings.warn(
            f"full-sample mean {mu:.6g} falls outside the block-mean bounds "
            f"[{lo:.6g}, {hi:.6g}]",
            stacklevel=2,
        )
    return mu, lo, hi


def estimate_lower_variance(x: np.ndarray, cfg: BlockConfig) -> float:
    """Minimum over blocks of the block sample variance (block's own mean, n1 - 1)."""
    x = np.asarray(x, dtype=float).ravel()
    cfg.check_length(x.size)
    n1 = cfg.n1
    means = block_means(x, n1)
    ss = _rolling_sum(x * x, n1)
    var = (ss - n1 * means * means) / (n1 - 1)
    return float(np.maximum(var, 0.0).min())


def demean_miniblocks(x: np.ndarray, n2: int) -> np.ndarray:
    """Subtract the mean of each disjoint length-n2 chunk from its members.

    A trailing partial chunk is demeaned by its own mean. n2=1 therefore
    zeroes the series.
    """
    x = np.asarray(x, dtype=float).ravel()
    if n2 < 1:
        raise ValueError("n2 must be at least 1")
    out = x.copy()
    nfull = x.size // n2
    if nfull:
        head = x[: nfull * n2].reshape(nfull, n2)
        out[: nfull * n2] = (head - head.mean(axis=1, keepdims=True)).ravel()
    if x.size % n2:
        tail = x[nfull * n2 :]
        out[nfull * n2 :] = tail - tail.mean()
    return out


def estimate_upper_variance(x: np.ndarray, cfg: BlockConfig) -> float:
    """Maximum over blocks of sum(x~^2) / (n1 - 1) on the chunk-demeaned series."""
    x = np.asarray(x, dtype=float).ravel()
    cfg.check_length(x.size)
    xt = demean_miniblocks(x, cfg.n2)
    ss = _rolling_sum(xt * xt, cfg.n1)
    return float(np.maximum(ss / (cfg.n1 - 1), 0.0).max())


def estimate_cross_bounds(
    xi: np.ndarray, xj: np.ndarray, mu_i: float, mu_j: float, cfg: BlockConfig
) -> tuple[float, float]:
    """Bounds on the cross moment of two series.

    Block means of the elementwise product bound E[xy]; subtracting the
    product of the point means turns them into covariance bounds.
    Returns (lower, upper).
    """
    xi = np.asarray(xi, dtype=float).ravel()
    xj = np.asarray(xj, dtype=float).ravel()
    if xi.size != xj.size:
        raise ValueError("series lengths differ")
    cfg.check_length(xi.size)
    bm = block_means(xi * xj, cfg.n1)
    shift = mu_i * mu_j
    return float(bm.min() - shift), float(bm.max() - shift)


def build_uncertain_covariance(
    panel: ReturnPanel, cfg: BlockConfig
) -> tuple[list[GNormalParams], UncertainCovariance]:
    """Per-asset interval moments and the covariance bound pair for a panel.

    Diagonals come from the dedicated variance estimators, off-diagonals from
    the cross bounds, applied once per pair and mirrored. A diagonal ordering
    violation (var_lower > var_upper, possible on pathological series) is
    warned about, not raised.
    """
    R = panel.returns
    T, n = R.shape
    cfg.check_length(T)
    params: list[GNormalParams] = []
    for j in range(n):
        mu, lo, hi = estimate_mean_bounds(R[:, j], cfg)
        vl = estimate_lower_variance(R[:, j], cfg)
        vu = estimate_upper_variance(R[:, j], cfg)
        if vl > vu:
            warnings.warn(
                f"asset {panel.assets[j]}: var_lower {vl:.6g} exceeds var_upper {vu:.6g}",
                stacklevel=2,
            )
        params.append(GNormalParams(mu=mu, mu_lower=lo, mu_upper=hi, var_lower=vl, var_upper=vu))

    v_lower = np.zeros((n, n))
    v_upper = np.zeros((n, n))
    for j in range(n):
        v_lower[j, j] = params[j].var_lower
        v_upper[j, j] = params[j].var_upper
    for i in range(n):
        for j in range(i + 1, n):
            lo, hi = estimate_cross_bounds(R[:, i], R[:, j], params[i].mu, params[j].mu, cfg)
            v_lower[i, j] = v_lower[j, i] = lo
            v_upper[i, j] = v_upper[j, i] = hi
    return params, UncertainCovariance(v_lower=v_lower, v_upper=v_upper, repaired=False)


def psd_check(M: np.ndarray, sym_tol: float = 1e-10) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Raises if M is asymmetric beyond sym_tol (absolute).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if np.abs(M - M.T).max() > sym_tol:
        raise ValueError("matrix is not symmetric")
    return float(np.linalg.eigvalsh((M + M.T) / 2.0).min())


def psd_repair(M: np.ndarray, eps_scale: float = DEFAULT_EPS_SCALE) -> np.ndarray:
    """Eigenvalue-clip a symmetric matrix to positive definite.

    Inputs that are already positive definite come back unchanged, which
    makes the repair exactly idempotent. Otherwise eigenvalues below
    eps = eps_scale * max(trace(M)/n, 1e-12) are raised to eps and the matrix
    is rebuilt and resymmetrized. The floor is additionally kept above the
    eigensolver's noise level (~100 ulps of the spectral radius) so that a
    repaired matrix re-checks as positive definite instead of oscillating.
    """
    M = np.asarray(M, dtype=float)
    S = (M + M.T) / 2.0
    vals, vecs = np.linalg.eigh(S)
    if vals.min() > 0.0:
        return S.copy()
    n = S.shape[0]
    eps = eps_scale * max(np.trace(S) / n, 1e-12)
    eps = max(eps, 100.0 * np.finfo(float).eps * float(np.abs(vals).max()))
    clipped = np.maximum(vals, eps)
    R = (vecs * clipped) @ vecs.T
    return (R + R.T) / 2.0


def ensure_positive_definite(
    cov: UncertainCovariance, eps_scale: float = DEFAULT_EPS_SCALE
) -> UncertainCovariance:
    """Repair either covariance bound whose smallest eigenvalue is <= 0."""
    vl, vu = cov.v_lower, cov.v_upper
    repaired = cov.repaired
    if psd_check(vl) <= 0.0:
        vl = psd_repair(vl, eps_scale)
        repaired = True
    if psd_check(vu) <= 0.0:
        vu = psd_repair(vu, eps_scale)
        repaired = True
    return UncertainCovariance(v_lower=vl, v_upper=vu, repaired=repaired)


def save_params(
    path: str,
    assets: Iterable[str],
    params: Iterable[GNormalParams],
    cov: UncertainCovariance,
    cfg: BlockConfig,
) -> None:
    """Serialize the estimation output as schema-versioned JSON."""
    payload = params_payload(assets, params, cov, cfg)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def params_payload(
    assets: Iterable[str],
    params: Iterable[GNormalParams],
    cov: UncertainCovariance,
    cfg: BlockConfig,
) -> dict:
    return {
        "schema_version": 1,
        "assets": list(assets),
        "block": {"n1": cfg.n1, "n2": cfg.n2},
        "params": [
            {
                "mu": p.mu,
                "mu_lower": p.mu_lower,
                "mu_upper": p.mu_upper,
                "var_lower": p.var_lower,
                "var_upper": p.var_upper,
            }
            for p in params
        ],
        "v_lower": cov.v_lower.tolist(),
        "v_upper": cov.v_upper.tolist(),
        "repaired": bool(cov.repaired),
    }


def load_params(path: str) -> tuple[list[str], list[GNormalParams], UncertainCovariance]:
    """Inverse of save_params."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != 1:
        raise ValueError(f"{path}: unsupported schema_version {payload.get('schema_version')!r}")
    assets = [str(a) for a in payload["assets"]]
    params = [
        GNormalParams(
            mu=float(p["mu"]),
            mu_lower=float(p["mu_lower"]),
            mu_upper=float(p["mu_upper"]),
            var_lower=float(p["var_lower"]),
            var_upper=float(p["var_upper"]),
        )
        for p in payload["params"]
    ]
    cov = UncertainCovariance(
        v_lower=np.array(payload["v_lower"], dtype=float),
        v_upper=np.array(payload["v_upper"], dtype=float),
        repaired=bool(payload.get("repaired", False)),
    )
    if len(assets) != cov.n_assets or len(params) != cov.n_assets:
        raise ValueError(f"{path}: inconsistent asset count")
    return assets, params, cov
