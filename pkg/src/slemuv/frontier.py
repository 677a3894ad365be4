"""Pareto frontier of the risk interval over the risk factor grid.

Each grid value w gives one optimal allocation and one point
(sigma2_lower, sigma2_upper). Convexity of the traced curve and concavity
of the optimal objective V(w) are checked numerically rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import UncertainCovariance
from .optimizer import ProblemSpec, active_set_solve, kkt_residual


@dataclass(frozen=True)
class FrontierPoint:
    w: float
    beta: np.ndarray
    sigma2_lower: float
    sigma2_upper: float
    objective: float


def _solve_grid(mu: np.ndarray, r0: float, cov: UncertainCovariance, grid: int):
    if grid < 2:
        raise ValueError("grid must be at least 2")
    out = []
    for k in range(grid):
        w = k / (grid - 1)
        spec = ProblemSpec(mu=mu, r0=r0, cov=cov, w=w)
        out.append((spec, active_set_solve(spec)))
    return out


def _point(w: float, sol) -> FrontierPoint:
    return FrontierPoint(
        w=w,
        beta=sol.beta,
        sigma2_lower=sol.sigma2_lower,
        sigma2_upper=sol.sigma2_upper,
        objective=sol.objective,
    )


def sweep_frontier(
    mu: np.ndarray, r0: float, cov: UncertainCovariance, grid: int = 101
) -> list[FrontierPoint]:
    """Solve at w_k = k/(grid-1) for k = 0..grid-1. grid must be >= 2."""
    return [_point(spec.w, sol) for spec, sol in _solve_grid(mu, r0, cov, grid)]


def check_nondominance(points: list[FrontierPoint], tol: float = 1e-10) -> list[dict]:
    """Pairs where one point weakly improves both risk bounds on another.

    A pair (a, b) is a violation when sigma2_lower_a <= sigma2_lower_b + tol,
    sigma2_upper_a <= sigma2_upper_b + tol, and at least one of the two gaps
    is strict beyond tol. Exact duplicates are therefore not violations.
    """
    out = []
    for i, a in enumerate(points):
        for j, b in enumerate(points):
            if i == j:
                continue
            if (
                a.sigma2_lower <= b.sigma2_lower + tol
                and a.sigma2_upper <= b.sigma2_upper + tol
                and (
                    a.sigma2_lower < b.sigma2_lower - tol
                    or a.sigma2_upper < b.sigma2_upper - tol
                )
            ):
                out.append(
                    {
                        "dominates": i,
                        "dominated": j,
                        "gap_lower": b.sigma2_lower - a.sigma2_lower,
                        "gap_upper": b.sigma2_upper - a.sigma2_upper,
                    }
                )
    return out


def check_convexity(points: list[FrontierPoint]) -> float:
    """Largest positive deviation of the curve above its neighbor chords.

    Points are sorted by sigma2_lower ascending and deduplicated; for each
    interior point the chord through its neighbors in the
    (sigma2_lower, sigma2_upper) plane is evaluated at the point's abscissa
    and the signed excess above the chord is recorded. A convex frontier
    yields 0. Fewer than 3 input points raise.
    """
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    xy = sorted((p.sigma2_lower, p.sigma2_upper) for p in points)
    scale = max(1e-300, max(abs(x) for x, _ in xy), max(abs(y) for _, y in xy))
    dedup: list[tuple[float, float]] = []
    for x, y in xy:
        if dedup and abs(x - dedup[-1][0]) <= 1e-14 * scale and abs(y - dedup[-1][1]) <= 1e-14 * scale:
            continue
        dedup.append((x, y))
    worst = 0.0
    for k in range(1, len(dedup) - 1):
        x0, y0 = dedup[k - 1]
        x1, y1 = dedup[k]
        x2, y2 = dedup[k + 1]
        span = x2 - x0
        if span <= 1e-14 * scale:
            continue
        chord = y0 + (y2 - y0) * (x1 - x0) / span
        worst = max(worst, y1 - chord)
    return float(worst)


def scan_objective_over_w(points: list[FrontierPoint]) -> tuple[float, float]:
    """(argmin w of the objective, worst midpoint-concavity violation).

    The objective V(w) is a pointwise minimum of affine functions of w and so
    concave; for each interior grid point the violation is
    max(0, chord(V at neighbors) - V), and exact ties in the argmin resolve
    to the smallest w.
    """
    if not points:
        raise ValueError("no points")
    objs = np.array([p.objective for p in points])
    ws = np.array([p.w for p in points])
    order = np.argsort(ws)
    ws, objs = ws[order], objs[order]
    argmin_w = float(ws[int(np.argmin(objs))])
    worst = 0.0
    for k in range(1, len(ws) - 1):
        span = ws[k + 1] - ws[k - 1]
        if span <= 0.0:
            continue
        chord = objs[k - 1] + (objs[k + 1] - objs[k - 1]) * (ws[k] - ws[k - 1]) / span
        worst = max(worst, chord - objs[k])
    return argmin_w, float(worst)


def frontier_report(
    mu: np.ndarray, r0: float, cov: UncertainCovariance, grid: int = 101
) -> tuple[list[FrontierPoint], dict]:
    """Sweep plus diagnostics bundle (dominance, convexity, argmin, residuals)."""
    solved = _solve_grid(mu, r0, cov, grid)
    points = [_point(spec.w, sol) for spec, sol in solved]
    residuals = [kkt_residual(spec, sol) for spec, sol in solved]
    argmin_w, concavity = scan_objective_over_w(points)
    diagnostics = {
        "grid": grid,
        "r0": float(r0),
        "dominance_violations": check_nondominance(points),
        "convexity_defect": check_convexity(points) if len(points) >= 3 else 0.0,
        "argmin_w": argmin_w,
        "concavity_defect": concavity,
        "max_kkt_residual": float(max(residuals)),
    }
    return points, diagnostics


def frontier_csv_rows(points: list[FrontierPoint], assets: list[str]) -> tuple[list[str], list[list]]:
    """Header and rows for the delimited frontier table."""
    header = ["w", "sigma2_lower", "sigma2_upper", "objective"] + [
        f"beta_{i + 1}" for i in range(len(assets))
    ]
    rows = [
        [p.w, p.sigma2_lower, p.sigma2_upper, p.objective] + [float(b) for b in p.beta]
        for p in points
    ]
    return header, rows
