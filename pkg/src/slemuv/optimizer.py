"""Long-only minimum-risk allocation under covariance uncertainty.

The risk of an allocation beta on the simplex is an interval: beta'V_lower*beta
up to beta'V_upper*beta. A risk factor w in [0, 1] blends the bounds into a
single positive definite matrix

    Sigma(w) = w * V_lower + (1 - w) * V_upper

and the program solved here is

    minimize    beta' Sigma(w) beta
    subject to  sum(beta) = 1,  mu'beta >= r0,  beta >= 0.

The primary solver determines the active set directly: on the active block A
the stationarity system is Sigma_AA beta_A = a*1 + b*mu_A, where (a, b) come
either from the budget constraint alone (b = 0) or from the 2x2 Gram system

    [[1'S^-1 1,  1'S^-1 mu], [mu'S^-1 1, mu'S^-1 mu]] (a, b)' = (1, r0)'

when the return constraint binds. Negative weights are pruned one at a time
(most negative first, ties to the smallest index) and inactive coordinates
with a negative reduced multiplier are re-admitted (smallest index first).
A projected-gradient method over the same feasible set backs the active-set
iteration up when it fails to settle within its iteration cap.

Reported multipliers follow the Lagrangian

    L = beta'Sigma beta + lambda1*(1'beta - 1) + lambda2*(r0 - mu'beta) - gamma'beta

so stationarity reads 2*Sigma*beta + lambda1*1 - lambda2*mu - gamma = 0 with
lambda2 >= 0 and gamma >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import UncertainCovariance

ACTIVITY_TOL = 1e-10


@dataclass(frozen=True)
class ProblemSpec:
    """One instance: expected returns, floor r0, covariance bounds, risk factor."""

    mu: np.ndarray
    r0: float
    cov: UncertainCovariance
    w: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float).ravel())
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("w must lie in [0,1]")
        if self.mu.size != self.cov.n_assets:
            raise ValueError("mu length does not match covariance size")
        if self.mu.size < 1:
            raise ValueError("need at least one asset")

    @property
    def n_assets(self) -> int:
        return self.mu.size


@dataclass
class PortfolioSolution:
    beta: np.ndarray
    lambda1: float
    lambda2: float
    gamma: np.ndarray
    active_set: list[int]
    sigma2_lower: float
    sigma2_upper: float
    objective: float
    method: str = "active_set"


def blend_covariance(cov: UncertainCovariance, w: float) -> np.ndarray:
    """Sigma(w) = w*V_lower + (1-w)*V_upper."""
    if not 0.0 <= w <= 1.0:
        raise ValueError("w must lie in [0,1]")
    return w * cov.v_lower + (1.0 - w) * cov.v_upper


def risk_interval(beta: np.ndarray, cov: UncertainCovariance) -> tuple[float, float]:
    """(beta'V_lower beta, beta'V_upper beta) for a simplex allocation."""
    beta = np.asarray(beta, dtype=float).ravel()
    return float(beta @ cov.v_lower @ beta), float(beta @ cov.v_upper @ beta)


def _feasibility_tol(r0: float) -> float:
    return 1e-10 * max(1.0, abs(r0))


def _check_feasible(mu: np.ndarray, r0: float) -> None:
    if r0 > mu.max() + _feasibility_tol(r0):
        raise ValueError("infeasible: r0 exceeds the largest expected return")


def solve_equality_only(sigma_aa: np.ndarray) -> np.ndarray:
    """Budget-only minimizer on the active block: S^-1 1 / (1'S^-1 1)."""
    beta, _ = _equality_branch(np.asarray(sigma_aa, dtype=float))
    return beta


def _refined_solve(sigma_aa: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Linear solve with one round of iterative refinement.

    Repaired covariances can carry eigenvalues at the clip floor, so the
    blend may be conditioned like 1e8; a single refinement step recovers
    enough digits for the simplex identities downstream.
    """
    try:
        u = np.linalg.solve(sigma_aa, rhs)
        u += np.linalg.solve(sigma_aa, rhs - sigma_aa @ u)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular active-block matrix; repair the covariance upstream") from exc
    return u


def _equality_branch(sigma_aa: np.ndarray) -> tuple[np.ndarray, float]:
    ones = np.ones(sigma_aa.shape[0])
    u = _refined_solve(sigma_aa, ones)
    s = float(u.sum())
    if s == 0.0:
        raise ValueError("singular active-block matrix; repair the covariance upstream")
    return u / s, 1.0 / s


def solve_equality_and_return(
    sigma_aa: np.ndarray, mu_a: np.ndarray, r0: float
) -> tuple[np.ndarray, float, float]:
    """Two-multiplier branch on the active block.

    Solves the 2x2 Gram system for (a, b) and returns
    (beta_A, a, b) with beta_A = S^-1 (a*1 + b*mu_A). Raises on a singular
    block or a degenerate Gram system (mu_A proportional to ones), which
    signals that the return constraint is redundant on this block.
    """
    sigma_aa = np.asarray(sigma_aa, dtype=float)
    mu_a = np.asarray(mu_a, dtype=float).ravel()
    ones = np.ones(sigma_aa.shape[0])
    u = _refined_solve(sigma_aa, ones)
    v = _refined_solve(sigma_aa, mu_a)
    g11 = float(ones @ u)
    g12 = float(ones @ v)
    g21 = float(mu_a @ u)
    g22 = float(mu_a @ v)
    det = g11 * g22 - g12 * g21
    scale = abs(g11 * g22) + abs(g12 * g21)
    if abs(det) <= 1e-12 * max(scale, 1e-300):
        raise ValueError("degenerate Gram system: active-block returns are proportional to ones")
    a = (g22 * 1.0 - g12 * r0) / det
    b = (g11 * r0 - g21 * 1.0) / det
    return a * u + b * v, a, b


def _solve_on_active(
    sigma: np.ndarray, mu: np.ndarray, r0: float, active: list[int]
) -> tuple[np.ndarray, float, float]:
    """Solve the reduced problem on the current active index list.

    Tries the budget-only branch first; switches to the two-multiplier branch
    only when the return floor is violated. Falls back to the budget-only
    branch when the Gram system degenerates or yields b < 0.
    """
    idx = np.asarray(active, dtype=int)
    s_aa = sigma[np.ix_(idx, idx)]
    mu_a = mu[idx]
    beta0, a0 = _equality_branch(s_aa)
    if float(mu_a @ beta0) >= r0 - _feasibility_tol(r0):
        return beta0, a0, 0.0
    try:
        beta, a, b = solve_equality_and_return(s_aa, mu_a, r0)
    except ValueError as exc:
        if "degenerate" in str(exc):
            return beta0, a0, 0.0
        raise
    if b < 0.0:
        return beta0, a0, 0.0
    return beta, a, b


def _package(
    p: ProblemSpec,
    sigma: np.ndarray,
    active: list[int],
    beta_a: np.ndarray,
    a: float,
    b: float,
    method: str,
) -> PortfolioSolution:
    n = p.n_assets
    beta = np.zeros(n)
    beta[np.asarray(active, dtype=int)] = beta_a
    total = float(beta.sum())
    if total > 0.0:
        # the reduced solves satisfy the budget only to solver accuracy;
        # normalizing makes it exact without moving the direction
        beta /= total
        beta_a = beta[np.asarray(active, dtype=int)]
    gamma = np.zeros(n)
    inactive = sorted(set(range(n)) - set(active))
    if inactive:
        idx_i = np.asarray(inactive, dtype=int)
        idx_a = np.asarray(active, dtype=int)
        gamma_hat = sigma[np.ix_(idx_i, idx_a)] @ beta_a - a - b * p.mu[idx_i]
        gamma[idx_i] = 2.0 * gamma_hat
    s2l, s2u = risk_interval(beta, p.cov)
    return PortfolioSolution(
        beta=beta,
        lambda1=-2.0 * a,
        lambda2=2.0 * b,
        gamma=gamma,
        active_set=sorted(int(i) for i in active),
        sigma2_lower=s2l,
        sigma2_upper=s2u,
        objective=p.w * s2l + (1.0 - p.w) * s2u,
        method=method,
    )


def active_set_solve(p: ProblemSpec, tol: float = ACTIVITY_TOL) -> PortfolioSolution:
    """Direct active-set iteration; delegates to fallback_solve after 4n+16 rounds."""
    mu = p.mu
    n = p.n_assets
    _check_feasible(mu, p.r0)
    sigma = blend_covariance(p.cov, p.w)
    active = list(range(n))
    cap = 4 * n + 16
    for _ in range(cap):
        beta_a, a, b = _solve_on_active(sigma, mu, p.r0, active)
        if beta_a.min() < -tol:
            # drop the most negative weight, ties to the smallest index
            j = int(np.argmin(beta_a))
            active.pop(j)
            continue
        inactive = sorted(set(range(n)) - set(active))
        if inactive:
            idx_i = np.asarray(inactive, dtype=int)
            idx_a = np.asarray(active, dtype=int)
            gamma_hat = sigma[np.ix_(idx_i, idx_a)] @ beta_a - a - b * mu[idx_i]
            viol = np.nonzero(gamma_hat < -tol)[0]
            if viol.size:
                active = sorted(active + [inactive[int(viol[0])]])
                continue
        if float(mu[np.asarray(active, dtype=int)] @ beta_a) < p.r0 - 10.0 * _feasibility_tol(p.r0):
            # degenerate block left the return floor violated; the iteration
            # cannot mend it, hand over to the fallback
            break
        return _package(p, sigma, active, beta_a, a, b, "active_set")
    return fallback_solve(p)


def kkt_residual(p: ProblemSpec, s: PortfolioSolution) -> float:
    """Worst violation across stationarity, feasibility, multiplier signs, and slackness."""
    sigma = blend_covariance(p.cov, p.w)
    beta = np.asarray(s.beta, dtype=float)
    gamma = np.asarray(s.gamma, dtype=float)
    station = 2.0 * sigma @ beta + s.lambda1 * np.ones(p.n_assets) - s.lambda2 * p.mu - gamma
    ret_slack = p.r0 - float(p.mu @ beta)
    terms = [
        float(np.abs(station).max()),
        abs(float(beta.sum()) - 1.0),
        max(0.0, ret_slack),
        max(0.0, float(-beta.min())),
        max(0.0, -s.lambda2),
        max(0.0, float(-gamma.min()) if gamma.size else 0.0),
        abs(s.lambda2 * ret_slack),
        float(np.abs(gamma * beta).max()) if gamma.size else 0.0,
    ]
    return float(max(terms))


def _project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, y.size + 1)
    rho = np.nonzero(u * k > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def _project_feasible(y: np.ndarray, mu: np.ndarray, r0: float) -> np.ndarray:
    """Projection onto the simplex intersected with mu'beta >= r0.

    If the plain simplex projection already satisfies the floor it is exact.
    Otherwise the halfspace multiplier s in proj_simplex(y + s*mu) is located
    by bisection; mu'proj_simplex(y + s*mu) is nondecreasing in s.
    """
    beta = _project_simplex(y)
    tol = _feasibility_tol(r0)
    if float(mu @ beta) >= r0 - tol:
        return beta
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if float(mu @ _project_simplex(y + hi * mu)) >= r0:
            break
        hi *= 2.0
    else:
        return _project_simplex(y + hi * mu)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if float(mu @ _project_simplex(y + mid * mu)) >= r0:
            hi = mid
        else:
            lo = mid
    return _project_simplex(y + hi * mu)


def _feasible_start(mu: np.ndarray, r0: float) -> np.ndarray:
    n = mu.size
    beta = np.full(n, 1.0 / n)
    got = float(mu @ beta)
    if got >= r0:
        return beta
    top = int(np.argmax(mu))
    denom = mu[top] - got
    if denom <= 0.0:
        return np.eye(n)[top]
    t = min(1.0, (r0 - got) / denom)
    return (1.0 - t) * beta + t * np.eye(n)[top]


def _lstsq_multipliers(
    p: ProblemSpec, sigma: np.ndarray, beta: np.ndarray
) -> tuple[float, float, np.ndarray]:
    """Best-fit Lagrangian multipliers for a feasible point, used only when
    the polish step cannot certify an exact reduced solution."""
    n = p.n_assets
    act = np.nonzero(beta > 1e-9)[0]
    grad = 2.0 * sigma @ beta
    binding = abs(float(p.mu @ beta) - p.r0) <= 1e-8 * max(1.0, abs(p.r0))
    if binding and act.size >= 2:
        A = np.stack([-np.ones(act.size), p.mu[act]], axis=1)
        sol, *_ = np.linalg.lstsq(A, grad[act], rcond=None)
        lam1, lam2 = float(sol[0]), max(0.0, float(sol[1]))
    else:
        lam1, lam2 = float(-grad[act].mean()) if act.size else 0.0, 0.0
    gamma = grad + lam1 * np.ones(n) - lam2 * p.mu
    gamma[act] = 0.0
    return lam1, lam2, gamma


def fallback_solve(
    p: ProblemSpec, max_iter: int = 1500, tol: float = ACTIVITY_TOL
) -> PortfolioSolution:
    """Projected-gradient descent with diminishing steps, then a KKT polish.

    The polish infers candidate active sets from the iterate, re-solves the
    reduced systems exactly, and keeps the candidate with the smallest KKT
    residual; the raw iterate with least-squares multipliers is the last
    resort.
    """
    mu = p.mu
    _check_feasible(mu, p.r0)
    sigma = blend_covariance(p.cov, p.w)
    lip = 2.0 * max(float(np.linalg.eigvalsh(sigma).max()), 1e-300)
    beta = _feasible_start(mu, p.r0)
    for k in range(max_iter):
        step = 1.0 / (lip * np.sqrt(k + 1.0))
        new = _project_feasible(beta - step * (2.0 * sigma @ beta), mu, p.r0)
        if np.abs(new - beta).max() < 1e-14 and k > 50:
            beta = new
            break
        beta = new

    best: PortfolioSolution | None = None
    best_res = np.inf
    for thresh in (1e-5, 1e-7, 1e-9):
        act = [int(i) for i in np.nonzero(beta > thresh)[0]]
        if not act:
            act = [int(np.argmax(beta))]
        try:
            beta_a, a, b = _solve_on_active(sigma, mu, p.r0, act)
        except ValueError:
            continue
        if beta_a.min() < -tol:
            continue
        cand = _package(p, sigma, act, beta_a, a, b, "fallback")
        res = kkt_residual(p, cand)
        if res < best_res:
            best, best_res = cand, res
    if best is not None and best_res <= 1e-8:
        return best
    lam1, lam2, gamma = _lstsq_multipliers(p, sigma, beta)
    s2l, s2u = risk_interval(beta, p.cov)
    raw = PortfolioSolution(
        beta=beta,
        lambda1=lam1,
        lambda2=lam2,
        gamma=gamma,
        active_set=[int(i) for i in np.nonzero(beta > 1e-9)[0]],
        sigma2_lower=s2l,
        sigma2_upper=s2u,
        objective=p.w * s2l + (1.0 - p.w) * s2u,
        method="fallback",
    )
    if best is not None and best.objective <= raw.objective + 1e-15:
        return best
    return raw
