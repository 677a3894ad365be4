import json

import numpy as np
import pytest

from slemuv import (
    BlockConfig,
    GNormalParams,
    ReturnPanel,
    UncertainCovariance,
    build_uncertain_covariance,
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
from slemuv.estimation import block_means, demean_miniblocks


def panel_of(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T, n = X.shape
    return ReturnPanel(dates=[f"2020-{1 + t // 28:02d}-{1 + t % 28:02d}" for t in range(T)],
                       assets=[f"A{j}" for j in range(n)], returns=X)


def test_block_means_step_series():
    x = np.array([0.0, 0, 0, 1, 1, 1])
    means = block_means(x, 3)
    assert np.allclose(means, [0, 1 / 3, 2 / 3, 1])
    mu, lo, hi = estimate_mean_bounds(x, BlockConfig(n1=3, n2=2))
    assert lo == 0.0 and hi == 1.0
    assert mu == pytest.approx(0.5)
    assert lo <= mu <= hi


def test_lower_variance_linear_series():
    x = np.arange(1.0, 7.0)
    assert estimate_lower_variance(x, BlockConfig(n1=3, n2=2)) == pytest.approx(1.0)


def test_upper_variance_alternating_series():
    x = np.array([1.0, 3.0, 1.0, 3.0])
    cfg = BlockConfig(n1=2, n2=2)
    demeaned = demean_miniblocks(x, 2)
    assert np.allclose(demeaned, [-1, 1, -1, 1])
    assert estimate_upper_variance(x, cfg) == pytest.approx(2.0)


def test_demean_partial_tail_chunk():
    x = np.array([1.0, 3.0, 10.0])
    out = demean_miniblocks(x, 2)
    assert np.allclose(out, [-1.0, 1.0, 0.0])
    assert np.allclose(demean_miniblocks(x, 1), 0.0)


def test_variance_bounds_vanish_on_constant_series():
    x = np.full(10, 0.37)
    cfg = BlockConfig(n1=4, n2=2)
    assert estimate_lower_variance(x, cfg) == 0.0
    assert estimate_upper_variance(x, cfg) == 0.0


def test_mean_envelope_warning():
    # full-sample mean 10/3 sits below every overlapping pair mean containing
    # the spike except at the edges; blocks [0,10] and [10,0] both average 5
    x = np.array([0.0, 10.0, 0.0])
    cfg = BlockConfig(n1=2, n2=1)
    with pytest.warns(UserWarning, match="mean"):
        estimate_mean_bounds(x, cfg)


def test_lower_variance_never_negative():
    rng = np.random.default_rng(5)
    for _ in range(200):
        x = rng.normal(0, 1e-8, 30)
        assert estimate_lower_variance(x, BlockConfig(n1=5, n2=2)) >= 0.0


def test_bound_ordering_random():
    rng = np.random.default_rng(11)
    cfg = BlockConfig(n1=10, n2=5)
    for _ in range(50):
        x = rng.standard_normal(80)
        mu, lo, hi = estimate_mean_bounds(x, cfg)
        assert lo <= hi
        assert estimate_lower_variance(x, cfg) >= 0.0
        assert estimate_upper_variance(x, cfg) >= 0.0


def test_iid_bounds_tighten_with_longer_blocks():
    rng = np.random.default_rng(23)
    x = rng.standard_normal(5000)
    _, lo_s, hi_s = estimate_mean_bounds(x, BlockConfig(n1=20, n2=10))
    _, lo_l, hi_l = estimate_mean_bounds(x, BlockConfig(n1=500, n2=10))
    assert hi_l - lo_l < hi_s - lo_s


def test_cross_bounds_sign_symmetric():
    rng = np.random.default_rng(2)
    cfg = BlockConfig(n1=12, n2=6)
    x = rng.standard_normal(100)
    y = rng.standard_normal(100)
    mx = float(x.mean())
    my = float(y.mean())
    lo, hi = estimate_cross_bounds(x, y, mx, my, cfg)
    assert lo <= hi
    lo2, hi2 = estimate_cross_bounds(x, -y, mx, -my, cfg)
    assert lo2 == pytest.approx(-hi, abs=1e-12)
    assert hi2 == pytest.approx(-lo, abs=1e-12)


def test_cross_bounds_diagonal_consistency():
    # estimating an asset against itself must bracket the plain variance idea:
    # block means of x^2 minus mu^2
    x = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
    cfg = BlockConfig(n1=3, n2=2)
    lo, hi = estimate_cross_bounds(x, x, 0.5, 0.5, cfg)
    assert lo == pytest.approx(0.0 - 0.25)
    assert hi == pytest.approx(1.0 - 0.25)


def test_build_uncertain_covariance_shapes_and_symmetry():
    rng = np.random.default_rng(9)
    panel = panel_of(rng.normal(0, 0.01, (400, 3)))
    cfg = BlockConfig(n1=60, n2=20)
    params, cov = build_uncertain_covariance(panel, cfg)
    assert len(params) == 3
    assert cov.v_lower.shape == (3, 3)
    assert np.array_equal(cov.v_lower, cov.v_lower.T)
    assert np.array_equal(cov.v_upper, cov.v_upper.T)
    assert not cov.repaired
    for j, p in enumerate(params):
        assert p.var_lower == cov.v_lower[j, j]
        assert p.var_upper == cov.v_upper[j, j]
        assert p.mu_lower <= p.mu <= p.mu_upper
        assert 0.0 <= p.var_lower <= p.var_upper


def test_variance_order_warning_on_trending_series():
    # miniblock demeaning strips a linear trend, so the rolling estimate falls
    # below the raw block variances and the ordering check must complain
    x = np.arange(12.0)
    cfg = BlockConfig(n1=6, n2=2)
    assert estimate_lower_variance(x, cfg) > estimate_upper_variance(x, cfg)
    with pytest.warns(UserWarning, match="var_lower"):
        build_uncertain_covariance(panel_of(x), cfg)


def test_block_config_validation():
    with pytest.raises(ValueError):
        BlockConfig(n1=1, n2=1)
    with pytest.raises(ValueError):
        BlockConfig(n1=10, n2=0)
    with pytest.raises(ValueError):
        BlockConfig(n1=10, n2=11)
    with pytest.raises(ValueError):
        BlockConfig(n1=10, n2=5).check_length(9)
    BlockConfig(n1=10, n2=5).check_length(10)


def test_psd_check_hand_matrices():
    assert psd_check(np.array([[1.0, 1.0], [1.0, 1.0]])) == pytest.approx(0.0, abs=1e-12)
    assert psd_check(np.array([[1.0, 2.0], [2.0, 1.0]])) == pytest.approx(-1.0)
    assert psd_check(np.eye(3)) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="symmetric"):
        psd_check(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="square"):
        psd_check(np.zeros((2, 3)))


def test_psd_repair_hand_values():
    M = np.array([[1.0, 1.0], [1.0, 1.0]])
    R = psd_repair(M, eps_scale=1e-6)
    # eigenvalue floor = 1e-6 * trace/2 = 1e-6; the zero eigenvalue lifts to it
    assert R[0, 0] == pytest.approx(1.0 + 5e-7, rel=1e-9)
    assert R[0, 1] == pytest.approx(1.0 - 5e-7, rel=1e-9)
    assert psd_check(R) > 0


def test_psd_repair_diagonal_clip():
    M = np.diag([1.0, -0.5])
    R = psd_repair(M)
    # floor = 1e-8 * max(trace/n, 1e-12) with trace 0.5
    assert R[1, 1] == pytest.approx(2.5e-9, rel=1e-9)
    assert R[0, 0] == pytest.approx(1.0)
    assert R[0, 1] == 0.0


def test_psd_repair_idempotent_and_identity_on_pd():
    rng = np.random.default_rng(17)
    for _ in range(40):
        n = int(rng.integers(1, 6))
        A = rng.standard_normal((n, n))
        M = A @ A.T + 0.1 * np.eye(n)
        assert np.array_equal(psd_repair(M), M)
        B = rng.standard_normal((n, n))
        S = (B + B.T) / 2
        R1 = psd_repair(S)
        R2 = psd_repair(R1)
        assert np.abs(R2 - R1).max() <= 1e-12
        assert psd_check(R1) > 0


def test_ensure_positive_definite_sets_flag():
    cov = UncertainCovariance(v_lower=np.array([[1.0, 2.0], [2.0, 1.0]]),
                              v_upper=np.eye(2) * 3)
    fixed = ensure_positive_definite(cov)
    assert fixed.repaired
    assert psd_check(fixed.v_lower) > 0
    assert np.array_equal(fixed.v_upper, cov.v_upper)
    clean = UncertainCovariance(v_lower=np.eye(2), v_upper=np.eye(2) * 2)
    assert not ensure_positive_definite(clean).repaired


def test_params_json_roundtrip(tmp_path):
    params = [GNormalParams(mu=0.001, mu_lower=0.0, mu_upper=0.002,
                            var_lower=0.0001, var_upper=0.0004)]
    cov = UncertainCovariance(v_lower=np.array([[0.0001]]),
                              v_upper=np.array([[0.0004]]), repaired=True)
    path = tmp_path / "params.json"
    save_params(str(path), ["X"], params, cov, BlockConfig(n1=6, n2=3))
    payload = json.loads(path.read_text())
    assert payload["schema_version"] == 1
    assert payload["assets"] == ["X"]
    assert payload["block"] == {"n1": 6, "n2": 3}
    assert payload["repaired"] is True
    assets, params2, cov2 = load_params(str(path))
    assert assets == ["X"]
    assert params2[0] == params[0]
    assert np.array_equal(cov2.v_lower, cov.v_lower)
    assert cov2.repaired


def test_load_params_rejects_unknown_schema(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(ValueError, match="schema_version"):
        load_params(str(path))


def test_uncertain_covariance_validation():
    with pytest.raises(ValueError):
        UncertainCovariance(v_lower=np.zeros((2, 2)), v_upper=np.zeros((3, 3)))
    with pytest.raises(ValueError):
        UncertainCovariance(v_lower=np.zeros(2), v_upper=np.zeros(2))
