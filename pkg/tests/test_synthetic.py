import numpy as np
import pytest

from slemuv import (
    RegimeSpec,
    four_asset_reference_specs,
    generate_panel,
    generate_series,
)
from slemuv.synthetic import _regime_variances

SPEC = RegimeSpec(mu=0.0, var_lower=1.0, var_upper=4.0, K=4, n0=50, seed=42)


def test_series_length_and_determinism():
    x = generate_series(SPEC)
    assert x.shape == (200,)
    assert np.array_equal(x, generate_series(SPEC))


def test_seed_42_golden_values():
    x = generate_series(SPEC)
    assert x[:3] == pytest.approx(
        [0.7504511958064572, 0.9405647163912139, -1.9510351886538364], abs=1e-15)
    assert float(x.sum()) == pytest.approx(-9.499875047143547, abs=1e-10)


def test_regime_variances_pin_endpoints():
    rng = np.random.default_rng(0)
    v = _regime_variances(SPEC, rng)
    assert v[0] == 1.0
    assert v[-1] == 4.0
    assert all(1.0 <= vi <= 4.0 for vi in v)
    assert len(v) == 4


def test_k1_uses_lower_variance_only():
    spec = RegimeSpec(mu=0.5, var_lower=2.0, var_upper=9.0, K=1, n0=1000, seed=3)
    x = generate_series(spec)
    assert x.shape == (1000,)
    assert np.var(x, ddof=1) == pytest.approx(2.0, rel=0.2)
    assert np.mean(x) == pytest.approx(0.5, abs=0.2)


def test_regime_sample_variances_track_assignment():
    spec = RegimeSpec(mu=0.0, var_lower=1.0, var_upper=4.0, K=2, n0=4000, seed=9)
    x = generate_series(spec)
    v1 = np.var(x[:4000], ddof=1)
    v2 = np.var(x[4000:], ddof=1)
    assert v1 == pytest.approx(1.0, rel=0.1)
    assert v2 == pytest.approx(4.0, rel=0.1)


def test_spec_validation():
    with pytest.raises(ValueError):
        RegimeSpec(mu=0.0, var_lower=0.0, var_upper=1.0, K=2, n0=10)
    with pytest.raises(ValueError):
        RegimeSpec(mu=0.0, var_lower=2.0, var_upper=1.0, K=2, n0=10)
    with pytest.raises(ValueError):
        RegimeSpec(mu=0.0, var_lower=1.0, var_upper=4.0, K=0, n0=10)
    with pytest.raises(ValueError):
        RegimeSpec(mu=0.0, var_lower=1.0, var_upper=4.0, K=2, n0=0)
    # equal bounds are fine when a single regime is requested
    RegimeSpec(mu=0.0, var_lower=1.0, var_upper=1.0, K=1, n0=10)


def test_panel_layout_and_dates():
    specs = [RegimeSpec(mu=0.0, var_lower=1.0, var_upper=2.0, K=2, n0=5),
             RegimeSpec(mu=0.1, var_lower=1.0, var_upper=3.0, K=2, n0=5)]
    panel = generate_panel(specs, master_seed=7)
    assert panel.returns.shape == (10, 2)
    assert panel.assets == ["X(1)", "X(2)"]
    assert panel.dates[0] == "2000-01-03"
    assert panel.dates[1] == "2000-01-04"
    assert len(set(panel.dates)) == 10


def test_panel_deterministic_and_seed_sensitive():
    specs = four_asset_reference_specs(K=2, n0=30)
    a = generate_panel(specs, master_seed=1)
    b = generate_panel(specs, master_seed=1)
    c = generate_panel(specs, master_seed=2)
    assert np.array_equal(a.returns, b.returns)
    assert not np.array_equal(a.returns, c.returns)


def test_panel_columns_are_independent_streams():
    specs = [RegimeSpec(mu=0.0, var_lower=1.0, var_upper=2.0, K=2, n0=100)] * 2
    panel = generate_panel(specs, master_seed=5)
    r = np.corrcoef(panel.returns.T)[0, 1]
    assert abs(r) < 0.25


def test_panel_requires_equal_lengths():
    specs = [RegimeSpec(mu=0.0, var_lower=1.0, var_upper=2.0, K=2, n0=5),
             RegimeSpec(mu=0.0, var_lower=1.0, var_upper=2.0, K=2, n0=6)]
    with pytest.raises(ValueError, match="length"):
        generate_panel(specs, master_seed=0)
    with pytest.raises(ValueError):
        generate_panel([], master_seed=0)


def test_reference_specs_shape():
    specs = four_asset_reference_specs()
    assert len(specs) == 4
    for s in specs:
        assert s.K == 4 and s.n0 == 250
        assert 0.0 < s.var_lower < s.var_upper
    mus = [s.mu for s in specs]
    assert mus[0] == pytest.approx(0.0011)
    assert len(set(mus)) == 4
