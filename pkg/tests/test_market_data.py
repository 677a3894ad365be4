import numpy as np
import pytest

from slemuv import (
    PricePanel,
    ReturnPanel,
    load_prices,
    load_returns,
    prices_to_returns,
    save_returns,
    validate_panel,
)


def write(path, text):
    path.write_text(text)
    return str(path)


def test_prices_to_returns_hand_values():
    panel = PricePanel(dates=["2020-01-01", "2020-01-02", "2020-01-03"], assets=["A"],
                       prices=np.array([[100.0], [110.0], [99.0]]))
    rets = prices_to_returns(panel)
    assert np.allclose(rets.returns[:, 0], [0.10, -0.10])
    assert rets.dates == ["2020-01-02", "2020-01-03"]
    assert rets.n_periods == panel.n_periods - 1


def test_returns_compound_back_to_prices():
    rng = np.random.default_rng(7)
    for _ in range(50):
        T, n = rng.integers(2, 40), rng.integers(1, 5)
        prices = np.exp(rng.normal(0, 0.1, (T, n)).cumsum(axis=0)) * 100
        panel = PricePanel(dates=[f"2020-01-{d + 1:02d}" for d in range(T)],
                           assets=[f"A{j}" for j in range(n)], prices=prices)
        rets = prices_to_returns(panel)
        rebuilt = prices[0] * np.cumprod(1.0 + rets.returns, axis=0)
        assert np.abs(rebuilt - prices[1:]).max() <= 1e-12 * np.abs(prices).max()
        assert rets.n_periods == T - 1


def test_nonpositive_price_rejected():
    panel = PricePanel(dates=["2020-01-01", "2020-01-02"], assets=["A"],
                       prices=np.array([[1.0], [2.0]]))
    panel.prices[0, 0] = -1.0
    with pytest.raises(ValueError):
        prices_to_returns(panel)


def test_load_prices_roundtrip_and_sorting(tmp_path):
    path = write(tmp_path / "p.csv",
                 "date,A,B\n2020-01-03,3,30\n2020-01-01,1,10\n2020-01-02,2,20\n")
    panel = load_prices(path)
    assert panel.dates == ["2020-01-01", "2020-01-02", "2020-01-03"]
    assert panel.assets == ["A", "B"]
    assert np.allclose(panel.prices[:, 0], [1, 2, 3])


def test_load_prices_drops_bad_rows_with_warning(tmp_path):
    path = write(tmp_path / "p.csv",
                 "date,A\n2020-01-01,1\n2020-01-02,\n2020-01-03,x\nnot-a-date,4\n2020-01-05,-2\n2020-01-06,2\n")
    with pytest.warns(UserWarning, match="dropped 4"):
        panel = load_prices(path)
    assert panel.n_periods == 2
    assert panel.dates == ["2020-01-01", "2020-01-06"]


def test_load_prices_duplicate_dates(tmp_path):
    path = write(tmp_path / "p.csv", "date,A\n2020-01-01,1\n2020-01-01,2\n")
    with pytest.raises(ValueError, match="duplicate"):
        load_prices(path)


def test_load_prices_too_short(tmp_path):
    path = write(tmp_path / "p.csv", "date,A\n2020-01-01,1\n")
    with pytest.raises(ValueError, match="fewer than 2"):
        load_prices(path)


def test_load_prices_unreadable(tmp_path):
    with pytest.raises(ValueError):
        load_prices(str(tmp_path / "missing.csv"))


def test_single_asset_file_is_accepted(tmp_path):
    path = write(tmp_path / "p.csv", "date,SOLO\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n")
    panel = load_prices(path)
    assert panel.n_assets == 1
    assert panel.n_periods == 3


def test_returns_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    panel = ReturnPanel(dates=["2020-01-01", "2020-01-02", "2020-01-03"],
                        assets=["A", "B"], returns=rng.normal(0, 0.01, (3, 2)))
    out = tmp_path / "r.csv"
    save_returns(panel, str(out))
    back = load_returns(str(out))
    assert back.assets == panel.assets
    assert back.dates == panel.dates
    assert np.abs(back.returns - panel.returns).max() <= 1e-15


def test_load_returns_rejects_below_minus_one(tmp_path):
    path = write(tmp_path / "r.csv", "date,A\n2020-01-01,-1.5\n")
    with pytest.raises(ValueError, match="-1"):
        load_returns(path)


def test_validate_panel_flags_and_errors():
    panel = ReturnPanel(dates=["2020-01-01", "2020-01-02"], assets=["A", "B"],
                        returns=np.array([[0.01, 1.5], [-0.02, 0.0]]))
    report = validate_panel(panel)
    assert report.n_periods == 2 and report.n_assets == 2
    assert report.per_asset[0]["min"] == -0.02
    assert report.suspicious == [("2020-01-01", "B")]
    with pytest.raises(ValueError):
        validate_panel(ReturnPanel(dates=[], assets=[], returns=np.empty((0, 0))))
