"""Price and return panel handling.

Wide CSV in, numpy panels out. Dates are opaque ordered labels once loaded;
nothing here does calendar arithmetic.
"""

from __future__ import annotations

import datetime
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd


@dataclass
class PricePanel:
    """T x n panel of positive prices with ordered date labels."""

    dates: list[str]
    assets: list[str]
    prices: np.ndarray

    def __post_init__(self) -> None:
        self.prices = np.asarray(self.prices, dtype=float)
        if self.prices.ndim != 2:
            raise ValueError("prices must be a 2-d array")
        if self.prices.shape != (len(self.dates), len(self.assets)):
            raise ValueError("prices shape does not match dates/assets")

    @property
    def n_periods(self) -> int:
        return self.prices.shape[0]

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]


@dataclass
class ReturnPanel:
    """T x n panel of simple returns; every entry must exceed -1."""

    dates: list[str]
    assets: list[str]
    returns: np.ndarray

    def __post_init__(self) -> None:
        self.returns = np.asarray(self.returns, dtype=float)
        if self.returns.ndim != 2:
            raise ValueError("returns must be a 2-d array")
        if self.returns.shape != (len(self.dates), len(self.assets)):
            raise ValueError("returns shape does not match dates/assets")

    @property
    def n_periods(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]


def _parse_date(raw: object) -> Optional[datetime.date]:
    try:
        return datetime.date.fromisoformat(str(raw).strip())
    except ValueError:
        return None


def _clean_frame(df: pd.DataFrame, path: str, require_positive: bool) -> tuple[list[str], list[str], np.ndarray]:
    """Shared CSV cleaning: first column dates, the rest numeric columns.

    Rows with an unparseable date or any missing/non-numeric cell are dropped
    with a counted warning. Duplicate dates are an error. Rows come back
    sorted by date ascending.
    """
    if df.shape[1] < 2:
        raise ValueError(f"{path}: need a date column plus at least one asset column")
    assets = [str(c) for c in df.columns[1:]]
    dates = [_parse_date(v) for v in df.iloc[:, 0]]
    values = df.iloc[:, 1:].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)

    keep = np.array([d is not None for d in dates]) & ~np.isnan(values).any(axis=1)
    if require_positive:
        with np.errstate(invalid="ignore"):
            keep &= np.nan_to_num(values, nan=-1.0).min(axis=1) > 0.0
    dropped = int(len(dates) - keep.sum())
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} unusable row(s)", stacklevel=3)

    kept_dates = [d for d, k in zip(dates, keep) if k]
    values = values[keep]
    if len(set(kept_dates)) != len(kept_dates):
        raise ValueError(f"{path}: duplicate dates")
    order = np.argsort(np.array(kept_dates))
    values = values[order]
    sorted_dates = [kept_dates[i].isoformat() for i in order]
    return sorted_dates, assets, values


def load_prices(path: str) -> PricePanel:
    """Load a wide price CSV (header: date, then one column per asset).

    Rows with any missing or non-numeric cell, an unparseable date, or a
    non-positive price are dropped with a warning count. Fewer than 2 usable
    rows or duplicate dates raise ValueError.
    """
    try:
        df = pd.read_csv(path, dtype=str)
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise ValueError(f"{path}: empty file") from exc
    dates, assets, values = _clean_frame(df, str(path), require_positive=True)
    if len(dates) < 2:
        raise ValueError(f"{path}: fewer than 2 usable rows")
    return PricePanel(dates=dates, assets=assets, prices=values)


def prices_to_returns(panel: PricePanel) -> ReturnPanel:
    """Simple returns (P[t+1] - P[t]) / P[t], one fewer row than prices.

    Return rows keep the later of the two dates they span.
    """
    p = panel.prices
    if p.shape[0] < 2:
        raise ValueError("need at least 2 price rows")
    if (p <= 0).any():
        raise ValueError("prices must be strictly positive")
    rets = np.diff(p, axis=0) / p[:-1]
    return ReturnPanel(dates=list(panel.dates[1:]), assets=list(panel.assets), returns=rets)


def load_returns(path: str) -> ReturnPanel:
    """Load a wide return CSV with the same cleaning rules as load_prices.

    Any return at or below -1 is corrupt (implies non-positive wealth) and
    raises.
    """
    try:
        df = pd.read_csv(path, dtype=str)
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise ValueError(f"{path}: empty file") from exc
    dates, assets, values = _clean_frame(df, str(path), require_positive=False)
    if len(dates) < 1:
        raise ValueError(f"{path}: no usable rows")
    if (values <= -1.0).any():
        raise ValueError(f"{path}: returns at or below -1 are not valid")
    return ReturnPanel(dates=dates, assets=assets, returns=values)


def returns_csv_text(panel: ReturnPanel) -> str:
    """Wide CSV rendering of a ReturnPanel (header: date, then assets)."""
    df = pd.DataFrame(panel.returns, columns=panel.assets)
    df.insert(0, "date", panel.dates)
    return df.to_csv(index=False)


def save_returns(panel: ReturnPanel, path: str) -> None:
    """Write a ReturnPanel back to the wide CSV layout."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(returns_csv_text(panel))


@dataclass
class PanelReport:
    """Summary produced by validate_panel."""

    n_periods: int
    n_assets: int
    per_asset: list[dict] = field(default_factory=list)
    suspicious: list[tuple[str, str]] = field(default_factory=list)


def validate_panel(panel: ReturnPanel) -> PanelReport:
    """Per-asset observation count and range, plus |return| > 1 flags.

    An empty panel raises.
    """
    if panel.n_periods == 0 or panel.n_assets == 0:
        raise ValueError("empty return panel")
    report = PanelReport(n_periods=panel.n_periods, n_assets=panel.n_assets)
    for j, name in enumerate(panel.assets):
        col = panel.returns[:, j]
        report.per_asset.append(
            {
                "asset": name,
                "count": int(col.size),
                "min": float(col.min()),
                "max": float(col.max()),
            }
        )
        for t in np.nonzero(np.abs(col) > 1.0)[0]:
            report.suspicious.append((panel.dates[int(t)], name))
    return report
