"""Figure rendering for the CLI report paths.

Everything draws through the Agg backend to plain PNG files; PNG metadata
that varies between runs is stripped so reruns stay byte-stable.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .backtest import BacktestReport
from .frontier import FrontierPoint

_SAVE_KW = {"dpi": 150, "metadata": {"Software": None}}


def save_frontier_figure(points: list[FrontierPoint], path: str) -> None:
    """Risk-interval curve traced over the w grid, colored by w."""
    x = np.array([p.sigma2_lower for p in points])
    y = np.array([p.sigma2_upper for p in points])
    w = np.array([p.w for p in points])
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(x, y, color="0.65", lw=1.0, zorder=1)
    sc = ax.scatter(x, y, c=w, cmap="viridis", s=18, zorder=2)
    fig.colorbar(sc, ax=ax, label="risk factor w")
    ax.set_xlabel("lower portfolio variance")
    ax.set_ylabel("upper portfolio variance")
    ax.set_title("risk-interval frontier")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_wealth_figure(report: BacktestReport, path: str) -> None:
    """Out-of-sample wealth paths, one line per w plus the baseline."""
    fig, ax = plt.subplots(figsize=(7.2, 4.8))
    steps = None
    for w in sorted(report.sle):
        wealth = report.sle[w].wealth
        steps = np.arange(wealth.size)
        ax.plot(steps, wealth, lw=1.2, label=f"SLE-MUV (w={w:g})")
    if report.baseline is not None:
        wealth = report.baseline.wealth
        ax.plot(np.arange(wealth.size), wealth, "k--", lw=1.2, label="MV baseline")
    ax.set_xlabel("out-of-sample day")
    ax.set_ylabel("cumulative wealth")
    ax.set_title("rolling backtest wealth")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_metrics_figure(rows: list[dict], path: str) -> None:
    """Cumulative wealth and Sharpe ratio against w, baseline as dashed lines."""
    ws = [r["w"] for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.0))
    axes[0].plot(ws, [r["cw_sle_muv"] for r in rows], "o-", lw=1.2)
    axes[0].axhline(rows[0]["cw_mv"], color="k", ls="--", lw=1.0, label="MV baseline")
    axes[0].set_xlabel("risk factor w")
    axes[0].set_ylabel("cumulative wealth")
    axes[0].legend(fontsize=8)
    axes[1].plot(ws, [r["sr_sle_muv"] for r in rows], "o-", lw=1.2)
    axes[1].axhline(rows[0]["sr_mv"], color="k", ls="--", lw=1.0, label="MV baseline")
    axes[1].set_xlabel("risk factor w")
    axes[1].set_ylabel("Sharpe ratio")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
