"""Serialization of reports: atomic file writes, delimited tables, JSON.

Writers here are deterministic: identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import os
import tempfile

from .backtest import BacktestReport, ModelResult, compare_models

COMPARISON_HEADER = ["w", "cw_sle_muv", "sr_sle_muv", "md_sle_muv", "cw_mv", "sr_mv", "md_mv"]


def atomic_write_text(path: str, text: str) -> None:
    """Write-then-rename so a crashed run never leaves a partial file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_csv(header: list[str], rows: list[list]) -> str:
    """Minimal delimited rendering; floats via repr so reruns are byte-stable."""
    def cell(v: object) -> str:
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def format_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _model_payload(m: ModelResult) -> dict:
    return {
        "weights": [[float(x) for x in row] for row in m.weights],
        "returns": [float(x) for x in m.returns],
        "wealth": [float(x) for x in m.wealth],
        "cumulative_wealth": m.cumulative_wealth,
        "sharpe_ratio": m.sharpe,
        "max_drawdown": m.max_drawdown,
        "turnover_mean": m.turnover_mean,
        "turnover_std": m.turnover_std,
        "infeasible_days": list(m.infeasible_days),
    }


def backtest_payload(report: BacktestReport) -> dict:
    cfg = report.config
    return {
        "schema_version": 1,
        "config": {
            "window": cfg.window,
            "horizon": cfg.horizon,
            "w": cfg.w_list(),
            "r0_rule": cfg.r0_rule,
            "n1": cfg.block.n1,
            "n2": cfg.block.n2,
            "baseline": cfg.baseline,
        },
        "dates": list(report.dates),
        "assets": list(report.assets),
        "sle_muv": {repr(w): _model_payload(m) for w, m in report.sle.items()},
        "mv": _model_payload(report.baseline) if report.baseline is not None else None,
        "comparison": compare_models(report) if report.baseline is not None else None,
        "diagnostics": report.diagnostics,
    }


def comparison_csv(report: BacktestReport) -> str:
    rows = compare_models(report)
    return format_csv(
        COMPARISON_HEADER,
        [[r[k] for k in COMPARISON_HEADER] for r in rows],
    )


def wealth_paths_csv(report: BacktestReport, w: float) -> str:
    """date,wealth_sle,wealth_mv rows; the first row anchors wealth 1.0 on the
    last in-sample label."""
    m = report.sle[w]
    b = report.baseline
    header = ["date", "wealth_sle", "wealth_mv"] if b is not None else ["date", "wealth_sle"]
    dates = ["start"] + list(report.dates)
    rows = []
    for i, d in enumerate(dates):
        row: list = [d, float(m.wealth[i])]
        if b is not None:
            row.append(float(b.wealth[i]))
        rows.append(row)
    return format_csv(header, rows)
