"""CSV and JSON emission of trajectories and run summaries."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .integrator import TimeSeries
from .scenarios import RunSummary, _sanitize

SERIES_HEADER = ("t", "re_A", "im_A", "abs_A2", "re_rho", "im_rho", "rho33")


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def write_series(ts: TimeSeries, path: Path, mode: int = 0) -> Path:
    A = ts.fields[:, mode]
    rho = ts.rho[:, mode]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SERIES_HEADER)
        for row in zip(ts.times, A.real, A.imag, np.abs(A) ** 2, rho.real, rho.imag, ts.rho33):
            w.writerow([_g17(x) for x in row])
    return path


def write_rows(rows: list[dict], path: Path) -> Path:
    keys = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for r in rows:
            w.writerow([_g17(r[k]) if isinstance(r.get(k), (float, np.floating)) else r.get(k, "") for k in keys])
    return path


def write_summary(summary: RunSummary, path: Path) -> Path:
    doc = _sanitize(summary.payload())
    doc["summary_hash"] = summary.digest()
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def emit_outputs(summary: RunSummary, series: list[TimeSeries], cfg: ScenarioConfig, out_dir=None) -> list[Path]:
    """Write ``summary.json``, ``resolved.cfg`` and one CSV per trajectory/mode."""
    out = Path(out_dir or cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    written = [write_summary(summary, out / "summary.json")]
    (out / "resolved.cfg").write_text(cfg.to_text())
    written.append(out / "resolved.cfg")
    for i, ts in enumerate(series):
        n_modes = ts.fields.shape[1]
        if n_modes == 1:
            written.append(write_series(ts, out / f"series_{i:03d}.csv"))
        else:
            for j in range(n_modes):
                written.append(write_series(ts, out / f"series_{i:03d}_mode{j}.csv", j))
    if summary.scenario == "stability":
        written.append(write_rows(summary.records, out / "stability_map.csv"))
        if summary.checks.get("contour"):
            written.append(write_rows(summary.checks["contour"], out / "threshold_contour.csv"))
    return written
