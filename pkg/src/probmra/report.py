"""Report assembly and emitters (JSON documents, CSV curves, plot data).

Reports are plain dicts serialized with sorted keys; floats are written with
repr, Fractions as "p/q" strings, so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import os
from fractions import Fraction
from pathlib import Path

import numpy as np

from .diagnostics import (ConditionCReport, DyadicLimitReport, TightnessReport, Verdict,
                          xi_key)
from .filters import filter_spec, load_filter
from .measures import phi_hat_sq

TAIL_HEADER = ["xi", "n", "tail_sup_finite", "tail_limit"]
PHI_HEADER = ["theta", "phi_hat_sq"]
POINT_HEADER_PREFIX = "x"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def diagnostics_report(filt, config: dict, tightness: TightnessReport = None,
                       condition_c: ConditionCReport = None, dyadic: DyadicLimitReport = None,
                       verdict: Verdict = None) -> dict:
    """Merge scan results into {filter, config, per_xi, aggregate}."""
    per = {}
    order = []

    def row(xi):
        key = xi_key(xi)
        if key not in per:
            per[key] = {"xi": key}
            order.append(key)
        return per[key]

    agg = {}
    if tightness is not None:
        for p in tightness.points:
            r = row(p.xi)
            d = p.to_dict()
            r.update({k: d[k] for k in ("probe", "tail_curve", "limit_tail", "n_eps",
                                        "retained", "verdict_b")})
            r["residual"] = 1.0 - d["retained"]
        agg["verdict_b"] = tightness.verdict
        agg["failing_points"] = tightness.failing
    if condition_c is not None:
        for p in condition_c.points:
            d = p.to_dict()
            r = row(p.xi)
            r.update({k: d[k] for k in ("witness_k", "witness_mass", "mass_at_zero",
                                        "witness_interval")})
        agg.update(condition_c.aggregate())
    if dyadic is not None:
        for p in dyadic.points:
            d = p.to_dict()
            row(p.xi)["dyadic_limits"] = {"k": d["k"], "final": d["final"],
                                          "converged": d["converged"]}
        agg.update({"L_plus": dyadic.L_plus, "L_minus": dyadic.L_minus})
    if verdict is not None:
        agg.update({"b_ok": verdict.b_ok, "c_ok": verdict.c_ok, "low_pass": verdict.low_pass,
                    "exceptional_points": verdict.exceptional_points,
                    "caveats": verdict.caveats})
        agg["verdict"] = verdict.low_pass
    elif tightness is not None:
        agg["verdict"] = tightness.verdict
    return {"filter": filter_spec(filt), "config": config,
            "per_xi": [per[k] for k in order], "aggregate": agg}


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def tail_rows(report: dict):
    out = []
    for p in report.get("per_xi", []):
        fin = p.get("tail_curve", [])
        lim = p.get("limit_tail", [])
        for n in range(1, max(len(fin), len(lim)) + 1):
            out.append([p["xi"], n, fin[n - 1] if n <= len(fin) else "",
                        lim[n - 1] if n <= len(lim) else ""])
    return out


def phi_rows(report: dict, lo: float = -4.0, hi: float = 4.0, count: int = 801, J_max: int = 64):
    spec = report.get("filter")
    if not spec or "kind" not in spec:
        return []
    filt = load_filter(spec["kind"]) if "samples" not in spec else None
    if filt is None:
        from .filters import sampled
        filt = sampled(spec["samples"])
    theta = np.linspace(lo, hi, count)
    vals = phi_hat_sq(filt, theta, J_max)
    return [[float(t), float(v)] for t, v in zip(theta, vals)]


def point_rows(report: dict):
    return [list(map(float, p)) for p in report.get("points", [])]


def emit_plot_data(report: dict, out_dir) -> list:
    """Write tail_curves.csv, phi_hat.csv and tile_points.csv into out_dir.

    Column order is fixed: tail_curves (xi, n, tail_sup_finite, tail_limit),
    phi_hat (theta, phi_hat_sq) on [-4, 4], tile_points (x0, x1, ...).  An
    empty report gives files with headers only.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = int(report.get("dimension", 1) or 1)
    files = {
        "tail_curves.csv": rows_to_csv(TAIL_HEADER, tail_rows(report)),
        "phi_hat.csv": rows_to_csv(PHI_HEADER, phi_rows(report)),
        "tile_points.csv": rows_to_csv([f"{POINT_HEADER_PREFIX}{i}" for i in range(d)],
                                       point_rows(report)),
    }
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        written.append(str(path))
    return written


def default_output_dir():
    return os.environ.get("PROBMRA_OUTPUT_DIR")
