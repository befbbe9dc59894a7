"""Command-line front end.

Every subcommand writes one report (JSON by default, CSV where a table makes
sense) that embeds the effective configuration.  Output goes to --out, or to
$PROBMRA_OUTPUT_DIR/<subcommand>.<ext> when that variable is set, or stdout.

Exit codes: 0 when the computation finished (whatever the verdict), 2 for
input errors, 3 when a size budget is exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .diagnostics import (ScanConfig, condition_c_scan, dyadic_limit_scan, orthonormality_check,
                          theorem1_verdict, tightness_scan, uniform_grid, xi_key)
from .errors import BudgetError
from .filters import builtin, filter_spec, load_filter, validate_qmf
from .lattice import (DIGIT_BUDGET, analyze_matrix, build_digit_system, expand, overlap_estimate,
                      reconstruct, sample_tile, tile_ball_radius, tile_measure_estimate)
from .measures import MAX_TABLE_LEVEL, p_table
from .multidim import (QuincunxCosineFilter, SeparableFilter, m_tilde, multidim_qmf_check,
                       multidim_tightness)
from .report import default_output_dir, diagnostics_report, dumps, emit_plot_data, rows_to_csv

EXIT_OK, EXIT_INPUT, EXIT_BUDGET = 0, 2, 3


@dataclass
class RunConfig:
    command: str
    filter: Optional[str] = None
    grid: int = 1024
    probes: list = field(default_factory=list)
    N_max: int = 12
    K: int = 2047
    J_max: int = 64
    eps: list = field(default_factory=lambda: [1e-2, 1e-4])
    seed: int = 0
    out: Optional[str] = None
    format: str = "json"
    threads: int = 1
    options: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.grid < 1:
            raise ValueError("--grid must be >= 1")
        for name in ("N_max", "K", "J_max"):
            if getattr(self, name) < 1:
                raise ValueError(f"--{name.replace('_', '-')} must be positive")
        if self.N_max > MAX_TABLE_LEVEL:
            raise BudgetError(f"--N-max {self.N_max} exceeds the table cap {MAX_TABLE_LEVEL}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probes"] = [str(p) for p in self.probes]
        d.pop("out")
        return d


def parse_xi(text: str) -> Fraction:
    """'1/3' or '0.3333333333' as an exact rational."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse xi value {text!r}") from exc


def parse_eps(text: str) -> list:
    vals = [float(t) for t in text.split(",") if t.strip()]
    if not vals or any(not 0 < v < 1 for v in vals):
        raise ValueError("--eps values must lie in (0, 1)")
    return vals


def parse_matrix(text: str):
    try:
        m = json.loads(text)
    except json.JSONDecodeError:
        path = Path(text)
        if not path.is_file():
            raise ValueError(f"--matrix is neither JSON nor a file: {text!r}")
        m = json.loads(path.read_text())
    if isinstance(m, (int, float)):
        m = [[m]]
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        raise ValueError("--matrix must be a row-major JSON array of integer rows")
    if any(not isinstance(v, int) for r in m for v in r):
        raise ValueError("--matrix entries must be integers")
    return m


def parse_vector(text: str, d: int, exact: bool = False):
    v = json.loads(text)
    if not isinstance(v, list):
        v = [v]
    if len(v) != d:
        raise ValueError(f"vector must have {d} entries")
    return [parse_xi(str(t)) if exact else t for t in v]


def lattice_filter(spec: str, d: int):
    """'quincunx', 'separable:haar,d4' or a scalar name repeated on every axis."""
    s = spec.strip().lower()
    if s in ("quincunx", "quincunx-cosine"):
        if d != 2:
            raise ValueError("the quincunx cosine filter is 2-dimensional")
        return QuincunxCosineFilter()
    if s.startswith("separable:"):
        names = [t for t in s.split(":", 1)[1].split(",") if t]
        if len(names) != d:
            raise ValueError(f"separable filter needs {d} factors")
        return SeparableFilter(tuple(builtin(n) for n in names))
    return SeparableFilter(tuple(builtin(s) for _ in range(d)))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _scan_config(cfg: RunConfig) -> ScanConfig:
    o = cfg.options
    return ScanConfig(grid_n=cfg.grid, probes=tuple(cfg.probes), N_max=cfg.N_max, K=cfg.K,
                      J_max=cfg.J_max, eps=tuple(cfg.eps), tol=o.get("tol", 1e-6),
                      floor=o.get("floor", 1e-3), margin=o.get("margin", 0.05),
                      k_lo=o.get("k_lo", -8), k_hi=o.get("k_hi", 7), j_max=o.get("j_max", 40),
                      threads=cfg.threads)


def cmd_validate(cfg, filt):
    grid = cfg.options.get("qmf_grid", 4096)
    out = validate_qmf(filt, grid, cfg.options.get("qmf_tol", 1e-12))
    return {"filter": filter_spec(filt), "config": cfg.to_dict(), "validation": out.to_dict()}


def cmd_tightness(cfg, filt):
    sc = _scan_config(cfg)
    sc.validate()
    rep = tightness_scan(filt, uniform_grid(cfg.grid), sc.N_max, sc.eps, sc.K, sc.J_max,
                         sc.probes, sc.margin, threads=sc.threads)
    return diagnostics_report(filt, cfg.to_dict(), tightness=rep)


def cmd_condition_c(cfg, filt):
    sc = _scan_config(cfg)
    rep = condition_c_scan(filt, uniform_grid(cfg.grid) + list(sc.probes), sc.K, sc.J_max,
                           sc.floor, threads=sc.threads)
    doc = diagnostics_report(filt, cfg.to_dict(), condition_c=rep)
    res = dict((xi_key(x), r) for x, r in orthonormality_check(filt, [p.xi for p in rep.points],
                                                               sc.K, sc.J_max))
    for row in doc["per_xi"]:
        row["residual"] = res[row["xi"]]
    return doc


def cmd_dyadic(cfg, filt):
    sc = _scan_config(cfg)
    sc.validate()
    rep = dyadic_limit_scan(filt, uniform_grid(cfg.grid) + list(sc.probes), (sc.k_lo, sc.k_hi),
                            sc.j_max, sc.tol, sc.J_max, sc.threads)
    return diagnostics_report(filt, cfg.to_dict(), dyadic=rep)


def cmd_verdict(cfg, filt):
    v = theorem1_verdict(filt, _scan_config(cfg))
    return diagnostics_report(filt, cfg.to_dict(), v.tightness, v.condition_c, v.dyadic, v)


def cmd_table(cfg, filt):
    xi = cfg.options["xi"]
    t = p_table(filt, xi, cfg.N_max)
    return {"filter": filter_spec(filt), "config": cfg.to_dict(), "xi": xi_key(xi),
            "N": t.N, "total": t.total(),
            "rows": [[k, v] for k, v in t.to_rows()]}


def cmd_plot_data(cfg, filt):
    src = cfg.options.get("report")
    if src:
        doc = json.loads(Path(src).read_text())
    else:
        doc = cmd_tightness(cfg, filt)
    outdir = cfg.out or default_output_dir() or "."
    files = emit_plot_data(doc, outdir)
    return {"config": cfg.to_dict(), "files": files}


def _system(cfg):
    return build_digit_system(parse_matrix(cfg.options["matrix"]))


def cmd_matrix(cfg, _):
    A = analyze_matrix(parse_matrix(cfg.options["matrix"]))
    doc = {"config": cfg.to_dict(), "matrix": A.to_dict()}
    if A.expansive and A.similarity:
        from .lattice import choose_power
        doc["power"] = choose_power(A)
    return doc


def cmd_digits(cfg, _):
    sys_ = _system(cfg)
    return {"config": cfg.to_dict(), "system": sys_.to_dict(), "count": sys_.q}


def cmd_expand(cfg, _):
    sys_ = _system(cfg)
    k = parse_vector(cfg.options["k"], sys_.B.d)
    e = expand(sys_, k)
    return {"config": cfg.to_dict(), "k": list(e.k), "digit_indices": list(e.digit_indices),
            "digits": [list(sys_.digits[i]) for i in e.digit_indices], "n": e.n,
            "reconstructed": list(reconstruct(sys_, e.digit_indices))}


def _tile(cfg):
    sys_ = _system(cfg)
    o = cfg.options
    return sys_, sample_tile(sys_, o["depth"], o["mode"], o["count"], cfg.seed,
                             o.get("budget", DIGIT_BUDGET))


def cmd_tile(cfg, _):
    sys_, t = _tile(cfg)
    return {"config": cfg.to_dict(), "system": sys_.to_dict(), "dimension": sys_.B.d,
            "ball_radius": tile_ball_radius(sys_), "count": len(t.points),
            "points": t.points.tolist()}


def cmd_tile_measure(cfg, _):
    sys_, t = _tile(cfg)
    est = tile_measure_estimate(t, cfg.options.get("cell"))
    doc = {"config": cfg.to_dict(), "system": sys_.to_dict(), "measure": est.to_dict(),
           "ball_radius": tile_ball_radius(sys_),
           "max_norm": float(np.max(np.linalg.norm(t.points, axis=1)))}
    d = sys_.B.d
    shifts = [list(e) for e in np.eye(d, dtype=int)] + ([[1] * d] if d > 1 else [])
    doc["overlaps"] = [overlap_estimate(t, s, cfg.options.get("cell")) for s in shifts]
    return doc


def cmd_md_qmf(cfg, _):
    sys_ = _system(cfg)
    M = lattice_filter(cfg.options["md_filter"], sys_.B.d)
    out = multidim_qmf_check(M, sys_, cfg.options.get("md_grid", 32))
    return {"config": cfg.to_dict(), "system": sys_.to_dict(), "filter": M.name,
            "validation": out.to_dict()}


def cmd_md_tightness(cfg, _):
    sys_ = _system(cfg)
    M = lattice_filter(cfg.options["md_filter"], sys_.B.d)
    xi = parse_vector(cfg.options["xi_vec"], sys_.B.d, exact=True)
    Mt = m_tilde(M, sys_.A, sys_.p)
    res = multidim_tightness(Mt, sys_, xi, cfg.eps[0], cfg.N_max,
                             budget=cfg.options.get("budget", DIGIT_BUDGET))
    return {"config": cfg.to_dict(), "system": sys_.to_dict(), "filter": M.name,
            "xi": [str(v) for v in xi], "result": res.to_dict()}


COMMANDS = {
    "validate": cmd_validate,
    "tightness": cmd_tightness,
    "condition-c": cmd_condition_c,
    "dyadic-limits": cmd_dyadic,
    "verdict": cmd_verdict,
    "table": cmd_table,
    "plot-data": cmd_plot_data,
    "matrix-analyze": cmd_matrix,
    "digits": cmd_digits,
    "expand": cmd_expand,
    "tile": cmd_tile,
    "tile-measure": cmd_tile_measure,
    "md-qmf": cmd_md_qmf,
    "md-tightness": cmd_md_tightness,
}
FILTER_COMMANDS = {"validate", "tightness", "condition-c", "dyadic-limits", "verdict", "table",
                   "plot-data"}


# ---------------------------------------------------------------------------
# CSV views
# ---------------------------------------------------------------------------

def to_csv(command: str, doc: dict) -> str:
    if command == "table":
        return rows_to_csv(["k", "mass"], doc["rows"])
    if command == "tile":
        d = doc["dimension"]
        return rows_to_csv([f"x{i}" for i in range(d)], doc["points"])
    if command == "digits":
        d = len(doc["system"]["digits"][0])
        return rows_to_csv([f"r{i}" for i in range(d)], doc["system"]["digits"])
    if "per_xi" in doc:
        keys = ["xi", "verdict_b", "retained", "residual", "witness_k", "witness_mass"]
        present = [k for k in keys if any(k in r for r in doc["per_xi"])]
        return rows_to_csv(present, [[r.get(k, "") for k in present] for r in doc["per_xi"]])
    flat = _flatten(doc)
    return rows_to_csv(["key", "value"], sorted(flat.items()))


def _flatten(doc, prefix=""):
    out = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = json.dumps(v) if isinstance(v, list) else v
    return out


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="probmra", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output file (plot-data: directory)")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--threads", type=int, default=1, help="cap on parallel workers")
        p.add_argument("--seed", type=int, default=0)

    def scan(p):
        p.add_argument("--filter", required=True, help="builtin name or JSON filter file")
        p.add_argument("--grid", type=int, default=1024, help="number of uniform xi samples")
        p.add_argument("--probe", action="append", default=[], type=parse_xi,
                       help="extra xi sample, e.g. 1/3 (repeatable, exact)")
        p.add_argument("--N-max", dest="N_max", type=int, default=12)
        p.add_argument("--K", type=int, default=2047)
        p.add_argument("--J-max", dest="J_max", type=int, default=64)
        p.add_argument("--eps", type=parse_eps, default=[1e-2, 1e-4])
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--floor", type=float, default=1e-3)
        p.add_argument("--margin", type=float, default=0.05)
        p.add_argument("--k-range", default="-8,7", help="dyadic-limit k range lo,hi")
        p.add_argument("--j-max", dest="j_max", type=int, default=40)
        common(p)

    p = sub.add_parser("validate", help="QMF identity check")
    p.add_argument("--filter", required=True)
    p.add_argument("--grid", type=int, default=4096)
    p.add_argument("--tol", type=float, default=1e-12)
    common(p)
    for name, text in [("tightness", "tightness of the partial-product measures"),
                       ("condition-c", "condition (C) scan with witnesses"),
                       ("dyadic-limits", "dyadic limits and the sets L+, L-"),
                       ("verdict", "combined low-pass verdict"),
                       ("plot-data", "CSV files for plotting")]:
        p = sub.add_parser(name, help=text)
        scan(p)
        if name == "plot-data":
            p.add_argument("--report", help="existing JSON report to convert")
    p = sub.add_parser("table", help="one table P^N_xi(k)")
    p.add_argument("--filter", required=True)
    p.add_argument("--xi", required=True, type=parse_xi)
    p.add_argument("--N-max", dest="N_max", type=int, default=8)
    common(p)

    def matrix(p):
        p.add_argument("--matrix", required=True, help='JSON row-major integer matrix, e.g. "[[1,1],[-1,1]]"')
        common(p)

    for name, text in [("matrix-analyze", "determinant, eigenvalue moduli, power p"),
                       ("digits", "digit set of B = (A^T)^p")]:
        matrix(sub.add_parser(name, help=text))
    p = sub.add_parser("expand", help="digit expansion of a lattice vector")
    matrix(p)
    p.add_argument("--k", required=True, help="JSON vector, e.g. [3,4]")
    for name, text in [("tile", "tile point cloud"), ("tile-measure", "tile measure and overlaps")]:
        p = sub.add_parser(name, help=text)
        matrix(p)
        p.add_argument("--depth", type=int, default=8)
        p.add_argument("--mode", choices=["exhaustive", "monte_carlo"], default="monte_carlo")
        p.add_argument("--count", type=int, default=100000)
        p.add_argument("--cell", type=float)
    p = sub.add_parser("md-qmf", help="multidimensional coset-sum identity")
    matrix(p)
    p.add_argument("--md-filter", default="quincunx")
    p.add_argument("--grid", type=int, default=32)
    p = sub.add_parser("md-tightness", help="Z_N tightness for a lattice filter")
    matrix(p)
    p.add_argument("--md-filter", default="quincunx")
    p.add_argument("--xi", required=True, help="JSON vector in [0,1)^d, entries may be '1/3'")
    p.add_argument("--eps", type=parse_eps, default=[1e-2])
    p.add_argument("--N-max", dest="N_max", type=int, default=4)
    return ap


def config_from_args(args) -> RunConfig:
    c = args.command
    cfg = RunConfig(command=c, out=args.out, format=args.format, threads=args.threads,
                    seed=args.seed)
    if getattr(args, "filter", None):
        cfg.filter = args.filter
    for name in ("grid", "N_max", "K", "J_max"):
        if getattr(args, name, None) is not None:
            setattr(cfg, name, getattr(args, name))
    if getattr(args, "probe", None):
        cfg.probes = list(args.probe)
    if getattr(args, "eps", None):
        cfg.eps = list(args.eps)
    o = cfg.options
    if c == "validate":
        o["qmf_grid"], o["qmf_tol"] = args.grid, args.tol
    if c in ("tightness", "condition-c", "dyadic-limits", "verdict", "plot-data"):
        lo, hi = (int(t) for t in args.k_range.split(","))
        o.update(tol=args.tol, floor=args.floor, margin=args.margin, k_lo=lo, k_hi=hi,
                 j_max=args.j_max)
        if c == "plot-data" and args.report:
            o["report"] = args.report
    if c == "table":
        o["xi"] = args.xi
    if hasattr(args, "matrix"):
        o["matrix"] = args.matrix
    if c == "expand":
        o["k"] = args.k
    if c in ("tile", "tile-measure"):
        o.update(depth=args.depth, mode=args.mode, count=args.count)
        if args.cell:
            o["cell"] = args.cell
    if c in ("md-qmf", "md-tightness"):
        o["md_filter"] = args.md_filter
    if c == "md-qmf":
        o["md_grid"] = args.grid
    if c == "md-tightness":
        o["xi_vec"] = args.xi
    return cfg


def write_output(cfg: RunConfig, doc: dict) -> Optional[str]:
    text = to_csv(cfg.command, doc) if cfg.format == "csv" else dumps(doc)
    target = cfg.out
    if target is None and default_output_dir():
        target = str(Path(default_output_dir()) / f"{cfg.command}.{cfg.format}")
    if target is None:
        sys.stdout.write(text)
        return None
    path = Path(target)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return str(path)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = config_from_args(args)
        if args.command not in ("validate", "table"):
            cfg.validate()
        filt = load_filter(cfg.filter) if args.command in FILTER_COMMANDS else None
        doc = COMMANDS[args.command](cfg, filt)
        if args.command == "plot-data":
            sys.stdout.write(dumps(doc))
        else:
            write_output(cfg, doc)
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
