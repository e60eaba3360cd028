"""Envelope scans over a y-grid, written as CSV."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, ScenarioConfig
from .derivatives import (
    TABLE_FAMILIES,
    compare,
    envelope_gradient,
    envelope_gradient_fd,
    envelope_gradient_table,
    envelope_hessian,
    envelope_hessian_fd,
    prox_jacobian_fd,
    prox_jacobian_formula,
)
from .prox_solver import SolverConfig, prox
from .regularity import check_eigen_condition
from .subdiff import SampleConfig, is_phi_subgradient

__all__ = ["scan_scenario", "run_scan", "fmt"]

THRESHOLDS = {"gradient": 1e-5, "table": 1e-8, "hessian": 1e-3, "jacobian": 1e-4}


def fmt(v) -> str:
    """17 significant digits for floats; plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def _header(sc: ScenarioConfig, n, m):
    cols = ["scenario", "index"] + [f"y_{i}" for i in range(m)]
    cols += ["status", "n_clusters", "envelope"] + [f"prox_{i}" for i in range(n)] + ["prox_all"]
    for chk in sc.checks:
        if chk == "gradient":
            cols += [f"grad_{i}" for i in range(m)] + [f"grad_fd_{i}" for i in range(m)]
            cols += ["gradient_err", "gradient_pass"]
        elif chk == "table":
            cols += [f"grad_table_{i}" for i in range(m)] + ["table_err", "table_pass"]
        elif chk == "hessian":
            cols += [f"hess_{i}{j}" for i in range(m) for j in range(m)]
            cols += ["hessian_err", "hessian_asym", "hessian_pass"]
        elif chk == "jacobian":
            cols += ["jacobian_err", "jacobian_pass"]
        elif chk == "membership":
            cols += ["membership_holds", "membership_worst", "membership_pass"]
        elif chk == "single_valued":
            cols += ["single_valued_pass"]
        elif chk == "eigen":
            cols += ["eigen_margin", "eigen_pass"]
    return cols


def _check_values(chk, sc, g, c, y, cfg, scfg):
    """Columns for one check at one grid point (pass flag last)."""
    if chk == "gradient":
        a, o = envelope_gradient(g, c, y, cfg), envelope_gradient_fd(g, c, y, cfg)
        r = compare(a, o, THRESHOLDS["gradient"], mode="gradient")
        return [*a, *o, r.rel_err, r.passed]
    if chk == "table":
        if c.family not in TABLE_FAMILIES:
            raise ValueError(f"no table row for {c.family}")
        t, a = envelope_gradient_table(g, c, y, cfg), envelope_gradient(g, c, y, cfg)
        r = compare(t, a, THRESHOLDS["table"], mode="gradient")
        return [*t, r.rel_err, r.passed]
    if chk == "hessian":
        H, Hfd = envelope_hessian(g, c, y, cfg), envelope_hessian_fd(g, c, y, cfg)
        r = compare(H, Hfd, THRESHOLDS["hessian"])
        return [*H.ravel(), r.rel_err, float(np.max(np.abs(H - H.T))), r.passed]
    if chk == "jacobian":
        r = compare(prox_jacobian_formula(g, c, y, cfg), prox_jacobian_fd(g, c, y, cfg), THRESHOLDS["jacobian"])
        return [r.rel_err, r.passed]
    if chk == "membership":
        cert = is_phi_subgradient(g, c, sc.membership_x, y, 0.0, scfg)
        return [cert.holds, cert.worst_violation, cert.holds == (sc.expect == "positive")]
    if chk == "single_valued":
        return [len(prox(g, c, y, cfg).minimizers) == 1]
    if chk == "eigen":
        rep = check_eigen_condition(g, c, prox(g, c, y, cfg).x, y)
        return [rep.worst_margin, rep.holds]
    raise ValueError(chk)


def _width(chk, m):
    return {"gradient": 2 * m + 2, "table": m + 2, "hessian": m * m + 3, "jacobian": 2,
            "membership": 3, "single_valued": 1, "eigen": 2}[chk]


def scan_scenario(sc: ScenarioConfig, seed: int = 0):
    """Rows of one scenario plus per-check pass/fail/error counts."""
    g, c = sc.build()
    cfg = replace(SolverConfig(), **sc.solver)
    scfg = SampleConfig(seed=seed)
    n, m = c.dim_x, c.dim_y
    header = _header(sc, n, m)
    rows = []
    counts = {chk: [0, 0, 0] for chk in ("envelope",) + sc.checks}
    for idx, y in enumerate(sc.y_grid()):
        row = [sc.name, idx, *y]
        try:
            res = prox(g, c, y, cfg)
            first = res.minimizers[0] if res.minimizers else np.full(n, np.nan)
            prox_all = ";".join(" ".join(fmt(v) for v in p) for p in res.minimizers)
            row += [res.status, len(res.minimizers), res.envelope, *first, prox_all]
            counts["envelope"][0 if res.status == "converged" else 1] += 1
        except ValueError as exc:
            row += [f"error:{type(exc).__name__}", 0, None, *([None] * n), ""]
            counts["envelope"][2] += 1
        for chk in sc.checks:
            try:
                vals = _check_values(chk, sc, g, c, y, cfg, scfg)
                counts[chk][0 if vals[-1] else 1] += 1
            except ValueError:
                vals = [None] * (_width(chk, m) - 1) + ["error"]
                counts[chk][2] += 1
            row += vals
        rows.append(row)
    return header, rows, counts


def _render(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _scan_job(args):
    sc, seed = args
    header, rows, counts = scan_scenario(sc, seed)
    return sc.name, _render(header, rows), counts, sc.expect


def run_scan(cfg: RunConfig, out_dir, seed: int | None = None, jobs: int = 1) -> list[Path]:
    """Write ``<scenario>.csv`` for each scenario and ``summary.csv``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed if seed is None else seed
    work = [(sc, seed) for sc in cfg.scenarios]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_scan_job, work))
    else:
        results = [_scan_job(w) for w in work]
    paths = []
    summary = [["scenario", "check", "expect", "n_rows", "n_pass", "n_fail", "n_error"]]
    for name, text, counts, expect in results:  # scenario order as configured
        p = out / f"{name}.csv"
        p.write_text(text, encoding="utf-8")
        paths.append(p)
        for chk, (ok, bad, err) in counts.items():
            summary.append([name, chk, expect if chk == "membership" else "", ok + bad + err, ok, bad, err])
    p = out / "summary.csv"
    p.write_text(_render(summary[0], summary[1:]), encoding="utf-8")
    paths.append(p)
    return paths
