"""Command-line entry point: ``phiconj {scan,suite,check}``.

Exit codes: 0 success, 1 at least one acceptance criterion failed, 2 bad
configuration or usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .scan import _render, run_scan
from .suite import NAMES, run_all, run_criterion

__all__ = ["main"]


def _write_results(results, path: Path):
    header = ["criterion", "name", "passed", "metric", "threshold", "n_instances"]
    rows = [[r.number, r.name, r.passed, float(r.metric), float(r.threshold), r.n_instances] for r in results]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_render(header, rows), encoding="utf-8")


def _report(results, out: Path, filename: str) -> int:
    _write_results(results, out / filename)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failing criteria: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def _progress(res):
    print(res.line(), flush=True)
    print(f"   ({res.seconds:.1f}s)", file=sys.stderr, flush=True)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phiconj", description="Generalized conjugate experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required):
        sp.add_argument("--config", type=Path, required=config_required, help="INI configuration file")
        sp.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="sampling seed (overrides [run] seed)")

    sp = sub.add_parser("scan", help="envelope scans over the configured y-grids")
    common(sp, True)
    sp.add_argument("--jobs", type=int, default=1, help="scenarios run in parallel")
    common(sub.add_parser("suite", help="run the acceptance suite"), False)
    sp = sub.add_parser("check", help="run one acceptance criterion")
    sp.add_argument("name", help="criterion name or number: " + ", ".join(NAMES))
    common(sp, False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config) if args.config is not None else RunConfig()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    seed = cfg.seed if args.seed is None else args.seed

    if args.command == "scan":
        if not cfg.scenarios:
            print("config error: no [scenario:...] sections", file=sys.stderr)
            return 2
        for path in run_scan(cfg, args.out, seed, max(1, args.jobs)):
            print(path)
        return 0
    if args.command == "suite":
        results = run_all(seed, cfg.tolerances, cfg.criteria, progress=_progress)
        return _report(results, args.out, "suite_summary.csv")
    key = int(args.name) if args.name.isdigit() else args.name
    try:
        res = run_criterion(key, seed, cfg.tolerances)
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    _progress(res)
    return _report([res], args.out, f"check_{res.name}.csv")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
