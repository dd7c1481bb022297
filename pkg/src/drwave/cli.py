"""
Command-line entry points.

    drwave run --config exp.json --out results/ [--threads N]
    drwave regime-map --alpha-grid 0.1,0.3,0.5 --beta-grid 0.05:0.95:10 --d 1 [--out DIR]
    drwave oracle-check
    drwave kernel-check [--k1 4 --k2 16 --sample-size 0]

Exit codes: 0 success, 1 a check or theory verdict failed, 2 usage or
configuration error. Output files are written to a temporary name and renamed
into place, so a failed run never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import dump_config, load_config
from .errors import ConfigurationError, DomainError
from .estimators import KINDS, SCHEMES
from .oracle import exact_constant_bias, kernel_moment_check, load_sign_fixtures, oracle_check
from .rate_lab import compare_to_theory, run_experiment
from .synthetic_models import constant_dgp
from .tuning import REGIME_COLUMNS, regime_report

__all__ = ["main", "run_cli", "atomic_write", "parse_grid", "regime_rows", "regime_csv"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def atomic_write(path: str | Path, text: str) -> None:
    """Write ``text`` via a sibling temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_grid(text: str) -> list[float]:
    """``"0.1,0.2"`` lists values; ``"lo:hi:num"`` spaces ``num`` values evenly, ends included."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"range grid must be lo:hi:num, got {text!r}")
        lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
        if num < 1:
            raise argparse.ArgumentTypeError("grid needs at least one point")
        return [float(v) for v in np.linspace(lo, hi, num)]
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from exc
    if not values:
        raise argparse.ArgumentTypeError("grid is empty")
    return values


def _cell(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def regime_rows(
    alphas: Sequence[float], betas: Sequence[float], d: int,
    kinds: Sequence[str] = KINDS, schemes: Sequence[str] = SCHEMES,
) -> list[dict]:
    """Regime rows ordered by alpha, beta, kind, scheme."""
    rows = []
    for a in alphas:
        for b in betas:
            for row in regime_report(a, b, d).to_rows():
                if row["kind"] in kinds and row["scheme"] in schemes:
                    rows.append(row)
    return rows


def regime_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REGIME_COLUMNS)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in REGIME_COLUMNS])
    return buf.getvalue()


# =============================================================================
# Subcommands
# =============================================================================


def _cmd_run(args: argparse.Namespace) -> int:
    path = Path(args.config)
    if not path.is_file():
        print(f"config not found: {path}", file=sys.stderr)
        return EXIT_USAGE
    spec = load_config(path)
    result = run_experiment(spec, threads=args.threads)
    alpha, beta = spec.tuning.alpha, spec.tuning.beta
    alpha = alpha if alpha is not None else spec.dgp.alpha
    beta = beta if beta is not None else spec.dgp.beta
    if alpha is not None and beta is not None:
        compare_to_theory(result, regime_report(alpha, beta, spec.dgp.d))
    out = Path(args.out)
    atomic_write(out / "config.json", dump_config(spec))
    atomic_write(out / "results.csv", result.csv_text())
    atomic_write(out / "results.json", result.json_text())
    for v in result.verdicts:
        side = "two-sided" if v.two_sided else "one-sided"
        status = "PASS" if v.passed else "FAIL"
        print(f"{status} {v.quantity} slope {v.fitted:+.4f} vs theory {v.theory:+.4f} "
              f"(tol {v.tolerance}, {side})")
    if result.verdicts and not result.passed:
        return EXIT_FAIL
    return EXIT_OK


def _cmd_regime_map(args: argparse.Namespace) -> int:
    kinds = [args.kind] if args.kind else list(KINDS)
    schemes = [args.scheme] if args.scheme else list(SCHEMES)
    rows = regime_rows(args.alpha_grid, args.beta_grid, args.d, kinds, schemes)
    text = regime_csv(rows)
    if args.out is None:
        sys.stdout.write(text)
        return EXIT_OK
    out = Path(args.out)
    atomic_write(out / "regime_map.csv", text)
    atomic_write(out / "regime_map.json", json.dumps(rows, indent=2) + "\n")
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def _fixture_checks() -> list[tuple[str, bool, str]]:
    payload = load_sign_fixtures()
    par = payload["provenance"]["parameters"]
    dgp = constant_dgp(par["p0"], par["b0"], par["rho"], idio=par["idio"])
    out = []
    for case in payload["cases"]:
        exact = exact_constant_bias(dgp, case["kind"], case["scheme"], case["k1"], case["k2"], case["n"])
        z = (case["mean_bias"] - exact) / case["stderr"]
        name = f"sign fixture {case['kind']}/{case['scheme']} k=({case['k1']},{case['k2']})"
        out.append((name, abs(z) <= 4 and (exact == 0 or math.copysign(1, exact) == case["sign"]),
                    f"exact {exact:+.6g} mc {case['mean_bias']:+.6g} z {z:+.2f}"))
    return out


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    ok = True
    for c in oracle_check():
        ok &= c.passed
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.primary:.15g} vs {c.secondary:.15g}")
    for name, passed, detail in _fixture_checks():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_kernel_check(args: argparse.Namespace) -> int:
    report = kernel_moment_check(args.k1, args.k2, args.sample_size or None)
    for row in report.rows:
        mc = "" if row.mc_estimate is None else f" mc {row.mc_estimate:.6g} se {row.mc_stderr:.2g}"
        print(f"{'PASS' if row.exact_match else 'FAIL'} {row.name} k=({row.k1},{row.k2}): "
              f"cells {row.cells:.12g} closed {row.closed_form:.12g} order {row.order:.6g}{mc}")
    for name, spread in report.order_ratio_spread.items():
        print(f"{'PASS' if spread <= report.tolerance_factor else 'FAIL'} order {name}: spread {spread:.4g}")
    return EXIT_OK if report.passed else EXIT_FAIL


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="drwave", description="Doubly robust functional rate lab")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a rate experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--threads", type=int, default=1)
    run.set_defaults(func=_cmd_run)

    rm = sub.add_parser("regime-map", help="tabulate regimes over an (alpha, beta) grid")
    rm.add_argument("--alpha-grid", type=parse_grid, required=True)
    rm.add_argument("--beta-grid", type=parse_grid, required=True)
    rm.add_argument("--d", type=int, default=1)
    rm.add_argument("--kind", choices=KINDS)
    rm.add_argument("--scheme", choices=SCHEMES)
    rm.add_argument("--out", help="output directory (default: CSV to stdout)")
    rm.set_defaults(func=_cmd_regime_map)

    oc = sub.add_parser("oracle-check", help="two-route oracle agreement and sign fixtures")
    oc.set_defaults(func=_cmd_oracle_check)

    kc = sub.add_parser("kernel-check", help="Haar kernel moment identities and orders")
    kc.add_argument("--k1", type=int, default=4)
    kc.add_argument("--k2", type=int, default=16)
    kc.add_argument("--sample-size", type=int, default=0)
    kc.set_defaults(func=_cmd_kernel_check)
    return ap


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and dispatch; returns the exit code instead of exiting."""
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())
