"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

The slope experiments (criteria 5 to 7) and the bias-oracle experiments run
at full size and take several minutes on one core.
"""

import json
import time

import numpy as np
import pytest
from conftest import report

from drwave.cli import run_cli
from drwave.config import dump_config
from drwave.estimators import EstimatorConfig, estimate
from drwave.oracle import exact_constant_bias, exact_projection_bias
from drwave.rate_lab import (
    DGPSpec,
    EstimatorSpec,
    ExperimentSpec,
    TuningRule,
    compare_to_theory,
    fit_loglog_slope,
    nuisance_ise_experiment,
    nuisance_variance_experiment,
    replication_seed,
    run_experiment,
)
from drwave.synthetic_models import constant_dgp, sample, worst_case_dgp
from drwave.tuning import regime_report
from drwave.wavelet_basis import DyadicResolution, PiecewiseConstantFn, kernel_eval, project

TOL = 0.15


def _verdict(number: int, ok: bool, detail: str) -> None:
    report(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


def _mc(config: EstimatorConfig, dgp, rows: int, reps: int, seed: int) -> tuple[float, float]:
    vals = np.array([estimate(config, sample(dgp, rows, replication_seed(seed, rows, r))) for r in range(reps)])
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(reps))


def _cfg(kind: str, scheme: str, k1: int, k2: int) -> EstimatorConfig:
    return EstimatorConfig(kind, scheme, DyadicResolution.from_size(k1), DyadicResolution.from_size(k2))


# --- criterion 1 ---------------------------------------------------------------


def test_criterion_1_exact_identities() -> None:
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    f = PiecewiseConstantFn(DyadicResolution(8), rng.standard_normal(256))
    for lo in range(8):
        p = project(f, DyadicResolution(lo))
        worst = max(worst, np.max(np.abs(project(p, DyadicResolution(lo)).values - p.values)))
        for hi in range(lo, 9):
            nested = project(project(f, DyadicResolution(hi)), DyadicResolution(lo))
            worst = max(worst, np.max(np.abs(nested.values - p.values)))
    grid = (np.arange(256) + 0.5) / 256
    for j in range(7):
        res = DyadicResolution(j)
        g = PiecewiseConstantFn(res, rng.standard_normal(res.size))
        for x in rng.random(5):
            repro = np.mean(kernel_eval(res, np.full(256, x), grid) * g(grid))
            worst = max(worst, abs(repro - float(g(x))))
    for k in (2, 8, 64):
        res = DyadicResolution.from_size(k)
        worst = max(worst, abs(np.mean(kernel_eval(res, grid, grid)) - k))
    for j1 in range(7):
        for j2 in range(7):
            r1, r2 = DyadicResolution(j1), DyadicResolution(j2)
            z = np.full(256, rng.random())
            val = np.mean(kernel_eval(r1, z, grid) * kernel_eval(r2, z, grid))
            worst = max(worst, abs(val - kernel_eval(r1 if j1 <= j2 else r2, z[:1], z[:1])[0]))
    elapsed = time.perf_counter() - start
    _verdict(1, worst <= 1e-12 and elapsed < 1.0, f"max identity error {worst:.2e}, runtime {elapsed:.2f}s")


# --- criteria 2 and 10 ---------------------------------------------------------

CRIT2_DGP = DGPSpec(alpha=0.25, beta=0.25, epsilon=0.1, levels=12)
CRIT2_REPS = 100_000
# Grid points must be at least two; the cheap n=16 point only satisfies that.
CRIT2_GRID = (16, 256)


def _crit2_spec(kind: str, k1: int, k2: int) -> ExperimentSpec:
    return ExperimentSpec(
        dgp=CRIT2_DGP, estimator=EstimatorSpec(kind, "double"),
        tuning=TuningRule("fixed", k1=k1, k2=k2), n_grid=CRIT2_GRID,
        replications=CRIT2_REPS, seed=2, name=f"projection-bias-{kind}-{k1}-{k2}",
    )


@pytest.fixture(scope="module")
def crit2_cli_runs(tmp_path_factory):
    """The INT (8, 32) projection-bias experiment through the CLI, with 1 and 8 threads."""
    root = tmp_path_factory.mktemp("crit2")
    cfg = root / "crit2.json"
    cfg.write_text(dump_config(_crit2_spec("INT", 8, 32)))
    outs = {}
    for threads in (1, 8):
        out = root / f"threads{threads}"
        code = run_cli(["run", "--config", str(cfg), "--out", str(out), "--threads", str(threads)])
        assert code in (0, 1)
        outs[threads] = out
    return outs


@pytest.mark.slow
def test_criterion_2_projection_bias(crit2_cli_runs) -> None:
    dgp = CRIT2_DGP.build()
    lines, ok = [], True
    for kind, k1, k2 in (("INT", 8, 32), ("INT", 32, 8), ("IF", 8, 32), ("IF", 32, 8)):
        if (kind, k1, k2) == ("INT", 8, 32):
            payload = json.loads((crit2_cli_runs[1] / "results.json").read_text())
            point = payload["points"][-1]
            bias, se = point["bias"], point["stderr"]
        else:
            point = run_experiment(_crit2_spec(kind, k1, k2)).points[-1]
            bias, se = point.bias, point.stderr
        exact = exact_projection_bias(dgp, k1, k2, kind)
        z = (bias - exact) / se
        ok &= abs(z) <= 4
        lines.append(f"{kind}({k1},{k2}) bias {bias:.5f} oracle {exact:.5f} z {z:+.2f}")
    _verdict(2, ok, "; ".join(lines))


@pytest.mark.slow
def test_criterion_10_thread_determinism(crit2_cli_runs) -> None:
    a = (crit2_cli_runs[1] / "results.csv").read_bytes()
    b = (crit2_cli_runs[8] / "results.csv").read_bytes()
    _verdict(10, a == b and len(a) > 0, f"threads 1 vs 8 CSVs identical: {a == b} ({len(a)} bytes)")


# --- criteria 3 and 4 ----------------------------------------------------------

CONST = constant_dgp(0.5, 0.5, 0.05)
PSI = 0.05


@pytest.mark.slow
def test_criterion_3_nonlinearity_bias() -> None:
    n, k, reps = 512, 64, 20_000
    single, se1 = _mc(_cfg("IF", "single", k, k), CONST, 2 * n, reps, 3)
    double, se2 = _mc(_cfg("IF", "double", k, k), CONST, 3 * n, reps, 3)
    b1, b2 = single - PSI, double - PSI
    target = 0.30 * k / n
    ok1 = abs(abs(b1) - target) <= 4 * se1 + 2 / n
    ok2 = abs(b2) <= 4 * se2
    exact = exact_constant_bias(CONST, "IF", "single", k, k, n)
    _verdict(3, ok1 and ok2,
             f"single |bias| {abs(b1):.5f} vs {target} (tol {4 * se1 + 2 / n:.5f}, exact {exact:.6f}); "
             f"double bias {b2:+.5f} (4se {4 * se2:.5f})")


@pytest.mark.slow
def test_criterion_4_own_observation_bias() -> None:
    n, k, reps = 1024, 128, 2000
    none, se1 = _mc(_cfg("NR", "none", k, k), CONST, n, reps, 4)
    single, se2 = _mc(_cfg("NR", "single", k, k), CONST, 2 * n, reps, 4)
    b1, b2 = none - PSI, single - PSI
    target = 0.30 * k / n
    ok1 = abs(abs(b1) - target) <= 4 * se1
    ok2 = abs(b2) <= 4 * se2
    _verdict(4, ok1 and ok2,
             f"no-split |bias| {abs(b1):.5f} vs {target} (4se {4 * se1:.5f}); "
             f"single bias {b2:+.5f} (4se {4 * se2:.5f})")


@pytest.mark.slow
def test_own_observation_bias_matches_exact_value() -> None:
    # The exact value -(c k - s) / n = -0.0372559 sits inside the criterion-4 band.
    n, k = 1024, 128
    exact = exact_constant_bias(CONST, "NR", "none", k, k, n)
    assert exact == pytest.approx(-(0.30 * k - 0.25) / n, rel=1e-12)
    mean, se = _mc(_cfg("NR", "none", k, k), CONST, n, 10_000, 40)
    assert abs(mean - PSI - exact) <= 4 * se


# --- criteria 5 to 7 -----------------------------------------------------------

REPORT = regime_report(0.15, 0.15, 1)


@pytest.fixture(scope="module")
def slope_runs():
    runs = {}
    for key, est, rule in (
        ("IF", EstimatorSpec("IF", "double"), TuningRule("minimax")),
        ("INT", EstimatorSpec("INT", "double"), TuningRule("prediction")),
        ("MC", EstimatorSpec("MC", "double"), TuningRule("minimax")),
    ):
        res = run_experiment(ExperimentSpec(estimator=est, tuning=rule, seed=1, name=key))
        compare_to_theory(res, REPORT)
        runs[key] = res
    return runs


def _mse_slope(res) -> tuple[float, float]:
    fit = res.slopes["mse"]
    return fit.slope, fit.stderr


@pytest.mark.slow
def test_criterion_5_minimax_slope(slope_runs) -> None:
    slope, se = _mse_slope(slope_runs["IF"])
    target = -4 * 0.3 / (0.6 + 1)
    _verdict(5, abs(slope - target) <= TOL, f"IF double minimax MSE slope {slope:+.3f} (se {se:.3f}) vs {target:+.3f}")


@pytest.mark.slow
def test_criterion_6_undersmoothing_separation(slope_runs) -> None:
    slope, se = _mse_slope(slope_runs["INT"])
    minimax_slope, _ = _mse_slope(slope_runs["IF"])
    target = -0.6 / 1.3
    gap = slope - minimax_slope
    _verdict(6, abs(slope - target) <= TOL and gap >= 0.2,
             f"INT double prediction-optimal MSE slope {slope:+.3f} (se {se:.3f}) vs {target:+.4f}; "
             f"gap to criterion 5 {gap:.3f}")


@pytest.mark.slow
def test_criterion_7_mc_best_rate(slope_runs) -> None:
    slope, se = _mse_slope(slope_runs["MC"])
    target = -3 * 0.3 / 1.3
    _verdict(7, abs(slope - target) <= TOL, f"MC double MSE slope {slope:+.3f} (se {se:.3f}) vs {target:+.4f}")


# --- criterion 8 ---------------------------------------------------------------


def test_criterion_8_regime_masks() -> None:
    from test_tuning import test_regime_golden_masks

    start = time.perf_counter()
    try:
        test_regime_golden_masks()
        ok, why = True, "all 96 stored masks reproduced"
    except AssertionError as exc:
        ok, why = False, f"mask mismatch {exc}"
    elapsed = time.perf_counter() - start
    _verdict(8, ok and elapsed < 1.0, f"{why}, runtime {elapsed:.2f}s")


# --- criterion 9 ---------------------------------------------------------------


@pytest.mark.slow
def test_criterion_9_nuisance_rates() -> None:
    dgp = worst_case_dgp(0.5, 0.5, epsilon=0.1, L=12)
    ise = nuisance_ise_experiment(dgp, [2**j for j in range(8, 14)], replications=400, seed=9)
    ise_slope = fit_loglog_slope([(p.n, p.value) for p in ise]).slope
    var = nuisance_variance_experiment(dgp, 4096, [2**j for j in range(4, 9)], replications=400, seed=9)
    var_slope = fit_loglog_slope([(p.k, p.value) for p in var]).slope
    ok = abs(ise_slope + 0.5) <= TOL and abs(var_slope - 1.0) <= TOL
    _verdict(9, ok, f"ISE slope {ise_slope:+.3f} vs -0.5; variance-in-k slope {var_slope:+.3f} vs 1")
