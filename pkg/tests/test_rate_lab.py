import json

import numpy as np
import pytest

from drwave.errors import ConfigurationError, DomainError
from drwave.rate_lab import (
    CSV_COLUMNS,
    DGPSpec,
    EstimatorSpec,
    ExperimentSpec,
    RatePoint,
    RateResult,
    SlopeFit,
    TuningRule,
    compare_to_theory,
    fit_loglog_slope,
    nuisance_variance_experiment,
    replication_seed,
    run_experiment,
)
from drwave.synthetic_models import worst_case_dgp
from drwave.tuning import regime_report


def _constant_spec(**kw) -> ExperimentSpec:
    base = dict(
        dgp=DGPSpec(family="constant", alpha=None, beta=None, p0=0.5, b0=0.5, rho=0.0),
        estimator=EstimatorSpec("IF", "double"),
        tuning=TuningRule("fixed", k1=8, k2=8),
        n_grid=(32, 64, 128),
        replications=400,
        seed=7,
    )
    base.update(kw)
    return ExperimentSpec(**base)


def test_exact_power_law_slopes() -> None:
    ns = [2.0**j for j in range(4, 10)]
    fit = fit_loglog_slope([(n, n**-1.0) for n in ns])
    assert fit.slope == pytest.approx(-1.0, abs=1e-12) and fit.stderr == pytest.approx(0.0, abs=1e-12)
    assert fit_loglog_slope([(n, 3 * n**-0.5) for n in ns]).slope == pytest.approx(-0.5, abs=1e-12)
    two = fit_loglog_slope([(4, 1.0), (16, 0.25)])
    assert two.slope == pytest.approx(-1.0) and two.n_points == 2


def test_noisy_slope_fixture() -> None:
    rng = np.random.default_rng(2024)
    ns = 2.0 ** np.arange(9, 16)
    vals = 2.0 * ns**-0.75 * np.exp(0.05 * rng.standard_normal(ns.size))
    fit = fit_loglog_slope(list(zip(ns, vals)))
    assert abs(fit.slope + 0.75) <= 3 * fit.stderr


@pytest.mark.parametrize("pts", [[(4, 1.0)], [(4, 1.0), (8, 0.0)], [(4, 1.0), (8, -1.0)], [(4, 1.0), (4, 2.0)]])
def test_slope_input_errors(pts) -> None:
    with pytest.raises(DomainError):
        fit_loglog_slope(pts)


def _result(mse_slope: float) -> RateResult:
    spec = ExperimentSpec(
        dgp=DGPSpec(), estimator=EstimatorSpec("IF", "double"), tuning=TuningRule("minimax"),
        n_grid=(512, 1024), replications=100,
    )
    pt = RatePoint(512, 1, 1, 100, 0.0, 0.0, 1.0, 1.0, 0.1)
    return RateResult(spec, 0.0, [pt], {"mse": SlopeFit(mse_slope, 0.01, 0.0, 7), "bias": None})


def test_compare_to_theory_examples() -> None:
    report = regime_report(0.15, 0.15, 1)
    ok = compare_to_theory(_result(-0.74), report)
    assert [v.quantity for v in ok] == ["mse"]
    assert ok[0].passed and ok[0].theory == pytest.approx(-0.75)
    bad = compare_to_theory(_result(-0.46), report)
    assert not bad[0].passed and bad[0].gap == pytest.approx(0.29)
    empty = _result(-0.75)
    empty.points = []
    with pytest.raises(DomainError):
        compare_to_theory(empty, report)


def test_one_sided_check_off_the_lower_bound_family() -> None:
    res = run_experiment(_constant_spec(dgp=DGPSpec(family="constant", p0=0.5, b0=0.5, rho=0.05)))
    verdicts = compare_to_theory(res, regime_report(0.15, 0.15, 1))
    assert all(not v.two_sided for v in verdicts)


def test_unbiased_configuration() -> None:
    res = run_experiment(_constant_spec())
    assert res.psi == 0.0
    for p in res.points:
        assert abs(p.bias) <= 4 * p.stderr
        assert (p.k1, p.k2) == (8, 8)


def test_decomposition_identity() -> None:
    res = run_experiment(_constant_spec(dgp=DGPSpec(family="constant", p0=0.2, b0=-0.4, rho=0.03),
                                        estimator=EstimatorSpec("IF", "single")))
    for p in res.points:
        r = p.replications
        assert p.mse == pytest.approx(p.bias**2 + p.var * (r - 1) / r, rel=1e-10)


def test_thread_count_does_not_change_results() -> None:
    spec = _constant_spec(replications=150)
    one, four = run_experiment(spec, threads=1), run_experiment(spec, threads=4)
    assert one.csv_text() == four.csv_text()
    assert one.json_text() == four.json_text()


def test_point_independent_of_grid_composition() -> None:
    a = run_experiment(_constant_spec(n_grid=(32, 64)))
    b = run_experiment(_constant_spec(n_grid=(64, 128)))
    assert a.points[1] == b.points[0]


def test_stderr_scales_with_replications() -> None:
    se2 = []
    for reps in (1000, 2000):
        res = run_experiment(_constant_spec(n_grid=(16, 32), replications=reps))
        se2.append(res.points[0].stderr ** 2)
    assert se2[1] / se2[0] == pytest.approx(0.5, rel=0.15)


def test_csv_columns_and_format() -> None:
    text = run_experiment(_constant_spec()).csv_text()
    lines = text.split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS) == "n,mean,bias,var,mse,stderr"
    assert text.endswith("\n") and "\r" not in text
    assert len(lines) == 3 + 2
    json.loads(run_experiment(_constant_spec()).json_text())


def test_replication_seeds_are_distinct() -> None:
    draws = {replication_seed(1, n, r).generate_state(1)[0] for n in (512, 1024) for r in range(50)}
    assert len(draws) == 100


@pytest.mark.parametrize(
    "kw",
    [dict(n_grid=(64,)), dict(n_grid=(64, 32)), dict(replications=10), dict(seed=-1), dict(slope_tolerance=0)],
)
def test_spec_validation(kw) -> None:
    with pytest.raises(ConfigurationError):
        _constant_spec(**kw)


def test_tuning_rules_give_expected_resolutions() -> None:
    dgp, est = DGPSpec(), EstimatorSpec("IF", "double")
    k1, k2 = TuningRule("minimax").resolutions(4096, dgp, est)
    assert (k1.size, k2.size) == (32768, 64)
    k1, k2 = TuningRule("prediction").resolutions(4096, dgp, est)
    assert k1.size == k2.size == 2 ** round(12 / 1.3)


def test_nuisance_variance_grows_linearly_in_k() -> None:
    dgp = worst_case_dgp(0.5, 0.5, epsilon=0.1, L=12)
    pts = nuisance_variance_experiment(dgp, 1024, [8, 32], replications=300, seed=1)
    fit = fit_loglog_slope([(p.k, p.value) for p in pts])
    assert fit.slope == pytest.approx(1.0, abs=0.15)
