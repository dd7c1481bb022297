import math

import numpy as np
import pytest

from drwave.errors import ConfigurationError
from drwave.oracle import (
    KERNEL_MOMENTS,
    cell_moment,
    constant_bias_from_moments,
    exact_constant_bias,
    exact_nonlinearity_bias,
    exact_own_observation_bias,
    exact_projection_bias,
    kernel_moment_check,
    load_sign_fixtures,
    oracle_check,
    projection_bias_quadrature,
)
from drwave.synthetic_models import constant_dgp, worst_case_dgp


def test_projection_bias_geometric_sum() -> None:
    dgp = worst_case_dgp(0.25, 0.25, epsilon=0.1, L=12)
    expected = 0.01 * sum(2 ** (-0.5 * l) for l in range(3, 13))
    assert exact_projection_bias(dgp, 8, 32, "INT") == pytest.approx(expected, rel=1e-12)
    assert exact_projection_bias(dgp, 32, 8, "INT") == pytest.approx(expected, rel=1e-12)
    # IF starts at the finer of the two levels.
    tail = 0.01 * sum(2 ** (-0.5 * l) for l in range(5, 13))
    assert exact_projection_bias(dgp, 8, 32, "IF") == pytest.approx(tail, rel=1e-12)


def test_projection_bias_trivial_cases() -> None:
    assert exact_projection_bias(worst_case_dgp(0.3, 0.3, epsilon=0.0, L=8), 4, 4) == 0.0
    dgp = worst_case_dgp(0.3, 0.3, epsilon=0.1, L=8)
    assert exact_projection_bias(dgp, 2**9, 2**9) == 0.0
    assert projection_bias_quadrature(dgp, 2**9, 2**10) == pytest.approx(0.0, abs=1e-15)
    assert exact_projection_bias(dgp, 4, 4) > 0


def test_projection_bias_needs_series_process() -> None:
    with pytest.raises(ConfigurationError):
        exact_projection_bias(constant_dgp(0.5, 0.5, 0.05), 4, 4)


def test_nonlinearity_bias_examples() -> None:
    dgp = constant_dgp(0.5, 0.5, 0.05)
    c, s = 0.30, 0.25
    assert exact_nonlinearity_bias(dgp, 64, 64, 512) == pytest.approx((c * 64 - s) / 512, rel=1e-12)
    # Leading term 0.0375, exact value differs by s / n.
    assert exact_nonlinearity_bias(dgp, 64, 64, 512) == pytest.approx(0.0375 - s / 512, rel=1e-12)
    assert exact_nonlinearity_bias(dgp, 1, 1, 100) == pytest.approx((c - s) / 100, rel=1e-12)
    assert exact_nonlinearity_bias(constant_dgp(0.0, 0.0, 0.0), 8, 8, 64) == 0.0
    assert exact_nonlinearity_bias(dgp, 64, 64, 512, kind="INT") == pytest.approx(
        -exact_nonlinearity_bias(dgp, 64, 64, 512), rel=1e-12
    )


def test_own_observation_bias_examples() -> None:
    dgp = constant_dgp(0.5, 0.5, 0.05)
    assert exact_own_observation_bias(dgp, 128, 1024) == pytest.approx(
        -(0.30 * 128 - 0.25) / 1024, rel=1e-12
    )
    assert exact_own_observation_bias(constant_dgp(0.0, 0.0, 0.0), 16, 64) == 0.0
    # IF without splitting: the two diagonal terms -c k / n each are partly
    # offset by the cross terms, leaving k (2 s - c) / n - s / n + O(k^2 / n^2).
    k, n = 32, 10**6
    val = exact_own_observation_bias(dgp, k, n, kind="IF")
    assert val == pytest.approx((k * (2 * 0.25 - 0.30) - 0.25) / n, rel=1e-3)


@pytest.mark.parametrize("kind", ["INT", "MC", "NR", "IF"])
@pytest.mark.parametrize("scheme", ["none", "single", "double"])
def test_constant_bias_two_routes(kind, scheme) -> None:
    dgp = constant_dgp(0.3, 0.7, 0.02)
    for k1, k2, n in ((4, 16, 40), (32, 2, 7), (8, 8, 1000)):
        a = exact_constant_bias(dgp, kind, scheme, k1, k2, n)
        b = constant_bias_from_moments(dgp, kind, scheme, k1, k2, n)
        assert math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-15)


def test_oracle_check_all_agree() -> None:
    checks = oracle_check()
    assert len(checks) > 50
    assert all(c.passed for c in checks), [c.name for c in checks if not c.passed]


def test_sign_fixtures_match_exact_values() -> None:
    payload = load_sign_fixtures()
    par = payload["provenance"]["parameters"]
    assert payload["provenance"]["replications"] >= 10**6
    dgp = constant_dgp(par["p0"], par["b0"], par["rho"], idio=par["idio"])
    for case in payload["cases"]:
        exact = exact_constant_bias(dgp, case["kind"], case["scheme"], case["k1"], case["k2"], case["n"])
        assert abs(case["mean_bias"] - exact) <= 4 * case["stderr"], case
        if exact != 0:
            assert math.copysign(1, exact) == case["sign"], case


@pytest.mark.parametrize("k", [2, 8, 64])
def test_trace_moment(k) -> None:
    assert cell_moment("trace", k, k) == k


def test_kernel_moment_examples() -> None:
    assert cell_moment("trace", 8, 8) == 8
    assert cell_moment("single_cross", 4, 16) == 4
    assert cell_moment("pair_abs", 8, 8) == 1


def test_kernel_moment_report() -> None:
    report = kernel_moment_check(4, 16)
    assert report.passed
    assert set(report.order_ratio_spread) == set(KERNEL_MOMENTS)
    assert len(report.rows) == 3 * len(KERNEL_MOMENTS)


def test_kernel_moment_monte_carlo_reference() -> None:
    report = kernel_moment_check(2, 8, sample_size=200_000, scalings=(1,), seed=3)
    sampled = [r for r in report.rows if r.mc_estimate is not None]
    assert sampled
    for r in sampled:
        assert abs(r.mc_estimate - r.closed_form) <= 4 * r.mc_stderr + 1e-12, r.name


def test_oracles_are_deterministic() -> None:
    dgp = worst_case_dgp(0.2, 0.35, epsilon=0.1, L=10)
    assert exact_projection_bias(dgp, 4, 16, "IF") == exact_projection_bias(dgp, 4, 16, "IF")
    np.testing.assert_equal(
        [r.cells for r in kernel_moment_check().rows], [r.cells for r in kernel_moment_check().rows]
    )
