import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drwave.errors import DomainError
from drwave.wavelet_basis import (
    DyadicResolution,
    PiecewiseConstantFn,
    WaveletSeriesFunction,
    cell_index,
    detail_coefficients,
    eval_series,
    eval_series_direct,
    inner_product,
    kernel_eval,
    project,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def test_resolution_size_and_rounding() -> None:
    assert DyadicResolution(3, 2).size == 64
    assert DyadicResolution.from_size(1000.0).size == 1024
    assert DyadicResolution.from_size(2**2.5).size == 8  # halves round up
    assert DyadicResolution.from_size(64, 2).level == 3
    with pytest.raises((DomainError, ValueError)):
        DyadicResolution(-1)


@pytest.mark.parametrize(
    "res, x, y, expected",
    [
        (DyadicResolution(1), 0.1, 0.4, 2.0),
        (DyadicResolution(1), 0.1, 0.6, 0.0),
        (DyadicResolution(1, 2), [0.2, 0.2], [0.3, 0.4], 4.0),
    ],
)
def test_kernel_examples(res, x, y, expected) -> None:
    assert kernel_eval(res, x, y) == expected


def test_kernel_rejects_points_outside_cube() -> None:
    with pytest.raises(DomainError):
        kernel_eval(DyadicResolution(2), 1.5, 0.2)


def test_right_endpoint_uses_last_cell() -> None:
    assert cell_index(1.0, DyadicResolution(3))[0] == 7
    assert cell_index([[1.0, 0.0]], DyadicResolution(1, 2))[0] == 2


def test_project_examples() -> None:
    res = DyadicResolution(1)
    assert np.allclose(project(lambda x: x[:, 0], res).values, [0.25, 0.75])
    ones = project(lambda x: np.ones(len(x)), DyadicResolution(4))
    assert np.all(ones.values == 1.0)
    # A level-2 mother wavelet projected at level 2 vanishes.
    psi = PiecewiseConstantFn(DyadicResolution(3), [1, -1, 0, 0, 0, 0, 0, 0])
    assert np.all(project(psi, DyadicResolution(2)).values == 0.0)


def test_inner_product_examples() -> None:
    f = PiecewiseConstantFn(DyadicResolution(1), [1.0, 3.0])
    g = PiecewiseConstantFn(DyadicResolution(1), [2.0, 0.0])
    assert inner_product(f, g) == 1.0
    one = PiecewiseConstantFn.constant(1.0, DyadicResolution(0))
    assert inner_product(one, one) == 1.0
    detail = PiecewiseConstantFn(DyadicResolution(2), [0, 0, 1, -1])
    assert inner_product(one, detail) == 0.0
    with pytest.raises(DomainError):
        inner_product(one, PiecewiseConstantFn.constant(1.0, DyadicResolution(0, 2)))


@settings(max_examples=40, deadline=None)
@given(
    vals=st.lists(st.floats(-5, 5, allow_nan=False), min_size=16, max_size=16),
    j=st.integers(0, 4),
    jj=st.integers(0, 4),
)
def test_projection_idempotent_and_nested(vals, j, jj) -> None:
    f = PiecewiseConstantFn(DyadicResolution(4), vals)
    lo, hi = sorted((j, jj))
    p = project(f, DyadicResolution(lo))
    assert np.array_equal(project(p, DyadicResolution(lo)).values, p.values)
    nested = project(project(f, DyadicResolution(hi)), DyadicResolution(lo))
    assert np.allclose(nested.values, p.values, rtol=0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(vals=st.lists(st.floats(-5, 5, allow_nan=False), min_size=8, max_size=8), x=unit)
def test_reproducing_identity(vals, x) -> None:
    res = DyadicResolution(3)
    g = PiecewiseConstantFn(res, vals)
    # int K(x, y) g(y) dy as a sum over cells of the fine grid.
    y = (np.arange(64) + 0.5) / 64
    integral = np.mean(kernel_eval(res, np.full(64, x), y) * g(y))
    assert integral == pytest.approx(g(x), abs=1e-12)


@pytest.mark.parametrize("k", [2, 8, 64])
def test_trace_identity(k) -> None:
    res = DyadicResolution.from_size(k)
    x = (np.arange(4 * k) + 0.5) / (4 * k)
    assert np.mean(kernel_eval(res, x, x)) == k


@settings(max_examples=30, deadline=None)
@given(j1=st.integers(0, 6), j2=st.integers(0, 6), z=unit)
def test_kernel_nesting(j1, j2, z) -> None:
    r1, r2 = DyadicResolution(j1), DyadicResolution(j2)
    x = (np.arange(256) + 0.5) / 256
    zz = np.full_like(x, z)
    val = np.mean(kernel_eval(r1, zz, x) * kernel_eval(r2, zz, x))
    assert val == pytest.approx(min(r1.size, r2.size), abs=1e-12)


def test_pcf_norm_matches_quadrature() -> None:
    f = PiecewiseConstantFn(DyadicResolution(2, 2), np.arange(16.0) - 7)
    g = np.linspace(0.0, 1.0, 129)[:-1] + 1 / 256
    xx, yy = np.meshgrid(g, g, indexing="ij")
    vals = f(np.stack([xx.ravel(), yy.ravel()], axis=1))
    assert f.l2_norm() ** 2 == pytest.approx(np.mean(vals**2), rel=1e-12)


def test_series_zero_amplitude_and_single_term() -> None:
    w0 = WaveletSeriesFunction(0.4, 0.0, 6, offset=0.3)
    assert np.all(eval_series(w0, np.linspace(0, 1, 11)) == 0.3)
    w = WaveletSeriesFunction(0.5, 0.2, max_level=3, base_level=3)
    # Left half of a level-3 detail support: coefficient times 2**(3/2).
    assert w(0.01) == pytest.approx(0.2 * 2 ** (-3 * 1.0) * 2**1.5)
    assert w(0.1) == pytest.approx(-0.2 * 2 ** (-3 * 1.0) * 2**1.5)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_series_table_matches_direct(dim) -> None:
    w = WaveletSeriesFunction(0.3, 0.1, 20 if dim == 1 else 9, dim, offset=0.5)
    x = np.random.default_rng(dim).random((500, dim))
    assert np.max(np.abs(eval_series(w, x) - eval_series_direct(w, x))) < 1e-14


@pytest.mark.parametrize("dim, level", [(1, 0), (1, 5), (2, 2)])
def test_detail_coefficients_at_ball_edge(dim, level) -> None:
    w = WaveletSeriesFunction(0.35, 0.1, 7, dim)
    coef = detail_coefficients(w, level)
    assert coef.shape == ((1 << dim) - 1, 1 << (level * dim))
    assert np.allclose(coef, 0.1 * 2.0 ** (-level * (0.35 + dim / 2)), rtol=1e-12, atol=0)


def test_series_sup_norm_bound_and_range() -> None:
    w = WaveletSeriesFunction(0.25, 0.1, 12, offset=0.5)
    x = np.linspace(0, 1, 20001)
    vals = w(x)
    lo, hi = w.value_range()
    assert lo - 1e-12 <= vals.min() and vals.max() <= hi + 1e-12
    assert vals.max() == pytest.approx(hi)  # attained at the origin
    assert np.max(np.abs(vals - 0.5)) <= 0.1 * np.sum(2.0 ** (-0.25 * np.arange(13))) + 1e-12


def test_holder_tail_ratio() -> None:
    alpha = 0.3
    w = WaveletSeriesFunction(alpha, 0.1, 24)
    x = np.linspace(0, 1, 2**16, endpoint=False)
    ratios = []
    for j in (4, 5, 6):
        res = DyadicResolution(j)
        sup = np.max(np.abs(w(x) - project(w, res)(x)))
        assert sup == pytest.approx(w.sup_deviation(j), rel=1e-12)
        ratios.append(sup / res.size ** (-alpha))
    assert max(ratios) / min(ratios) <= 1.2


def test_series_rejects_haar_incompatible_smoothness() -> None:
    with pytest.raises(DomainError):
        WaveletSeriesFunction(1.0, 0.1)


def test_residual_norm_by_parseval() -> None:
    w = WaveletSeriesFunction(0.4, 0.2, 10, offset=0.1)
    res = DyadicResolution(3)
    fine = project(w, DyadicResolution(11))
    diff = fine - project(w, res)
    assert diff.l2_norm() ** 2 == pytest.approx(w.residual_sq_norm(3), rel=1e-12)
