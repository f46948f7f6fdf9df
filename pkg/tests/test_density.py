import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from entrokit.density import (
    DataSet,
    DensityEstimate,
    EvaluationGrid,
    default_points_per_axis,
    kde_eval,
    kde_eval_grid,
    kde_eval_points,
    smoothed_density,
    smoothed_density_eval,
    sup_deviation,
)
from entrokit.errors import DomainError, GridSizeError, QuadratureError
from entrokit.kernels import make_kernel
from entrokit.models import cosine, normal, sample, uniform

import oracles

BOX = make_kernel("boxcar")
GAUSS = make_kernel("gaussian")
EPA = make_kernel("epanechnikov")


def est(data, kernel, h):
    return DensityEstimate(DataSet(np.asarray(data, dtype=float)), kernel, h)


# ---------------------------------------------------------------- DataSet


def test_dataset_shapes_and_readonly():
    ds = DataSet([0.1, 0.2, 0.3])
    assert (ds.n, ds.d) == (3, 1)
    with pytest.raises(ValueError):
        ds.observations[0, 0] = 5.0
    assert DataSet(np.zeros((4, 2))).d == 2


@pytest.mark.parametrize("bad", [[], [[1.0, math.nan]], [math.inf], np.zeros((2, 2, 2))])
def test_dataset_rejects_bad_input(bad):
    with pytest.raises(DomainError):
        DataSet(bad)


def test_dataset_copies_input():
    raw = np.array([1.0, 2.0])
    ds = DataSet(raw)
    raw[0] = 9.0
    assert ds.observations[0, 0] == 1.0


# ---------------------------------------------------------------- estimate


def test_single_point_values():
    assert kde_eval(est([0.0], BOX, 1.0), 0.0) == 1.0
    assert kde_eval(est([0.0], GAUSS, 1.0), 0.0) == pytest.approx(0.3989423, abs=1e-7)


def test_two_point_boxcar_at_the_shared_edge():
    # half-open window: K(0.5) = 0 and K(-0.5) = 1, so only one point counts
    e = est([0.0, 1.0], BOX, 1.0)
    assert kde_eval(e, 0.5) == 0.5
    assert kde_eval(e, 0.5) == oracles.kde([0.0, 1.0], 0.5, "boxcar", 1.0)


def test_bandwidth_must_lie_in_unit_interval():
    for h in (0.0, -0.1, 1.5, math.nan):
        with pytest.raises(DomainError):
            est([0.0], GAUSS, h)
    assert est([0.0], GAUSS, 1.0).bandwidth == 1.0


def test_dimension_mismatch_rejected():
    with pytest.raises(DomainError):
        est(np.zeros((3, 2)), GAUSS, 0.5)


def test_non_finite_point_rejected():
    with pytest.raises(DomainError):
        kde_eval(est([0.0], GAUSS, 0.5), math.nan)


def test_higher_order_kernel_values_can_be_negative():
    k4 = make_kernel("polynomial_order_s", order=4)
    assert kde_eval(est([0.0], k4, 1.0), 0.9) < 0


@pytest.mark.parametrize("family", ["boxcar", "epanechnikov", "gaussian", "double_exponential"])
def test_matches_direct_summation(family):
    rng = np.random.default_rng(3)
    data = rng.normal(size=40)
    h = 0.35
    e = est(data, make_kernel(family), h)
    xs = np.linspace(-3, 3, 37)
    got = kde_eval_points(e, xs)
    want = [oracles.kde(data, x, family, h) for x in xs]
    assert np.allclose(got, want, rtol=0, atol=1e-13)


def test_two_dimensional_matches_direct_summation():
    rng = np.random.default_rng(4)
    data = rng.normal(size=(25, 2))
    e = est(data, make_kernel("epanechnikov", dimension=2), 0.8)
    pts = rng.normal(size=(20, 2))
    want = [oracles.kde(data, p, "epanechnikov", 0.8) for p in pts]
    assert np.allclose(kde_eval_points(e, pts), want, rtol=0, atol=1e-13)


def test_at_observations_and_leave_one_out_follow_sorted_order():
    rng = np.random.default_rng(5)
    data = rng.uniform(size=30)
    e = est(data, EPA, 0.2)
    srt = e.sorted_observations.ravel()
    assert np.all(np.diff(srt) >= 0)
    full = e.at_observations()
    loo = e.at_observations(leave_one_out=True)
    want_full = [oracles.kde(data, x, "epanechnikov", 0.2) for x in srt]
    order = np.argsort(data, kind="stable")
    want_loo = [oracles.kde_loo(data, i, "epanechnikov", 0.2) for i in order]
    assert np.allclose(full, want_full, atol=1e-13)
    assert np.allclose(loo, want_loo, atol=1e-13)


def test_fast_gaussian_path_matches_oracle_on_larger_sample():
    data = sample(normal(), 3000, 11).observations.ravel()
    e = est(data, GAUSS, 0.3)
    xs = np.linspace(-4, 4, 9)
    want = [oracles.kde(data, x, "gaussian", 0.3) for x in xs]
    assert np.allclose(kde_eval_points(e, xs), want, rtol=0, atol=1e-13)


def test_grid_evaluation_equals_pointwise():
    data = sample(normal(), 1000, 2)
    e = DensityEstimate(data, GAUSS, 0.3)
    grid = EvaluationGrid((-3.0,), (3.0,), 601)
    vals = kde_eval_grid(e, grid)
    pts = grid.points()
    idx = np.arange(0, 601, 50)
    pointwise = np.array([kde_eval(e, pts[i]) for i in idx])
    assert np.max(np.abs(vals[idx] - pointwise)) <= 1e-12


def test_three_point_grid():
    grid = EvaluationGrid((-1.0,), (1.0,), 3)
    assert list(kde_eval_grid(est([0.0], BOX, 1.0), grid)) == [0.0, 1.0, 0.0]


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=30),
    st.floats(-100, 100),
    st.floats(-4, 4),
)
def test_translation_equivariance(xs, shift, x):
    data = np.array(xs)
    a = kde_eval(est(data, EPA, 0.4), x)
    b = kde_eval(est(data + shift, EPA, 0.4), x + shift)
    assert abs(a - b) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=30),
    st.floats(0.1, 2.0),
    st.floats(-3, 3),
)
def test_scaling(xs, c, x):
    h = 0.4
    data = np.array(xs)
    a = kde_eval(est(data * c, GAUSS, c * h), c * x) if c * h <= 1 else None
    if a is None:
        return
    b = kde_eval(est(data, GAUSS, h), x)
    assert abs(a - b / c) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=40), st.randoms())
def test_row_permutation_gives_bit_identical_values(xs, rnd):
    perm = list(xs)
    rnd.shuffle(perm)
    grid = EvaluationGrid((-4.0,), (4.0,), 41)
    a = kde_eval_grid(est(xs, GAUSS, 0.3), grid)
    b = kde_eval_grid(est(perm, GAUSS, 0.3), grid)
    assert np.array_equal(a, b)
    assert np.array_equal(est(xs, GAUSS, 0.3).at_observations(), est(perm, GAUSS, 0.3).at_observations())


@pytest.mark.parametrize("family", ["boxcar", "epanechnikov", "polynomial_order_s"])
def test_riemann_sum_over_padded_grid_is_one(family):
    k = make_kernel(family, order=4 if family == "polynomial_order_s" else None)
    data = sample(uniform(), 500, 9)
    e = DensityEstimate(data, k, 0.2)
    grid = EvaluationGrid.covering(data, k, 0.2)
    total = math.fsum(kde_eval_grid(e, grid) * grid.cell_volume)
    assert abs(total - 1.0) <= 1e-3


# ---------------------------------------------------------------- grids


def test_grid_geometry():
    g = EvaluationGrid((0.0, -1.0), (1.0, 1.0), (11, 5))
    assert g.shape == (11, 5) and g.size == 55
    assert np.allclose(g.spacing, [0.1, 0.5])
    assert g.cell_volume == pytest.approx(0.05)
    assert g.cell_diameter == pytest.approx(math.hypot(0.1, 0.5))
    pts = g.points()
    assert pts.shape == (55, 2)
    # row-major: last axis fastest
    assert np.allclose(pts[:5, 0], 0.0) and np.allclose(pts[:5, 1], [-1, -0.5, 0, 0.5, 1])
    assert pts[-1].tolist() == [1.0, 1.0]


def test_grid_validation():
    with pytest.raises(DomainError):
        EvaluationGrid((1.0,), (0.0,), 10)
    with pytest.raises(DomainError):
        EvaluationGrid((0.0,), (1.0,), 1)
    with pytest.raises(DomainError):
        EvaluationGrid((0.0, 0.0), (1.0,), 10)
    with pytest.raises(GridSizeError):
        EvaluationGrid((0.0,) * 3, (1.0,) * 3, 200, cap=1_000_000)


def test_covering_grid_pads_by_kernel_reach():
    data = DataSet([0.0, 1.0])
    g = EvaluationGrid.covering(data, GAUSS, 0.1)
    assert g.lower == (-0.8,) and g.upper == pytest.approx((1.8,))
    assert g.points_per_axis == (401,)
    assert default_points_per_axis(2) == 101 and default_points_per_axis(3) == 41


def test_grid_dimension_mismatch():
    with pytest.raises(DomainError):
        kde_eval_grid(est([0.0], GAUSS, 0.5), EvaluationGrid((0.0, 0.0), (1.0, 1.0), 3))


# ---------------------------------------------------------------- sup deviation


def test_sup_deviation_examples():
    e = est([0.0], BOX, 1.0)
    grid = EvaluationGrid((-1.0,), (1.0,), 3)
    assert sup_deviation(e, lambda p: np.zeros(len(p)), grid) == 1.0
    assert sup_deviation(e, kde_eval_grid(e, grid), grid) == 0.0


def test_sup_deviation_against_brute_force():
    data = sample(normal(), 4, 1).observations.ravel()
    e = est(data, GAUSS, 0.5)
    grid = EvaluationGrid((-4.0,), (4.0,), 161)
    ref = lambda p: smoothed_density(normal(), GAUSS, 0.5, p)
    want = max(
        abs(oracles.kde(data, x, "gaussian", 0.5) - stats.norm.pdf(x, scale=math.sqrt(1.25)))
        for x in grid.points().ravel()
    )
    got = sup_deviation(e, ref, grid)
    assert got > 0 and got == pytest.approx(want, abs=1e-9)


# ---------------------------------------------------------------- smoothed density


def test_smoothed_density_closed_forms():
    assert smoothed_density_eval(normal(), GAUSS, 0.5, 0.0) == pytest.approx(
        1 / math.sqrt(2 * math.pi * 1.25), abs=1e-10
    )
    assert smoothed_density_eval(uniform(), BOX, 1.0, 0.0) == pytest.approx(0.5, abs=1e-12)
    for h in (0.05, 0.3, 1.0):
        assert smoothed_density_eval(uniform(), BOX, h, 0.5) == pytest.approx(1.0, abs=1e-12)


def test_smoothed_gaussian_equals_wider_gaussian_everywhere():
    x = np.linspace(-5, 5, 201)
    got = smoothed_density(normal(), GAUSS, 0.3, x)
    assert np.max(np.abs(got - stats.norm.pdf(x, scale=math.sqrt(1.09)))) < 1e-10


@pytest.mark.parametrize("family", ["boxcar", "epanechnikov"])
def test_smoothed_density_matches_scipy_quad(family):
    model = cosine()
    k = make_kernel(family)
    f1 = lambda y: 1 - math.cos(2 * math.pi * y) if 0 <= y <= 1 else 0.0
    for x in (-0.05, 0.02, 0.3, 0.77, 1.01):
        want = oracles.smoothed(f1, family, 0.15, x, lo=0.0, hi=1.0)
        assert smoothed_density_eval(model, k, 0.15, x) == pytest.approx(want, abs=1e-10)


def test_smoothed_density_accepts_plain_callables():
    pdf = lambda y: stats.norm.pdf(y[:, 0])
    got = smoothed_density_eval(pdf, GAUSS, 0.5, 0.3)
    assert got == pytest.approx(stats.norm.pdf(0.3, scale=math.sqrt(1.25)), abs=1e-10)


def test_product_models_integrate_axis_by_axis():
    k2 = make_kernel("gaussian", dimension=2)
    got = smoothed_density(normal(d=2), k2, 0.4, np.array([[0.0, 0.0], [1.0, -0.5]]))
    want = stats.norm.pdf([0.0, 1.0], scale=math.sqrt(1.16)) * stats.norm.pdf([0.0, -0.5], scale=math.sqrt(1.16))
    assert np.allclose(got, want, atol=1e-10)


def test_smoothed_density_converges_to_pdf():
    errs = [abs(smoothed_density_eval(cosine(), EPA, h, 0.3) - (1 - math.cos(0.6 * math.pi))) for h in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]


def test_quadrature_cap_raises_with_achieved_tolerance():
    # an undeclared jump inside the window defeats the smooth rule
    step = lambda y: (y[:, 0] > 0.123).astype(float)
    with pytest.raises(QuadratureError) as info:
        smoothed_density_eval(step, EPA, 0.5, 0.0, tol=1e-14, max_panels=4)
    assert info.value.achieved > 0


def test_smoothed_density_rejects_non_positive_bandwidth():
    with pytest.raises(DomainError):
        smoothed_density_eval(normal(), GAUSS, 0.0, 0.0)
