import math

import numpy as np
import pytest

from gradvar.analysis import (
    check_interpolation,
    check_smoothed_gradient_lipschitz,
    check_upper_quadratic,
    choose_radius,
    estimate_max_variation,
    estimate_mean_oscillation,
    mean_width_mc,
    mean_width_named,
    parse_kv,
    report_to_kv,
    sample_goldstein_cloud,
)
from gradvar.core import RngStream, sphere_points
from gradvar.testbed import (
    make_linear,
    make_max_of_linear,
    make_quadratic_growth,
    make_shifted_abs,
    make_smooth_quadratic,
    make_staircase,
)


# ---------------------------------------------------------------------------
# Maximum local variation


def test_max_variation_smooth_quadratic():
    bench = make_smooth_quadratic(3, 1.0)
    report = estimate_max_variation(
        bench.oracle, np.zeros(3), 2.0, r=0.5, n_pairs=20_000, rng=RngStream(1)
    )
    # ||grad(x + ru) - grad(x)|| = r ||u|| <= 0.5, approached from below.
    assert report.max_variation <= 0.5 + 1e-12
    assert report.max_variation > 0.45


def test_max_variation_staircase_region():
    bench = make_staircase(2, 4)
    report = estimate_max_variation(
        bench.oracle,
        region_center=np.array([0.5, 0.0]),
        region_radius=1.5,
        r=1.0,
        n_pairs=100_000,
        rng=RngStream(2),
    )
    assert 0.9 <= report.max_variation <= 1.0 + 1e-12


def test_max_variation_constant_zero():
    const = make_max_of_linear([[0.0, 0.0]], [1.0])
    report = estimate_max_variation(
        const.oracle, np.zeros(2), 1.0, r=1.0, n_pairs=500, rng=RngStream(3)
    )
    assert report.max_variation == 0.0


def test_max_variation_monotone_under_nested_streams():
    bench = make_staircase(2, 3)
    values = [
        estimate_max_variation(
            bench.oracle, np.zeros(2), 1.0, r=0.7, n_pairs=n, rng=RngStream(4)
        ).max_variation
        for n in (100, 500, 2_500, 12_500)
    ]
    assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# Mean oscillation


def test_mean_oscillation_linear_zero():
    bench = make_linear([1.0, -2.0])
    report = estimate_mean_oscillation(
        bench.oracle, [np.zeros(2)], 1.0, rho_grid_size=4, n_per_rho=500,
        rng=RngStream(5),
    )
    assert report.mean_oscillation == 0.0


def test_mean_oscillation_high_dimensional_plateau():
    d, c = 101, 5.0
    bench = make_shifted_abs(d, c)
    report = estimate_mean_oscillation(
        bench.oracle, [np.zeros(d)], 1.0, rho_grid_size=6, n_per_rho=2_000,
        rng=RngStream(6),
    )
    bound = (2.0 / c) * math.exp(-c * c / 2.0)
    assert report.mean_oscillation <= bound + 4 * report.mean_oscillation_stderr + 1e-12


def test_mean_oscillation_below_max_variation():
    bench = make_staircase(2, 2)
    x = np.array([0.5, 0.0])
    avg = estimate_mean_oscillation(
        bench.oracle, [x], 1.0, rho_grid_size=6, n_per_rho=4_000, rng=RngStream(7)
    )
    mx = estimate_max_variation(
        bench.oracle, x, 1.0, r=1.0, n_pairs=50_000, rng=RngStream(8)
    )
    assert avg.mean_oscillation < mx.max_variation


def test_relation_mean_oscillation_vs_doubled_radius_variation():
    # Mean oscillation at radius r never exceeds max variation at radius 2r.
    for bench, region in (
        (make_staircase(2, 3), 1.5),
        (make_shifted_abs(5, 1.0), 1.5),
        (make_quadratic_growth(3), 1.5),
    ):
        r = 0.5
        avg = estimate_mean_oscillation(
            bench.oracle,
            [np.zeros(bench.dim), np.full(bench.dim, 0.4)],
            r,
            rho_grid_size=5,
            n_per_rho=2_000,
            rng=RngStream(9),
        )
        mx = estimate_max_variation(
            bench.oracle, np.zeros(bench.dim), region, r=2 * r, n_pairs=50_000,
            rng=RngStream(10),
        )
        assert (
            avg.mean_oscillation
            <= mx.max_variation + 4 * avg.mean_oscillation_stderr + 1e-9
        )


# ---------------------------------------------------------------------------
# Mean width


def test_mean_width_singleton_and_named():
    report = mean_width_mc([np.array([2.0, -1.0, 0.5])], 100, RngStream(11))
    assert report.width == 0.0 and report.stderr == 0.0
    named = mean_width_named("unit-ball")
    assert named.width == 1.0 and named.stderr == 0.0
    with pytest.raises(KeyError):
        mean_width_named("pentagon")


def test_mean_width_segment_d3():
    points = [np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])]
    report = mean_width_mc(points, 100_000, RngStream(12))
    # Spread along u is 2|u1|; in d=3 the first sphere coordinate is uniform
    # on [-1, 1], so the expected spread is exactly 1.
    assert abs(report.width - 1.0) < 4 * report.stderr


def test_mean_width_square_matches_direct_enumeration():
    square = [np.array(v, dtype=float) for v in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
    mc = mean_width_mc(square, 60_000, RngStream(13))
    # Independent oracle: dense angular quadrature of the support spread.
    thetas = (np.arange(20_000) + 0.5) / 20_000 * 2 * np.pi
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    proj = dirs @ np.stack(square).T
    exact = float(np.mean(proj.max(axis=1) - proj.min(axis=1)))
    assert abs(mc.width - exact) < 4 * mc.stderr


def test_mean_width_empty_cloud():
    with pytest.raises(ValueError):
        mean_width_mc(np.empty((0, 3)), 10, RngStream(0))


def test_goldstein_cloud_linear_and_abs():
    lin = make_linear([2.0, 0.0, 1.0])
    cloud = sample_goldstein_cloud(lin.oracle, np.zeros(3), 1.0, 50, RngStream(14))
    assert np.allclose(cloud, [2.0, 0.0, 1.0])
    assert mean_width_mc(cloud, 200, RngStream(15)).width == 0.0

    absf = make_max_of_linear([[1, 0, 0], [-1, 0, 0]], [0.0, 0.0])
    cloud = sample_goldstein_cloud(absf.oracle, np.zeros(3), 1.0, 4_000, RngStream(16))
    assert set(np.unique(cloud[:, 0])) <= {-1.0, 1.0}
    assert np.all(cloud[:, 1:] == 0.0)
    report = mean_width_mc(cloud, 100_000, RngStream(17))
    assert abs(report.width - 1.0) < 4 * report.stderr


def test_goldstein_cloud_staircase_support():
    bench = make_staircase(2, 4)
    cloud = sample_goldstein_cloud(
        bench.oracle, np.array([0.5, 0.0]), 1.0, 2_000, RngStream(18)
    )
    slopes = np.unique(cloud[:, 0])
    assert set(np.round(slopes * 4).astype(int)) <= {0, 1, 2, 3, 4}
    assert np.all(cloud[:, 1] == 0.0)


# ---------------------------------------------------------------------------
# Radius choice


def test_choose_radius_avg_rule():
    choice = choose_radius("avg-rule", 0.5, [(1.0, 0.1)])
    assert choice.feasible and choice.radius == 1.0  # 1.0 * 0.1 <= 0.25

    fallback = choose_radius("avg-rule", 0.5, [(1.0, 2.0)])
    assert not fallback.feasible and fallback.radius == 1.0

    table = [(0.25, 0.3), (0.5, 0.4), (1.0, 0.9)]
    choice = choose_radius("avg-rule", 0.5, table)
    assert choice.feasible and choice.radius == 0.5  # largest feasible entry


def test_choose_radius_width_rule():
    r_star = 0.1 * math.sqrt(math.e)
    choice = choose_radius(
        "width-rule", 0.1, [(r_star, 1.0)], dim=math.e, width_constant=1.0
    )
    assert choice.feasible
    assert choice.radius == pytest.approx(0.1649, abs=1e-4)


def test_choose_radius_errors():
    with pytest.raises(ValueError):
        choose_radius("avg-rule", 0.1, [])
    with pytest.raises(ValueError):
        choose_radius("width-rule", 0.1, [(1.0, 1.0)])  # missing dim
    with pytest.raises(ValueError):
        choose_radius("nope", 0.1, [(1.0, 1.0)])


# ---------------------------------------------------------------------------
# Structural checkers


def random_pairs(dim, n, lo, hi, seed):
    gen = RngStream(seed).generator()
    xs = gen.uniform(lo, hi, size=(n, dim))
    ys = gen.uniform(lo, hi, size=(n, dim))
    return list(zip(xs, ys))


def test_upper_quadratic_staircase_zero_violations():
    bench = make_staircase(2, 2)
    pairs = random_pairs(2, 10_000, -2.0, 3.0, 20)
    result = check_upper_quadratic(bench.oracle, pairs, r=1.0, max_var=1.0)
    assert result.violations == 0
    assert result.trials == 10_000


def test_upper_quadratic_linear_zero_violations():
    bench = make_linear([1.0, -0.5])
    pairs = random_pairs(2, 2_000, -3.0, 3.0, 21)
    result = check_upper_quadratic(bench.oracle, pairs, r=1.0, max_var=0.5)
    assert result.violations == 0


def test_upper_quadratic_detects_undersized_constant():
    bench = make_staircase(2, 2)
    # A pair crossing the slope jump at the origin with a tiny claimed
    # constant must register as a violation.
    pairs = [(np.array([-0.01, 0.0]), np.array([0.3, 0.0]))]
    result = check_upper_quadratic(bench.oracle, pairs, r=1.0, max_var=0.01)
    assert result.violations == 1


def test_interpolation_vacuous_when_untriggered():
    bench = make_staircase(2, 2)
    pairs = [(np.array([0.1, 0.0]), np.array([0.2, 0.0]))]
    result = check_interpolation(bench.oracle, pairs, r=1.0, max_var=1.0)
    assert result.trials == 0 and result.violations == 0


def test_interpolation_shifted_abs_across_both_kinks():
    bench = make_shifted_abs(5, 1.0)
    x = np.array([-2.0, 0, 0, 0, 0.0])
    y = np.array([2.0, 0, 0, 0, 0.0])
    # Subgradients -e1 vs +e1 differ by 2 > max_var at small radius.
    result = check_interpolation(bench.oracle, [(x, y)], r=0.1, max_var=1.0)
    assert result.trials == 1 and result.violations == 0


def test_interpolation_smooth_quadratic_has_margin():
    bench = make_smooth_quadratic(2, 1.0)
    r = 0.5
    pairs = random_pairs(2, 5_000, -3.0, 3.0, 22)
    result = check_interpolation(bench.oracle, pairs, r=r, max_var=r * 1.0)
    assert result.trials > 0
    assert result.violations == 0
    # Classical smooth interpolation bounds with the full gradient gap, so
    # the excess-over-max_var form leaves real slack on quadratics.
    assert result.worst_margin > 0


def test_checkers_on_catalog_with_tabulated_constants():
    cases = [
        (make_staircase(2, 2), 1.0),
        (make_staircase(3, 5), 1.0),
        (make_shifted_abs(5, 1.0), 1.0),
        (make_quadratic_growth(3), 0.5),
        (make_max_of_linear([[1.0, 0.3], [-0.5, 1.0]], [0.0, 0.2]), 1.0),
        (make_smooth_quadratic(3, 1.3), 1.0),
    ]
    for bench, r in cases:
        max_var = bench.variation_at(r)
        pairs = random_pairs(bench.dim, 10_000, -2.0, 3.0, 23)
        upper = check_upper_quadratic(bench.oracle, pairs, r=r, max_var=max_var)
        assert upper.violations == 0, bench.name
        interp = check_interpolation(bench.oracle, pairs, r=r, max_var=max_var)
        assert interp.violations == 0, bench.name


def test_smoothed_gradient_lipschitz_linear():
    bench = make_linear([1.0, 2.0, -1.0])
    pairs = random_pairs(3, 5, -1.0, 1.0, 24)
    result = check_smoothed_gradient_lipschitz(
        bench.oracle, pairs, r=1.0, mean_osc=0.1, max_var=0.1, d=3,
        samples=500, rng=RngStream(25),
    )
    assert result.violations == 0


def test_smoothed_gradient_lipschitz_abs_along_axis():
    bench = make_max_of_linear([[1, 0, 0], [-1, 0, 0]], [0.0, 0.0])
    pairs = [
        (np.array([t, 0, 0.0]), np.array([t + 0.4, 0, 0.0]))
        for t in (-0.6, -0.2, 0.1, 0.5)
    ]
    result = check_smoothed_gradient_lipschitz(
        bench.oracle, pairs, r=1.0, mean_osc=1.0, max_var=2.0, d=3,
        samples=4_000, rng=RngStream(26),
    )
    assert result.violations == 0


def test_smoothed_gradient_lipschitz_catalog_sweep():
    # Zero violations with metadata-derived constants: mean oscillation upper
    # bounded by twice the max variation at the radius.
    cases = [
        (make_staircase(2, 2), [([0.2, 0.0], [0.6, 0.0]), ([-0.3, 0.0], [0.4, 0.2])]),
        (
            make_shifted_abs(5, 1.0),
            [([0.3, 0, 0, 0, 0.0], [0.7, 0, 0, 0, 0.0])],
        ),
    ]
    for bench, raw_pairs in cases:
        r = 0.5
        max_var = bench.variation_at(r)
        pairs = [(np.asarray(a), np.asarray(b)) for a, b in raw_pairs]
        result = check_smoothed_gradient_lipschitz(
            bench.oracle, pairs, r=r, mean_osc=2.0 * max_var, max_var=max_var,
            d=bench.dim, samples=4_000, rng=RngStream(61),
        )
        assert result.violations == 0, bench.name


def test_smoothed_gradient_lipschitz_quadratic_closed_form():
    curvature = 1.0
    bench = make_smooth_quadratic(2, curvature)
    r = 1.0
    # The smoothed gradient IS curvature * x, so the exact modulus is the
    # curvature; both candidate bounds exceed it.
    pairs = random_pairs(2, 8, -2.0, 2.0, 27)
    result = check_smoothed_gradient_lipschitz(
        bench.oracle, pairs, r=r, mean_osc=curvature * r, max_var=curvature * r,
        d=2, samples=4_000, rng=RngStream(28),
    )
    assert result.violations == 0


# ---------------------------------------------------------------------------
# Serialization


def test_kv_round_trip():
    bench = make_linear([1.0])
    report = estimate_max_variation(
        bench.oracle, np.zeros(1), 1.0, r=1.0, n_pairs=10, rng=RngStream(29)
    )
    text = report_to_kv(report)
    parsed = parse_kv(text)
    assert parsed["r"] == "1"
    assert float(parsed["max_variation"]) == report.max_variation
    assert parsed["pairs_sampled"] == "10"
    with pytest.raises(ValueError):
        parse_kv("not a kv line")
