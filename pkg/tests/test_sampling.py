import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from rkrecon.bounds import TheoryParams
from rkrecon.experiments import exterior_gap
from rkrecon.sampling import (
    Domain1D,
    coverage_bound,
    deterministic_interior,
    empirical_coverage,
    exterior_grid,
    hausdorff_batch,
    hausdorff_distance,
    interior_set,
    random_interior,
    voronoi_weights,
    weighted_sample_norm,
)


def brute_force_hausdorff(points, L, h=0.001):
    grid = np.arange(-L, L + h / 2, h)
    idx = np.clip(np.searchsorted(points, grid), 1, len(points) - 1)
    d = np.minimum(np.abs(grid - points[idx - 1]), np.abs(grid - points[idx]))
    if len(points) == 1:
        d = np.abs(grid - points[0])
    return d.max()


@given(st.integers(0, 10_000), st.integers(1, 30))
def test_deterministic_set_guarantees(seed, L):
    s = deterministic_interior(L, seed)
    assert s.hausdorff <= 0.375 + 1e-12
    assert 8 * L / 3 <= s.size <= 8 * L
    assert abs(s.interior_weights.sum() - 2 * L) <= 1e-10
    assert np.all(s.interior_weights > 0)
    assert L - s.interior[-1] <= 0.25 + 1e-12


def test_deterministic_set_L50():
    for seed in range(20):
        s = deterministic_interior(50, seed)
        assert s.hausdorff <= 0.375
        assert 133 <= s.size <= 400


def test_literal_first_gap_can_exceed_three_eighths():
    worst = max(deterministic_interior(5, seed, literal_first_gap=True).hausdorff for seed in range(200))
    assert worst > 0.375


def test_forced_half_gaps():
    L = 10
    s = deterministic_interior(L, 0, gaps=lambda r: 0.5)
    # first point half a gap in, then gaps of 1/2 until within 1/4 of L
    assert s.size == 4 * L
    assert np.allclose(s.interior_weights, 0.5)
    assert s.hausdorff == pytest.approx(0.25)


def test_deterministic_scale():
    s = deterministic_interior(5, 1, scale=0.1)
    assert s.hausdorff <= 0.0375 + 1e-12
    assert s.size >= 8 * 5 / 3 / 0.1


def test_deterministic_rejects_bad_input():
    with pytest.raises(ValueError):
        deterministic_interior(0.5)
    with pytest.raises(ValueError):
        deterministic_interior(5, scale=0)


def test_random_endpoint_configuration():
    s = interior_set(7.0, [-7.0, 7.0])
    assert s.interior_weights.tolist() == [7.0, 7.0]
    assert s.hausdorff == 7.0


@given(st.integers(0, 10_000), st.integers(2, 400))
def test_random_weights_telescope(seed, N):
    s = random_interior(13.0, N, seed)
    assert abs(s.interior_weights.sum() - 26.0) <= 1e-10
    assert np.all(np.diff(s.interior) > 0)


def test_coincident_points_merge():
    s = interior_set(2.0, [0.5, -1.0, 0.5, 1.0])
    assert s.interior.tolist() == [-1.0, 0.5, 1.0]
    assert s.interior_weights.sum() == pytest.approx(4.0)
    with pytest.raises(ValueError):
        interior_set(2.0, [3.0])
    with pytest.raises(ValueError):
        interior_set(2.0, [])


def test_mean_hausdorff_decreases_with_N():
    rng = np.random.default_rng(3)
    L = 50
    h8 = hausdorff_batch(rng.uniform(-L, L, (200, 8 * L)), L).mean()
    h12 = hausdorff_batch(rng.uniform(-L, L, (200, 12 * L)), L).mean()
    assert h12 < h8


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=40))
def test_hausdorff_matches_brute_force(pts):
    g = np.unique(np.asarray(pts))
    assert abs(hausdorff_distance(g, 5.0) - brute_force_hausdorff(g, 5.0)) <= 0.001


def test_hausdorff_batch_agrees(rng):
    P = rng.uniform(-3, 3, (20, 15))
    ref = [hausdorff_distance(np.sort(p), 3) for p in P]
    assert np.allclose(hausdorff_batch(P, 3), ref)


def test_voronoi_single_point():
    assert voronoi_weights(np.array([0.3]), 4.0).tolist() == [8.0]
    with pytest.raises(ValueError):
        voronoi_weights(np.array([]), 4.0)


def test_exterior_grid_examples():
    pts, w = exterior_grid(50, 0.5, 1)
    assert pts.tolist() == [-50.75, -50.25, 50.25, 50.75]
    assert w.tolist() == [0.5] * 4
    assert exterior_gap(50, 0.0) == pytest.approx(1.15 * 50**-0.5 / 2)
    assert exterior_gap(50, 0.0) == pytest.approx(0.08132, abs=1e-5)
    n1 = exterior_grid(50, 0.08, 10)[0].size
    n2 = exterior_grid(50, 0.04, 10)[0].size
    assert abs(n2 - 2 * n1) <= 2
    with pytest.raises(ValueError):
        exterior_grid(50, 0.0)
    with pytest.raises(ValueError):
        exterior_grid(50, 0.1, 0)


def test_with_exterior_positions():
    s = deterministic_interior(5, 2).with_exterior(0.1, extent=2)
    assert s.exterior.size == 40
    assert s.positions.size == s.size + 40
    assert s.weights[-1] == pytest.approx(0.1)
    assert s.exterior_hausdorff == pytest.approx(0.05)
    assert deterministic_interior(5, 2).exterior_hausdorff == math.inf


def test_weighted_sample_norm_examples(rng):
    s = random_interior(2.0, 17, rng)
    assert weighted_sample_norm(np.ones(s.size), s.interior_weights) == pytest.approx(2.0)
    assert weighted_sample_norm(np.zeros(s.size), s.interior_weights) == 0.0
    with pytest.raises(ValueError):
        weighted_sample_norm(np.ones(3), np.ones(4))


def test_weighted_norm_is_step_function_norm(rng):
    # the weighted sample norm is the L2 norm of the nearest-sample interpolant
    L = 3.0
    s = random_interior(L, 12, rng)
    v = rng.normal(size=s.size)
    x = np.linspace(-L, L, 600_001)
    mids = 0.5 * (s.interior[1:] + s.interior[:-1])
    idx = np.searchsorted(mids, x)
    step = v[idx]
    ref = math.sqrt(integrate.trapezoid(step**2, x))
    assert weighted_sample_norm(v, s.interior_weights) == pytest.approx(ref, rel=1e-4)


def test_domain_constants():
    d = Domain1D(50)
    assert d.measure == 100
    assert (d.corkscrew_c, d.D1, d.D2, d.dim) == (0.5, 2, 2, 1)
    with pytest.raises(ValueError):
        Domain1D(0.5)


def test_coverage_bound_examples():
    p = TheoryParams.interval(50)
    assert coverage_bound(p, 1.0, 0).raw == pytest.approx(1000.0)
    b = coverage_bound(p, 1.0, 10_000)
    assert b.raw == pytest.approx(1000 * 0.999**10_000, rel=1e-12)
    assert b.raw == pytest.approx(0.0451, abs=1e-4)
    vals = [coverage_bound(p, 0.5, N).raw for N in (0, 10, 100, 1000)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert coverage_bound(p, 0.5, 10).clamped == 1.0
    with pytest.raises(ValueError):
        coverage_bound(p, 0.0, 10)
    with pytest.raises(ValueError):
        coverage_bound(p, 1.5, 10)


def test_empirical_coverage_examples():
    assert empirical_coverage(5, 1, 0.5, 50, 1) == 1.0
    assert empirical_coverage(1.0, 4, 2.0, 50, 2) == 0.0
    with pytest.raises(ValueError):
        empirical_coverage(5, 10, 0.5, 0, 1)


def test_empirical_coverage_monotone_in_N():
    freqs = [empirical_coverage(10, N, 0.2, 400, 7) for N in (100, 200, 400, 800)]
    assert all(a >= b for a, b in zip(freqs, freqs[1:]))


def test_empirical_coverage_below_bound():
    L, trials = 5.0, 500
    p = TheoryParams.interval(L)
    for N in (100, 300, 1000):
        for d1 in (0.1, 0.3):
            f = empirical_coverage(L, N, d1, trials, 9)
            b = coverage_bound(p, d1, N).clamped
            assert f <= b + 3 * math.sqrt(max(b * (1 - b), 1e-12) / trials)
