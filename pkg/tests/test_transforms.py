"""Conjugation, envelopes, lsc hulls, inf-convolution, affine minorants."""

from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fenchel_lab import (
    INF,
    AffinePiece,
    ConvexPolyhedralFunction,
    EnvelopeImproperError,
    Grid,
    GridFunction,
    Halfspace,
    ImproperFunctionError,
    PiecewiseMinFunction,
    SlopeRangeWarning,
    build_indicator,
    conjugate,
    convex_envelope,
    eval_function,
    inf_convolution,
    lsc_hull,
    make_cpf,
)
from fenchel_lab.functions import eval_cpf, eval_grid, eval_pmf
from fenchel_lab.geometry import contains_point
from fenchel_lab.transforms import (
    affine_minorant,
    auto_dual_grid,
    conjugate_grid,
    covering_dual_grid,
    cpf_functions_equal,
    legendre_1d,
    legendre_1d_direct,
    minimize_cpf,
)
from helpers import (
    abs_cpf,
    box,
    interval_indicator,
    point_set_pmf,
    random_cpf,
    random_pmf,
    sample_fn_on_grid,
)
from oracles import conjugate_value, envelope_value

seeds = st.integers(min_value=0, max_value=10_000)


class TestConjugateExamples:
    def test_interval_indicator_conjugate_is_abs(self):
        star = conjugate(interval_indicator(-1.0, 1.0))
        assert isinstance(star, ConvexPolyhedralFunction)
        slopes = sorted(p.slope[0] for p in star.pieces)
        intercepts = {round(p.intercept, 12) for p in star.pieces}
        assert slopes == [-1.0, 1.0]
        assert intercepts == {0.0}
        assert star.domain.halfspaces == ()  # finite everywhere
        for s in (-2.0, -0.3, 0.0, 1.7):
            assert eval_cpf(star, (s,)) == pytest.approx(abs(s), abs=1e-12)

    def test_two_point_indicator_conjugate(self):
        f = point_set_pmf([(0.0,), (2.0,)])
        star = conjugate(f)
        for s in np.linspace(-2.0, 2.0, 9):
            assert eval_cpf(star, (s,)) == pytest.approx(max(0.0, 2.0 * s), abs=1e-12)

    def test_half_square_grid_self_conjugate(self):
        grid = Grid((-3.0,), (3.0,), (241,))
        f = sample_fn_on_grid(lambda x: 0.5 * float(x[0]) ** 2, grid)
        star = conjugate_grid(f, Grid((-3.0,), (3.0,), (241,)))
        h = grid.spacing[0]
        xs = star.grid.axis(0)
        err = np.abs(star.values - 0.5 * xs**2)
        assert float(err.max()) <= h * h

    def test_l1_ball_conjugate_is_linf_norm(self):
        l1 = make_cpf(
            [((0.0, 0.0), 0.0)],
            [
                Halfspace((1.0, 1.0), 1.0),
                Halfspace((1.0, -1.0), 1.0),
                Halfspace((-1.0, 1.0), 1.0),
                Halfspace((-1.0, -1.0), 1.0),
            ],
            2,
        )
        star = conjugate(l1)
        for s in [(0.0, 0.0), (1.0, 0.5), (-2.0, 1.0), (0.3, -0.8)]:
            assert eval_cpf(star, s) == pytest.approx(
                max(abs(s[0]), abs(s[1])), abs=1e-9
            )


class TestConjugateProperties:
    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, dim=st.sampled_from([1, 2]))
    def test_matches_direct_lp_oracle(self, seed, dim):
        rng = np.random.default_rng(seed)
        f = random_cpf(rng, dim)
        star = conjugate(f)
        for s in rng.uniform(-4.0, 4.0, size=(6, dim)):
            want = conjugate_value(f, s)
            got = eval_cpf(star, s)
            if math.isinf(want):
                assert got == INF
            else:
                assert got == pytest.approx(want, abs=1e-8)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds)
    def test_young_fenchel_inequality(self, seed):
        rng = np.random.default_rng(seed)
        f = random_cpf(rng, 1)
        star = conjugate(f)
        for _ in range(6):
            x = rng.uniform(-1.0, 1.0, size=1)
            s = rng.uniform(-4.0, 4.0, size=1)
            fx, fs = eval_cpf(f, x), eval_cpf(star, s)
            if math.isinf(fx) or math.isinf(fs):
                continue
            assert fx + fs >= float(s @ x) - 1e-9

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds)
    def test_antitone_in_the_function(self, seed):
        # Raising the function lowers the conjugate: g = max(f, extra) >= f.
        rng = np.random.default_rng(seed)
        f = random_cpf(rng, 1)
        extra = AffinePiece(
            (float(rng.uniform(-3, 3)),), float(rng.uniform(-2, 2))
        )
        g = ConvexPolyhedralFunction(f.pieces + (extra,), f.domain)
        fstar, gstar = conjugate(f), conjugate(g)
        for s in rng.uniform(-4.0, 4.0, size=6):
            fv, gv = eval_cpf(fstar, (s,)), eval_cpf(gstar, (s,))
            assert gv <= fv + 1e-9

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds)
    def test_pmf_conjugate_is_branch_max(self, seed):
        rng = np.random.default_rng(seed)
        f = random_pmf(rng, 1, n_branches=3)
        star = conjugate(f)
        for s in rng.uniform(-4.0, 4.0, size=6):
            want = max(conjugate_value(b, (s,)) for b in f.branches)
            assert eval_cpf(star, (s,)) == pytest.approx(want, abs=1e-8)


class TestLegendre1d:
    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, n=st.integers(min_value=2, max_value=40))
    def test_fast_equals_direct(self, seed, n):
        rng = np.random.default_rng(seed)
        xs = np.sort(rng.uniform(-3.0, 3.0, size=n))
        xs += np.arange(n) * 1e-9  # guard against coincident nodes
        vals = rng.uniform(-2.0, 2.0, size=n)
        duals = np.linspace(-4.0, 4.0, 17)
        fast = legendre_1d(xs, vals, duals)
        direct = legendre_1d_direct(xs, vals, duals)
        assert np.array_equal(fast, direct)

    def test_known_quadratic_samples(self):
        xs = np.linspace(-2.0, 2.0, 81)
        vals = 0.5 * xs**2
        duals = np.linspace(-1.5, 1.5, 7)
        out = legendre_1d(xs, vals, duals)
        assert np.max(np.abs(out - 0.5 * duals**2)) <= (xs[1] - xs[0]) ** 2


class TestEnvelopeExamples:
    def test_two_point_indicator_hull_is_interval(self):
        env = convex_envelope(point_set_pmf([(0.0,), (1.0,)]))
        assert isinstance(env, ConvexPolyhedralFunction)
        assert cpf_functions_equal(env, interval_indicator(0.0, 1.0))

    def test_negative_abs_on_interval_hulls_to_constant(self):
        branches = (
            make_cpf([((1.0,), 0.0)], [Halfspace((1.0,), 0.0), Halfspace((-1.0,), 1.0)], 1),
            make_cpf([((-1.0,), 0.0)], [Halfspace((-1.0,), 0.0), Halfspace((1.0,), 1.0)], 1),
        )
        f = PiecewiseMinFunction(branches)
        env = convex_envelope(f)
        assert isinstance(env, ConvexPolyhedralFunction)
        assert cpf_functions_equal(
            env,
            make_cpf(
                [((0.0,), -1.0)],
                [Halfspace((1.0,), 1.0), Halfspace((-1.0,), 1.0)],
                1,
            ),
        )

    def test_convex_input_is_a_fixed_point(self):
        f = abs_cpf()
        env = convex_envelope(f)
        assert isinstance(env, ConvexPolyhedralFunction)
        assert cpf_functions_equal(env, f)

    def test_improper_input_raises(self):
        # -|x| on the whole line has no affine minorant.
        branches = (
            make_cpf([((1.0,), 0.0)], [Halfspace((1.0,), 0.0)], 1),
            make_cpf([((-1.0,), 0.0)], [Halfspace((-1.0,), 0.0)], 1),
        )
        with pytest.raises(EnvelopeImproperError):
            convex_envelope(PiecewiseMinFunction(branches))

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds, dim=st.sampled_from([1, 2]))
    def test_envelope_below_function_and_hull_exact(self, seed, dim):
        rng = np.random.default_rng(seed)
        f = random_pmf(rng, dim, n_branches=3)
        env = convex_envelope(f)
        from helpers import pmf_epigraph_points

        pts, vals = pmf_epigraph_points(f)
        for _ in range(6):
            x = rng.uniform(-3.0, 3.0, size=dim)
            ev = eval_function(env, x)
            fv = eval_pmf(f, x)
            assert ev <= fv + 1e-9
            want = envelope_value(pts, vals, x)
            if math.isinf(want):
                assert ev == INF
            else:
                assert ev == pytest.approx(want, abs=1e-8)


class TestLscHull:
    def test_isolated_spike_lowered_to_neighbors(self):
        grid = Grid((0.0,), (1.0,), (11,))
        vals = np.zeros(11)
        vals[5] = 5.0
        out = lsc_hull(GridFunction(grid, vals))
        assert out.values[5] == pytest.approx(0.0)
        assert np.allclose(np.delete(out.values, 5), 0.0)

    def test_continuous_data_unchanged(self):
        grid = Grid((-2.0,), (2.0,), (41,))
        f = sample_fn_on_grid(lambda x: float(x[0]) ** 2, grid)
        out = lsc_hull(f)
        assert np.array_equal(out.values, f.values)

    def test_open_interval_endpoints_close(self):
        grid = Grid((0.0,), (1.0,), (5,))
        vals = np.array([INF, 0.0, 0.0, 0.0, INF])
        out = lsc_hull(GridFunction(grid, vals))
        assert out.values[0] == pytest.approx(0.0)
        assert out.values[-1] == pytest.approx(0.0)

    def test_boundary_closes_at_neighbor_level_or_trend(self):
        grid = Grid((0.0,), (1.0,), (5,))
        # Data rising away from the open end: the end closes at the
        # neighbor's level (the extrapolant is floored by the neighbor).
        rising = lsc_hull(GridFunction(grid, np.array([INF, 0.25, 0.5, 0.75, 1.0])))
        assert rising.values[0] == pytest.approx(0.25)
        # Data falling toward the interior: the end continues the trend up.
        falling = lsc_hull(GridFunction(grid, np.array([INF, 0.75, 0.5, 0.25, 0.0])))
        assert falling.values[0] == pytest.approx(1.0)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds)
    def test_idempotent_and_dominated(self, seed):
        rng = np.random.default_rng(seed)
        n = 13
        vals = rng.uniform(-1.0, 1.0, size=n)
        vals[rng.integers(0, n, size=3)] = INF
        if not np.any(np.isfinite(vals)):
            vals[0] = 0.0
        f = GridFunction(Grid((0.0,), (1.0,), (n,)), vals)
        once = lsc_hull(f)
        twice = lsc_hull(once)
        assert np.all(once.values <= f.values)
        assert np.array_equal(once.values, twice.values)


class TestInfConvolution:
    def test_interval_indicators_sum_supports(self):
        f = build_indicator(box([0.0], [1.0]))
        g = build_indicator(box([0.0], [1.0]))
        out = inf_convolution(f, g)
        assert isinstance(out, ConvexPolyhedralFunction)
        assert cpf_functions_equal(out, interval_indicator(0.0, 2.0))

    def test_abs_is_idempotent_under_self_convolution(self):
        out = inf_convolution(abs_cpf(), abs_cpf())
        assert isinstance(out, ConvexPolyhedralFunction)
        assert cpf_functions_equal(out, abs_cpf())

    def test_point_indicator_is_identity(self):
        f = abs_cpf()
        out = inf_convolution(f, build_indicator(box([0.0], [0.0])))
        assert isinstance(out, ConvexPolyhedralFunction)
        assert cpf_functions_equal(out, f)

    def test_shifted_point_translates(self):
        f = interval_indicator(0.0, 1.0)
        out = inf_convolution(f, build_indicator(box([2.0], [2.0])))
        assert isinstance(out, ConvexPolyhedralFunction)
        assert cpf_functions_equal(out, interval_indicator(2.0, 3.0))

    def test_empty_dual_overlap_raises(self):
        f = abs_cpf()  # conjugate domain [-1, 1]
        g = make_cpf([((5.0,), 0.0)], [], 1)  # conjugate domain {5}
        with pytest.raises(ImproperFunctionError):
            inf_convolution(f, g)

    def test_grid_route_matches_polyhedral_on_abs(self):
        grid = Grid((-2.0,), (2.0,), (41,))
        f = sample_fn_on_grid(lambda x: abs(float(x[0])), grid)
        out = inf_convolution(f, f)
        assert isinstance(out, GridFunction)
        xs = out.grid.axis(0)
        inside = np.abs(xs) <= 2.0  # compare where |x| has witnesses y, x-y on-grid
        assert np.max(np.abs(out.values[inside] - np.abs(xs[inside]))) <= 1e-12

    def test_grid_route_needs_matching_spacing(self):
        a = GridFunction(Grid((0.0,), (1.0,), (3,)), np.zeros(3))
        b = GridFunction(Grid((0.0,), (1.0,), (5,)), np.zeros(5))
        with pytest.raises(ValueError):
            inf_convolution(a, b)


class TestAffineMinorant:
    def test_quadratic_grid_has_zero_witness(self):
        grid = Grid((-2.0,), (2.0,), (41,))
        f = sample_fn_on_grid(lambda x: float(x[0]) ** 2, grid)
        w = affine_minorant(f)
        assert w is not None
        xs = grid.axis(0)
        assert np.all(w.slope[0] * xs + w.intercept <= f.values + 1e-9)

    def test_concave_grid_still_minorized_on_its_box(self):
        grid = Grid((-2.0,), (2.0,), (41,))
        f = sample_fn_on_grid(lambda x: -float(x[0]) ** 2, grid)
        w = affine_minorant(f)
        assert w is not None
        xs = grid.axis(0)
        assert np.all(w.slope[0] * xs + w.intercept <= f.values + 1e-9)

    def test_polyhedral_returns_first_piece(self):
        f = abs_cpf()
        assert affine_minorant(f) == f.pieces[0]

    def test_unminorized_min_function_returns_none(self):
        branches = (
            make_cpf([((1.0,), 0.0)], [Halfspace((1.0,), 0.0)], 1),
            make_cpf([((-1.0,), 0.0)], [Halfspace((-1.0,), 0.0)], 1),
        )
        assert affine_minorant(PiecewiseMinFunction(branches)) is None


class TestDualGrids:
    def test_auto_dual_grid_covers_padded_slopes(self):
        grid = Grid((-2.0,), (2.0,), (41,))
        f = sample_fn_on_grid(lambda x: abs(float(x[0])), grid)
        dual = auto_dual_grid(f)
        assert dual.lower[0] <= -2.0 and dual.upper[0] >= 2.0

    def test_covering_dual_grid_unions_boxes_at_finest_spacing(self):
        g1 = Grid((-1.0,), (1.0,), (21,))
        g2 = Grid((0.0,), (4.0,), (11,))
        f1 = GridFunction(g1, np.zeros(21))
        f2 = GridFunction(g2, 3.0 * g2.axis(0))
        cov = covering_dual_grid([f1, f2])
        d1, d2 = auto_dual_grid(f1), auto_dual_grid(f2)
        assert cov.lower[0] <= min(d1.lower[0], d2.lower[0]) + 1e-12
        assert cov.upper[0] >= max(d1.upper[0], d2.upper[0]) - 1e-12
        assert cov.spacing[0] <= min(d1.spacing[0], d2.spacing[0]) + 1e-12

    def test_narrow_dual_grid_warns(self):
        grid = Grid((-2.0,), (2.0,), (21,))
        f = sample_fn_on_grid(lambda x: 3.0 * float(x[0]), grid)
        with pytest.warns(SlopeRangeWarning):
            conjugate_grid(f, Grid((-1.0,), (1.0,), (11,)))

    def test_wide_dual_grid_does_not_warn(self):
        grid = Grid((-2.0,), (2.0,), (21,))
        f = sample_fn_on_grid(lambda x: 3.0 * float(x[0]), grid)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            conjugate_grid(f, Grid((-4.0,), (4.0,), (33,)))


class TestMinimize:
    def test_minimum_of_three_piece_max(self):
        # max(x, -x, x/2 + 1/4): the last piece lifts the kink; the pieces
        # -x and x/2 + 1/4 cross at x = -1/6 with value 1/6.
        f = make_cpf([((1.0,), 0.0), ((-1.0,), 0.0), ((0.5,), 0.25)], [], 1)
        val, arg = minimize_cpf(f)
        assert val == pytest.approx(1.0 / 6.0, abs=1e-9)
        assert arg is not None and arg[0] == pytest.approx(-1.0 / 6.0, abs=1e-8)

    def test_unbounded_below(self):
        f = make_cpf([((1.0,), 0.0)], [], 1)
        val, arg = minimize_cpf(f)
        assert val == -math.inf
        assert arg is None
