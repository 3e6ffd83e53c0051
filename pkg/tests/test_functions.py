"""Function representations: evaluation semantics, constructors, sums."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fenchel_lab import (
    INF,
    AffinePiece,
    ConvexPolyhedralFunction,
    DimensionError,
    EmptyDomainError,
    Grid,
    GridFunction,
    PiecewiseMinFunction,
    build_indicator,
    eval_function,
    is_proper,
    make_cpf,
)
from fenchel_lab.functions import (
    add_grid_cpf,
    add_polyhedral,
    eval_cpf,
    eval_grid,
    eval_pmf,
    prune_pieces,
    singleton_polyhedron,
    sum_cpf,
)
from fenchel_lab.geometry import Halfspace, Polyhedron, contains_point, is_empty
from helpers import abs_cpf, box, interval_indicator, point_set_pmf, random_cpf


class TestEvaluation:
    def test_indicator_membership_values(self):
        ind = interval_indicator(-1.0, 1.0)
        assert eval_cpf(ind, (0.0,)) == 0.0
        assert eval_cpf(ind, (2.0,)) == INF

    def test_affine_max(self):
        f = make_cpf([((1.0,), 0.0), ((2.0,), -1.0)], [], 1)
        assert eval_cpf(f, (2.0,)) == pytest.approx(3.0)
        assert eval_cpf(f, (0.0,)) == pytest.approx(0.0)
        assert eval_cpf(f, (-1.0,)) == pytest.approx(-1.0)

    def test_pmf_takes_branchwise_min(self):
        f = point_set_pmf([(0.0,), (2.0,)], values=[1.0, -1.0])
        assert eval_pmf(f, (0.0,)) == 1.0
        assert eval_pmf(f, (2.0,)) == -1.0
        assert eval_pmf(f, (1.0,)) == INF

    def test_grid_interpolates_between_nodes(self):
        grid = Grid((0.0,), (1.0,), (3,))
        gf = GridFunction(grid, np.array([0.0, 1.0, 4.0]))
        assert eval_grid(gf, (0.25,)) == pytest.approx(0.5)
        assert eval_grid(gf, (0.75,)) == pytest.approx(2.5)

    def test_grid_outside_box_is_inf(self):
        grid = Grid((0.0,), (1.0,), (3,))
        gf = GridFunction(grid, np.array([0.0, 1.0, 4.0]))
        assert eval_grid(gf, (1.5,)) == INF
        assert eval_grid(gf, (-0.1,)) == INF

    def test_grid_inf_node_dominates_its_cells(self):
        grid = Grid((0.0,), (1.0,), (3,))
        gf = GridFunction(grid, np.array([0.0, INF, 0.0]))
        assert eval_grid(gf, (0.25,)) == INF

    def test_2d_bilinear_interpolation(self):
        grid = Grid((0.0, 0.0), (1.0, 1.0), (2, 2))
        gf = GridFunction(grid, np.array([[0.0, 1.0], [1.0, 2.0]]))
        assert eval_grid(gf, (0.5, 0.5)) == pytest.approx(1.0)

    def test_eval_function_dispatches(self):
        assert eval_function(abs_cpf(), (-2.0,)) == pytest.approx(2.0)
        assert eval_function(point_set_pmf([(0.0,)]), (0.0,)) == 0.0
        grid = Grid((0.0,), (1.0,), (2,))
        assert eval_function(GridFunction(grid, np.array([1.0, 2.0])), (0.0,)) == 1.0

    def test_dimension_mismatch_raises(self):
        with pytest.raises(DimensionError):
            eval_cpf(abs_cpf(), (0.0, 0.0))


class TestConstructors:
    def test_make_cpf_infers_dimension(self):
        f = make_cpf([((1.0, 0.0), 0.0)])
        assert f.dim == 2

    def test_nan_grid_values_rejected(self):
        grid = Grid((0.0,), (1.0,), (2,))
        with pytest.raises(ValueError):
            GridFunction(grid, np.array([0.0, float("nan")]))

    def test_grid_needs_two_nodes(self):
        with pytest.raises(ValueError):
            Grid((0.0,), (1.0,), (1,))

    def test_strict_domain_rejected(self):
        dom = Polyhedron(1, (Halfspace((1.0,), 0.0, strict=True),))
        with pytest.raises(ValueError):
            ConvexPolyhedralFunction((AffinePiece((0.0,), 0.0),), dom)

    def test_build_indicator_polyhedron(self):
        ind = build_indicator(box([-1.0], [1.0]))
        assert eval_function(ind, (0.5,)) == 0.0
        assert eval_function(ind, (1.5,)) == INF

    def test_build_indicator_points(self):
        ind = build_indicator([(0.0,), (2.0,)])
        assert isinstance(ind, PiecewiseMinFunction)
        assert eval_function(ind, (2.0,)) == 0.0
        assert eval_function(ind, (1.0,)) == INF

    def test_build_indicator_empty_rejected(self):
        with pytest.raises(EmptyDomainError):
            build_indicator([])
        with pytest.raises(EmptyDomainError):
            build_indicator(Polyhedron.empty(1))

    def test_singleton_polyhedron_is_the_point(self):
        p = singleton_polyhedron((1.0, -2.0))
        assert contains_point(p, (1.0, -2.0))
        assert not contains_point(p, (1.0, -1.9))


class TestProperness:
    def test_cpf_on_nonempty_domain_is_proper(self):
        assert is_proper(abs_cpf())

    def test_empty_domain_is_improper(self):
        f = ConvexPolyhedralFunction(
            (AffinePiece((0.0,), 0.0),), Polyhedron.empty(1)
        )
        assert not is_proper(f)

    def test_grid_all_inf_is_improper(self):
        grid = Grid((0.0,), (1.0,), (2,))
        assert not is_proper(GridFunction(grid, np.array([INF, INF])))


class TestPruning:
    def test_dominated_piece_dropped(self):
        f = make_cpf(
            [((1.0,), 0.0), ((1.0,), -5.0)],  # second strictly below the first
            [Halfspace((1.0,), 2.0), Halfspace((-1.0,), 2.0)],
            1,
        )
        assert len(f.pieces) == 1

    def test_pruning_preserves_values(self):
        pieces = (
            AffinePiece((1.0,), 0.0),
            AffinePiece((-1.0,), 0.0),
            AffinePiece((0.5,), -0.1),
        )
        dom = box([-2.0], [2.0])
        kept = prune_pieces(pieces, dom)
        full = ConvexPolyhedralFunction(pieces, dom)
        slim = ConvexPolyhedralFunction(kept, dom)
        for x in np.linspace(-2.0, 2.0, 17):
            assert eval_cpf(slim, (x,)) == pytest.approx(
                eval_cpf(full, (x,)), abs=1e-9
            )


class TestSums:
    def test_sum_cpf_adds_values_and_intersects_domains(self):
        f = abs_cpf()
        g = interval_indicator(0.0, 2.0)
        h = sum_cpf(f, g)
        assert eval_cpf(h, (1.0,)) == pytest.approx(1.0)
        assert eval_cpf(h, (-0.5,)) == INF

    def test_sum_with_disjoint_domains_is_improper(self):
        f = interval_indicator(-2.0, -1.0)
        g = interval_indicator(1.0, 2.0)
        h = sum_cpf(f, g)
        assert is_empty(h.domain)
        assert not is_proper(h)

    def test_add_polyhedral_distributes_over_branches(self):
        f = point_set_pmf([(0.0,), (1.0,)])
        g = abs_cpf()
        h = add_polyhedral(f, g)
        assert eval_function(h, (0.0,)) == pytest.approx(0.0)
        assert eval_function(h, (1.0,)) == pytest.approx(1.0)
        assert eval_function(h, (0.5,)) == INF

    def test_add_polyhedral_drops_empty_branches(self):
        f = point_set_pmf([(0.0,), (5.0,)])
        g = interval_indicator(-1.0, 1.0)
        h = add_polyhedral(f, g)
        assert isinstance(h, PiecewiseMinFunction)
        assert eval_function(h, (0.0,)) == 0.0
        assert eval_function(h, (5.0,)) == INF

    def test_add_grid_cpf_masks_outside(self):
        grid = Grid((-1.0,), (1.0,), (5,))
        gf = GridFunction(grid, np.zeros(5))
        h = add_grid_cpf(gf, interval_indicator(0.0, 1.0))
        assert eval_grid(h, (0.5,)) == 0.0
        assert h.values[0] == INF  # node -1 is outside [0, 1]


class TestFuzzedEvaluation:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000), dim=st.sampled_from([1, 2]))
    def test_cpf_eval_matches_direct_max(self, seed, dim):
        rng = np.random.default_rng(seed)
        f = random_cpf(rng, dim)
        x = rng.uniform(-0.5, 0.5, size=dim)
        got = eval_cpf(f, x)
        want = max(p.value(x) for p in f.pieces)
        assert got == pytest.approx(want, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_sum_cpf_pointwise(self, seed):
        rng = np.random.default_rng(seed)
        f = random_cpf(rng, 1)
        g = random_cpf(rng, 1)
        h = sum_cpf(f, g)
        for x in rng.uniform(-3.5, 3.5, size=8):
            fv, gv = eval_cpf(f, (x,)), eval_cpf(g, (x,))
            want = INF if INF in (fv, gv) else fv + gv
            assert eval_cpf(h, (x,)) == pytest.approx(want, abs=1e-9)
