"""Shared builders for the test suite.

Every builder takes an explicit ``numpy.random.Generator`` so each test is
deterministic under its own seed.  Builders produce desk-scale data: slopes
within a few units, domains inside [-4, 4]^d.
"""

from __future__ import annotations

import numpy as np

from fenchel_lab import (
    AffinePiece,
    ConvexPolyhedralFunction,
    Grid,
    GridFunction,
    Halfspace,
    PiecewiseMinFunction,
    Polyhedron,
    make_cpf,
)
from fenchel_lab.functions import eval_pmf, singleton_polyhedron


def box(lo, hi) -> Polyhedron:
    """Axis-aligned box {lo <= x <= hi} as a closed polyhedron."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = lo.size
    rows = []
    for i in range(d):
        e = [0.0] * d
        e[i] = 1.0
        rows.append(Halfspace(tuple(e), float(hi[i])))
        e[i] = -1.0
        rows.append(Halfspace(tuple(e), float(-lo[i])))
    return Polyhedron(d, tuple(rows))


def box_vertices(lo, hi) -> list[tuple[float, ...]]:
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    pts = [()]
    for i in range(lo.size):
        pts = [p + (float(v),) for p in pts for v in (lo[i], hi[i])]
    return pts


def random_cpf(
    rng: np.random.Generator,
    dim: int,
    n_pieces: int = 3,
    slope_scale: float = 3.0,
    half_lo: float = 1.0,
    half_hi: float = 3.0,
) -> ConvexPolyhedralFunction:
    """Max of random affine pieces on a random box whose interior holds 0."""
    slopes = rng.uniform(-slope_scale, slope_scale, size=(n_pieces, dim))
    intercepts = rng.uniform(-2.0, 2.0, size=n_pieces)
    half = rng.uniform(half_lo, half_hi, size=dim)
    dom = box(-half, half)
    pieces = [
        AffinePiece(tuple(float(v) for v in s), float(c))
        for s, c in zip(slopes, intercepts)
    ]
    return make_cpf(pieces, dom.halfspaces, dim)


def random_anchored_pair(
    rng: np.random.Generator,
    dim: int,
    n_pieces: int = 3,
    slope_scale: float = 3.0,
):
    """Two convex polyhedral functions whose pieces all meet at a shared point.

    At the anchor every piece of each function is active, so the exact
    subdifferentials there are full polytopes (the convex hulls of the slope
    sets) and the pair is qualified: both domains hold the anchor in their
    interiors.  Returns (f, g, anchor).
    """
    anchor = rng.uniform(-0.5, 0.5, size=dim)

    def one() -> ConvexPolyhedralFunction:
        slopes = rng.uniform(-slope_scale, slope_scale, size=(n_pieces, dim))
        value = rng.uniform(-1.0, 1.0)
        half = rng.uniform(1.0, 2.5, size=dim)
        dom = box(anchor - half, anchor + half)
        pieces = [
            AffinePiece(
                tuple(float(v) for v in s), float(value - float(s @ anchor))
            )
            for s in slopes
        ]
        return make_cpf(pieces, dom.halfspaces, dim)

    return one(), one(), tuple(float(v) for v in anchor)


def random_pmf(
    rng: np.random.Generator,
    dim: int,
    n_branches: int = 3,
    slope_scale: float = 3.0,
    snap: float | None = None,
) -> PiecewiseMinFunction:
    """Min of affine-on-box branches; every branch box sits inside [-3, 3]^d.

    With ``snap`` set, box corners land on multiples of it (so grid samples
    on a matching grid see the exact branch geometry).
    """
    branches = []
    for _ in range(n_branches):
        lo = rng.uniform(-3.0, 0.5, size=dim)
        hi = lo + rng.uniform(0.5, 2.5, size=dim)
        hi = np.minimum(hi, 3.0)
        if snap is not None:
            lo = np.round(lo / snap) * snap
            hi = np.round(hi / snap) * snap
            hi = np.maximum(hi, lo + snap)
        slope = rng.uniform(-slope_scale, slope_scale, size=dim)
        intercept = float(rng.uniform(-2.0, 2.0))
        piece = AffinePiece(tuple(float(v) for v in slope), intercept)
        branches.append(ConvexPolyhedralFunction((piece,), box(lo, hi)))
    return PiecewiseMinFunction(tuple(branches))


def pmf_epigraph_points(f: PiecewiseMinFunction):
    """Vertices of each branch epigraph: (corner, branch value at corner).

    The convex envelope of the whole function is the lower hull of exactly
    these lifted points (branches are affine on boxes), evaluated through the
    epigraph-hull program in ``oracles``.
    """
    pts: list[tuple[float, ...]] = []
    vals: list[float] = []
    for br in f.branches:
        piece = br.pieces[0]
        corners = _polyhedron_box_corners(br.domain)
        for c in corners:
            pts.append(c)
            vals.append(float(np.dot(piece.slope, c) + piece.intercept))
    return np.asarray(pts, dtype=float), np.asarray(vals, dtype=float)


def _polyhedron_box_corners(dom: Polyhedron) -> list[tuple[float, ...]]:
    """Corners of an axis-aligned box given by +/- unit-normal halfspaces."""
    d = dom.dim
    lo = [-np.inf] * d
    hi = [np.inf] * d
    for hs in dom.halfspaces:
        n = np.asarray(hs.normal, dtype=float)
        (idx,) = np.nonzero(n)
        assert idx.size == 1, "builder boxes have axis-aligned rows"
        i = int(idx[0])
        if n[i] > 0:
            hi[i] = min(hi[i], hs.offset / n[i])
        else:
            lo[i] = max(lo[i], hs.offset / n[i])
    return box_vertices(lo, hi)


def sample_pmf_on_grid(f: PiecewiseMinFunction, grid: Grid) -> GridFunction:
    values = np.empty(grid.nodes, dtype=float)
    for idx in np.ndindex(*grid.nodes):
        x = [grid.axis(i)[k] for i, k in enumerate(idx)]
        values[idx] = eval_pmf(f, x)
    return GridFunction(grid, values)


def sample_fn_on_grid(fn, grid: Grid) -> GridFunction:
    values = np.empty(grid.nodes, dtype=float)
    for idx in np.ndindex(*grid.nodes):
        x = np.array([grid.axis(i)[k] for i, k in enumerate(idx)])
        values[idx] = fn(x)
    return GridFunction(grid, values)


def abs_cpf(dim: int = 1, shift: float = 0.0) -> ConvexPolyhedralFunction:
    """|x - shift| in one dimension (full domain)."""
    assert dim == 1
    return make_cpf(
        [AffinePiece((1.0,), -shift), AffinePiece((-1.0,), shift)],
        [],
        1,
    )


def interval_indicator(lo: float, hi: float) -> ConvexPolyhedralFunction:
    return make_cpf(
        [AffinePiece((0.0,), 0.0)],
        [Halfspace((1.0,), hi), Halfspace((-1.0,), -lo)],
        1,
    )


def point_set_pmf(points, values=None) -> PiecewiseMinFunction:
    """Function finite exactly on the listed points (default value 0)."""
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    d = pts[0].size
    if values is None:
        values = [0.0] * len(pts)
    branches = tuple(
        ConvexPolyhedralFunction(
            (AffinePiece((0.0,) * d, float(v)),), singleton_polyhedron(p)
        )
        for p, v in zip(pts, values)
    )
    return PiecewiseMinFunction(branches)
