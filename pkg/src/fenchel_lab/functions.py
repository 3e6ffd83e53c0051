"""Function representations: sampled grids, polyhedral convex, piecewise-min.

Three carriers cover the laboratory's scope in R^d, d <= 3:

* ``GridFunction``: extended-real samples on a uniform box grid, evaluated by
  multilinear interpolation (an infinite node poisons every incident cell),
* ``ConvexPolyhedralFunction``: max of finitely many affine pieces restricted
  to a closed polyhedral domain (+inf outside); closed under conjugation,
* ``PiecewiseMinFunction``: pointwise min of convex polyhedral branches, the
  vehicle for nonconvex instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, EmptyDomainError
from .extended import INF, NEG_INF, ExtReal
from .geometry import (
    BIG_BOX,
    GEOM_TOL,
    PRUNE_TOL,
    Halfspace,
    Polyhedron,
    hs_matrix,
    is_empty,
    prune_halfspaces,
    solve_lp,
)


@dataclass(frozen=True)
class Grid:
    """Uniform node lattice on a box: nodes[i] points from lower[i] to upper[i]."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    nodes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "nodes", tuple(int(v) for v in self.nodes))
        if not (len(self.lower) == len(self.upper) == len(self.nodes)):
            raise DimensionError("grid lower/upper/nodes lengths differ")
        if not 1 <= len(self.nodes) <= 3:
            raise DimensionError("grids support dimensions 1 to 3")
        for lo, hi, n in zip(self.lower, self.upper, self.nodes):
            if not lo < hi:
                raise ValueError(f"grid needs lower < upper, got [{lo}, {hi}]")
            if n < 2:
                raise ValueError("grids need at least 2 nodes per axis")

    @property
    def dim(self) -> int:
        return len(self.nodes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (hi - lo) / (n - 1) for lo, hi, n in zip(self.lower, self.upper, self.nodes)
        )

    def axis(self, i: int) -> np.ndarray:
        return np.linspace(self.lower[i], self.upper[i], self.nodes[i])

    def node_coordinates(self) -> np.ndarray:
        """All node points, shape (prod(nodes), dim), C order."""
        axes = [self.axis(i) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(eq=False)
class GridFunction:
    """Extended-real samples over a Grid; values shape must equal grid.nodes."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.nodes:
            raise DimensionError(
                f"values shape {self.values.shape} != grid nodes {self.grid.nodes}"
            )
        if np.any(np.isnan(self.values)):
            raise ValueError("grid values may not be NaN")

    def is_proper(self) -> bool:
        return bool(np.any(np.isfinite(self.values))) and not bool(
            np.any(self.values == NEG_INF)
        )


@dataclass(frozen=True)
class AffinePiece:
    """The affine map x -> <slope, x> + intercept."""

    slope: tuple[float, ...]
    intercept: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "slope", tuple(float(v) for v in self.slope))
        object.__setattr__(self, "intercept", float(self.intercept))
        if not all(np.isfinite(self.slope)) or not np.isfinite(self.intercept):
            raise ValueError("affine pieces must have finite coefficients")

    def value(self, x: Sequence[float]) -> float:
        return float(np.dot(self.slope, np.asarray(x, dtype=float)) + self.intercept)


@dataclass(frozen=True)
class ConvexPolyhedralFunction:
    """max of affine pieces on a closed polyhedral domain, +inf outside."""

    pieces: tuple[AffinePiece, ...]
    domain: Polyhedron

    def __post_init__(self) -> None:
        if not self.pieces:
            raise ValueError("a polyhedral convex function needs at least one piece")
        d = self.domain.dim
        for p in self.pieces:
            if len(p.slope) != d:
                raise DimensionError("piece slope dimension != domain dimension")
        if self.domain.has_strict:
            raise ValueError("polyhedral function domains must be closed (non-strict)")

    @property
    def dim(self) -> int:
        return self.domain.dim


@dataclass(frozen=True)
class PiecewiseMinFunction:
    """Pointwise min of convex polyhedral branches (+inf where all are +inf)."""

    branches: tuple[ConvexPolyhedralFunction, ...]

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("a piecewise-min function needs at least one branch")
        dims = {b.dim for b in self.branches}
        if len(dims) != 1:
            raise DimensionError("branches live in different dimensions")

    @property
    def dim(self) -> int:
        return self.branches[0].dim


AnyFunction = Union[GridFunction, ConvexPolyhedralFunction, PiecewiseMinFunction]
PolyhedralFunction = Union[ConvexPolyhedralFunction, PiecewiseMinFunction]


def function_dim(f: AnyFunction) -> int:
    if isinstance(f, GridFunction):
        return f.grid.dim
    return f.dim


def _check_point(f: AnyFunction, x: Sequence[float]) -> np.ndarray:
    pt = np.asarray(x, dtype=float).reshape(-1)
    if pt.size != function_dim(f):
        raise DimensionError(
            f"point of dimension {pt.size} for a function on R^{function_dim(f)}"
        )
    return pt


def eval_grid(f: GridFunction, x: Sequence[float]) -> ExtReal:
    """Multilinear interpolation; +inf outside the box or on a poisoned stencil.

    Coordinates sitting exactly on a node plane use the minimal face stencil,
    so node values are reproduced exactly.
    """
    pt = _check_point(f, x)
    g = f.grid
    index_sets: list[list[tuple[int, float]]] = []
    for i in range(g.dim):
        h = g.spacing[i]
        t = (pt[i] - g.lower[i]) / h
        if t < -1e-12 or t > g.nodes[i] - 1 + 1e-12:
            return INF
        t = min(max(t, 0.0), float(g.nodes[i] - 1))
        i0 = int(np.floor(t))
        if i0 >= g.nodes[i] - 1:
            i0 = g.nodes[i] - 2
        frac = t - i0
        if frac <= 1e-12:
            index_sets.append([(i0, 1.0)])
        elif frac >= 1.0 - 1e-12:
            index_sets.append([(i0 + 1, 1.0)])
        else:
            index_sets.append([(i0, 1.0 - frac), (i0 + 1, frac)])
    total = 0.0
    corners = list(itertools.product(*index_sets))
    vals = [f.values[tuple(idx for idx, _ in corner)] for corner in corners]
    if any(v == INF for v in vals):
        return INF
    if any(v == NEG_INF for v in vals):
        return NEG_INF
    for corner, v in zip(corners, vals):
        w = 1.0
        for _, wi in corner:
            w *= wi
        total += w * v
    return float(total)


def eval_cpf(f: ConvexPolyhedralFunction, x: Sequence[float]) -> ExtReal:
    pt = _check_point(f, x)
    a, b, _ = hs_matrix(f.domain)
    if len(a):
        norms = np.linalg.norm(a, axis=1)
        for i in range(len(a)):
            if norms[i] == 0.0:
                if b[i] < -GEOM_TOL:
                    return INF
            elif (a[i] @ pt - b[i]) / norms[i] > GEOM_TOL:
                return INF
    return max(p.value(pt) for p in f.pieces)


def eval_cpf_batch(f: ConvexPolyhedralFunction, pts: np.ndarray) -> np.ndarray:
    """Vectorized eval_cpf over rows of pts (k, dim); returns extended reals."""
    pts = np.asarray(pts, dtype=float)
    slopes = np.array([p.slope for p in f.pieces])
    intercepts = np.array([p.intercept for p in f.pieces])
    vals = pts @ slopes.T + intercepts
    out = vals.max(axis=1)
    a, b, _ = hs_matrix(f.domain)
    if len(a):
        norms = np.linalg.norm(a, axis=1)
        safe = np.where(norms == 0.0, 1.0, norms)
        slack = (b[None, :] - pts @ a.T) / safe[None, :]
        outside = np.zeros(len(pts), dtype=bool)
        for i in range(len(a)):
            if norms[i] == 0.0:
                if b[i] < -GEOM_TOL:
                    outside |= True
            else:
                outside |= slack[:, i] < -GEOM_TOL
        out = np.where(outside, INF, out)
    return out


def eval_pmf(f: PiecewiseMinFunction, x: Sequence[float]) -> ExtReal:
    return min(eval_cpf(b, x) for b in f.branches)


def eval_function(f: AnyFunction, x: Sequence[float]) -> ExtReal:
    """Extended-real value of any representation at a point."""
    if isinstance(f, GridFunction):
        return eval_grid(f, x)
    if isinstance(f, ConvexPolyhedralFunction):
        return eval_cpf(f, x)
    if isinstance(f, PiecewiseMinFunction):
        return eval_pmf(f, x)
    raise TypeError(f"unsupported function representation {type(f)!r}")


def is_proper(f: AnyFunction) -> bool:
    """Somewhere finite and nowhere -inf."""
    if isinstance(f, GridFunction):
        return f.is_proper()
    if isinstance(f, ConvexPolyhedralFunction):
        return not is_empty(f.domain)
    return any(not is_empty(b.domain) for b in f.branches)


def prune_pieces(
    pieces: Sequence[AffinePiece], domain: Polyhedron
) -> tuple[AffinePiece, ...]:
    """Drop pieces that never exceed the others by more than PRUNE_TOL on the domain.

    Value-safe: removal perturbs the max by at most PRUNE_TOL inside a big box,
    and pieces winning only outside the box are kept (unbounded advantage LP).
    """
    uniq: list[AffinePiece] = []
    for p in pieces:
        if not any(
            max(abs(a - b) for a, b in zip(p.slope, q.slope)) <= 1e-12
            and abs(p.intercept - q.intercept) <= 1e-12
            for q in uniq
        ):
            uniq.append(p)
    if len(uniq) <= 1:
        return tuple(uniq)
    d = len(uniq[0].slope)
    dom_a, dom_b, _ = hs_matrix(domain)
    eye = np.eye(d)
    box_a = np.vstack([eye, -eye])
    box_b = np.full(2 * d, BIG_BOX)
    kept = list(uniq)
    i = 0
    while i < len(kept) and len(kept) > 1:
        p = kept[i]
        rows_a = []
        rows_b = []
        for q in kept:
            if q is p:
                continue
            diff = np.asarray(q.slope) - np.asarray(p.slope)
            rows_a.append(np.append(diff, 1.0))
            rows_b.append(p.intercept - q.intercept)
        for row, off in zip(dom_a, dom_b):
            rows_a.append(np.append(row, 0.0))
            rows_b.append(off)
        for row, off in zip(box_a, box_b):
            rows_a.append(np.append(row, 0.0))
            rows_b.append(off)
        c = np.zeros(d + 1)
        c[-1] = -1.0
        res = solve_lp(c, np.array(rows_a), np.array(rows_b))
        advantage = INF if res.status == "unbounded" else (-res.fun if res.fun is not None else -INF)
        if res.status == "infeasible":
            break  # empty domain: representation immaterial, keep as-is
        if advantage <= PRUNE_TOL:
            kept.pop(i)
        else:
            i += 1
    return tuple(kept)


def make_cpf(
    pieces: Sequence[tuple[Sequence[float], float] | AffinePiece],
    halfspaces: Sequence[tuple[Sequence[float], float] | Halfspace] = (),
    dim: int | None = None,
    prune: bool = True,
) -> ConvexPolyhedralFunction:
    """Convenience constructor from raw (slope, intercept) and (normal, offset) data."""
    piece_objs = tuple(
        p if isinstance(p, AffinePiece) else AffinePiece(tuple(p[0]), p[1])
        for p in pieces
    )
    if dim is None:
        dim = len(piece_objs[0].slope)
    dom = Polyhedron(
        dim,
        tuple(
            h if isinstance(h, Halfspace) else Halfspace(tuple(h[0]), h[1])
            for h in halfspaces
        ),
    )
    if prune:
        dom = prune_halfspaces(dom)
        piece_objs = prune_pieces(piece_objs, dom)
    return ConvexPolyhedralFunction(piece_objs, dom)


def indicator_cpf(domain: Polyhedron) -> ConvexPolyhedralFunction:
    """0 on the set, +inf outside."""
    return ConvexPolyhedralFunction(
        (AffinePiece((0.0,) * domain.dim, 0.0),), domain
    )


def singleton_polyhedron(point: Sequence[float]) -> Polyhedron:
    pt = np.asarray(point, dtype=float).reshape(-1)
    rows = []
    for i in range(pt.size):
        e = [0.0] * pt.size
        e[i] = 1.0
        rows.append(Halfspace(tuple(e), float(pt[i])))
        e[i] = -1.0
        rows.append(Halfspace(tuple(e), float(-pt[i])))
    return Polyhedron(pt.size, tuple(rows))


def build_indicator(
    region: Union[Polyhedron, Sequence[Sequence[float]]],
) -> PolyhedralFunction:
    """Indicator of a polyhedron (convex) or of a finite point set (piecewise-min).

    Raises EmptyDomainError when the region is empty.
    """
    if isinstance(region, Polyhedron):
        if is_empty(region):
            raise EmptyDomainError("indicator of an empty polyhedron")
        if region.has_strict:
            raise ValueError("indicator domains must be closed")
        return indicator_cpf(region)
    points = [np.asarray(p, dtype=float).reshape(-1) for p in region]
    if not points:
        raise EmptyDomainError("indicator of an empty point set")
    dims = {p.size for p in points}
    if len(dims) != 1:
        raise DimensionError("indicator points of mixed dimensions")
    branches = tuple(indicator_cpf(singleton_polyhedron(p)) for p in points)
    return PiecewiseMinFunction(branches)


def sum_cpf(
    f: ConvexPolyhedralFunction, g: ConvexPolyhedralFunction, prune: bool = True
) -> ConvexPolyhedralFunction:
    """(f + g) as a polyhedral convex function; domain is the intersection."""
    if f.dim != g.dim:
        raise DimensionError("adding functions of different dimensions")
    pieces = tuple(
        AffinePiece(
            tuple(a + b for a, b in zip(p.slope, q.slope)), p.intercept + q.intercept
        )
        for p in f.pieces
        for q in g.pieces
    )
    dom = Polyhedron(f.dim, f.domain.halfspaces + g.domain.halfspaces)
    if prune:
        dom = prune_halfspaces(dom)
        if not is_empty(dom):
            pieces = prune_pieces(pieces, dom)
    return ConvexPolyhedralFunction(pieces, dom)


def _as_branches(f: PolyhedralFunction) -> tuple[ConvexPolyhedralFunction, ...]:
    if isinstance(f, ConvexPolyhedralFunction):
        return (f,)
    return f.branches


def add_polyhedral(f: PolyhedralFunction, g: PolyhedralFunction) -> PolyhedralFunction:
    """f + g over polyhedral representations; min-of-branches distributes over +."""
    sums = []
    for bf in _as_branches(f):
        for bg in _as_branches(g):
            s = sum_cpf(bf, bg)
            if not is_empty(s.domain):
                sums.append(s)
    if not sums:
        dim = function_dim(f)
        sums.append(
            ConvexPolyhedralFunction(
                (AffinePiece((0.0,) * dim, 0.0),), Polyhedron.empty(dim)
            )
        )
    if isinstance(f, ConvexPolyhedralFunction) and isinstance(
        g, ConvexPolyhedralFunction
    ):
        return sums[0]
    if len(sums) == 1:
        return PiecewiseMinFunction((sums[0],))
    return PiecewiseMinFunction(tuple(sums))


def add_grid_cpf(f: GridFunction, g: ConvexPolyhedralFunction) -> GridFunction:
    """Nodewise sum of grid samples and a polyhedral function (+inf dominates)."""
    if f.grid.dim != g.dim:
        raise DimensionError("adding functions of different dimensions")
    pts = f.grid.node_coordinates()
    gv = eval_cpf_batch(g, pts).reshape(f.grid.nodes)
    base = f.values
    with np.errstate(invalid="ignore"):
        raw = base + gv
    out = np.where((base == INF) | (gv == INF), INF, raw)
    return GridFunction(f.grid, out)
