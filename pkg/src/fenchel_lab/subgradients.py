"""Approximate subdifferentials, thresholds, relocation, and integration.

The eps-subdifferential of f at x is the polyhedron
``{s : f*(s) + f(x) <= <s, x> + eps}``; it is empty (a value, not an error)
when f(x) is not finite or eps < 0.  Its emptiness threshold equals
``f(x) - f**(x)``.  The relocation procedure turns an approximate subgradient
at x into an exact subgradient at a nearby point, with sqrt(eps) bounds in
the fixed (l1 primal, l-infinity dual) norm pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    EnvelopeImproperError,
    InvalidOracleError,
    NotEpsSubgradientError,
    UnboundedError,
)
from .extended import INF, ExtReal
from .functions import (
    AnyFunction,
    ConvexPolyhedralFunction,
    GridFunction,
    PiecewiseMinFunction,
    PolyhedralFunction,
    eval_cpf,
    eval_function,
    eval_grid,
    function_dim,
)
from .geometry import (
    GEOM_TOL,
    Halfspace,
    Polyhedron,
    contains_point,
    hs_matrix,
    prune_halfspaces,
    solve_lp,
)
from .transforms import conjugate, convex_envelope


@dataclass(frozen=True)
class EpsSubdiffQuery:
    """A validated (function, point, epsilon >= 0) query triple."""

    f: AnyFunction
    x: tuple[float, ...]
    epsilon: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if len(self.x) != function_dim(self.f):
            raise DimensionError("query point dimension != function dimension")
        if self.epsilon < 0.0:
            raise ValueError("queries carry epsilon >= 0")


@dataclass(frozen=True)
class BRWitness:
    """Relocated exact subgradient: zstar in the subdifferential at z.

    norm_primal = |z - x|_1 and norm_dual = |zstar - xstar|_inf are the
    achieved relocation distances (both <= sqrt(eps) by construction).
    """

    z: tuple[float, ...]
    zstar: tuple[float, ...]
    norm_primal: float
    norm_dual: float


@dataclass
class SubgradientOracle:
    """A subgradient selection: point -> one element of the subdifferential.

    When ``source`` is provided, consumers can verify the subgradient
    inequality against it and reject invalid selections.
    """

    fn: Callable[[tuple[float, ...]], Sequence[float]]
    source: ConvexPolyhedralFunction | None = None

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return np.asarray(self.fn(tuple(float(v) for v in x)), dtype=float)


def selection_oracle(f: ConvexPolyhedralFunction) -> SubgradientOracle:
    """Deterministic selection: slope of the smallest-index maximizing piece."""

    def fn(x: tuple[float, ...]) -> tuple[float, ...]:
        vals = [p.value(x) for p in f.pieces]
        return f.pieces[int(np.argmax(vals))].slope

    return SubgradientOracle(fn, f)


def eps_subdiff_set(
    f: PolyhedralFunction, x: Sequence[float], epsilon: float
) -> Polyhedron:
    """The eps-subdifferential polyhedron at x (canonically empty if undefined).

    Rows come from the exact conjugate: one per conjugate piece,
    ``<v_j - x, s> <= eps - f(x) - c_j``, plus the conjugate's domain rows.
    """
    d = function_dim(f)
    pt = np.asarray(x, dtype=float).reshape(-1)
    if pt.size != d:
        raise DimensionError("point dimension != function dimension")
    fx = eval_function(f, pt)
    if epsilon < 0.0 or not math.isfinite(fx):
        return Polyhedron.empty(d)
    star = conjugate(f)
    assert isinstance(star, ConvexPolyhedralFunction)
    rows = list(star.domain.halfspaces)
    for p in star.pieces:
        normal = np.asarray(p.slope) - pt
        rhs = epsilon - fx - p.intercept
        if float(np.max(np.abs(normal))) <= GEOM_TOL:
            # x sits (numerically) on this conjugate piece's vertex, so the
            # row is vertical: it only asserts f(x) - piece bound <= eps and
            # constrains no slope.  Normalizing its near-zero normal would
            # turn one-ulp vertex noise into an O(1) phantom constraint.
            if rhs < -1e-6:
                return Polyhedron.empty(d)
            continue
        rows.append(Halfspace(tuple(normal), rhs))
    return prune_halfspaces(Polyhedron(d, tuple(rows)))


def eps_threshold(f: AnyFunction, x: Sequence[float]) -> ExtReal:
    """Smallest budget with a nonempty approximate subdifferential: f(x) - f**(x).

    Raises DomainError when x is outside the effective domain; returns +inf
    when the envelope is improper (no affine minorant).
    """
    fx = eval_function(f, x)
    if fx == INF:
        raise DomainError("threshold queried outside the effective domain")
    if isinstance(f, ConvexPolyhedralFunction):
        # A closed proper convex polyhedral function is its own closed convex
        # envelope, so the threshold is identically zero; skipping the double
        # conjugation keeps the answer exact instead of 1-ulp positive.
        return 0.0
    try:
        env = convex_envelope(f)
    except EnvelopeImproperError:
        return INF
    if isinstance(env, GridFunction):
        ex = eval_grid(env, x)
    else:
        assert isinstance(env, ConvexPolyhedralFunction)
        ex = eval_cpf(env, x)
    thr = fx - ex
    if thr < 0.0:
        if thr < -1e-7:
            raise RuntimeError(f"envelope exceeds the function by {-thr:.3e}")
        thr = 0.0
    return float(thr)


def _relocation_lp(
    f: ConvexPolyhedralFunction,
    x: np.ndarray,
    xstar: np.ndarray,
    penalty: float,
) -> tuple[np.ndarray, float]:
    """Minimize f(y) - <xstar, y> + penalty * |y - x|_1; returns (argmin, value)."""
    d = f.dim
    # variables: y (d), t, u (d)
    nvar = 2 * d + 1
    rows_a: list[np.ndarray] = []
    rows_b: list[float] = []
    for p in f.pieces:
        row = np.zeros(nvar)
        row[:d] = p.slope
        row[d] = -1.0
        rows_a.append(row)
        rows_b.append(-p.intercept)
    dom_a, dom_b, _ = hs_matrix(f.domain)
    for i in range(len(dom_a)):
        row = np.zeros(nvar)
        row[:d] = dom_a[i]
        rows_a.append(row)
        rows_b.append(float(dom_b[i]))
    for i in range(d):
        row = np.zeros(nvar)
        row[i] = 1.0
        row[d + 1 + i] = -1.0
        rows_a.append(row.copy())
        rows_b.append(float(x[i]))
        row[i] = -1.0
        rows_a.append(row)
        rows_b.append(float(-x[i]))
    c = np.zeros(nvar)
    c[:d] = -xstar
    c[d] = 1.0
    c[d + 1 :] = penalty
    res = solve_lp(c, np.array(rows_a), np.array(rows_b))
    if res.status == "unbounded":
        raise UnboundedError("the relocation objective is unbounded below")
    if res.status != "optimal" or res.x is None:
        raise RuntimeError("relocation LP failed unexpectedly")
    return np.asarray(res.x[:d]), float(res.fun if res.fun is not None else 0.0)


def _nearest_subgradient(
    f: ConvexPolyhedralFunction,
    z: np.ndarray,
    xstar: np.ndarray,
) -> tuple[np.ndarray, float]:
    """argmin over the subdifferential at z of |s - xstar|_inf.

    A tiny budget cushion absorbs solver hair in z; the returned point lies in
    the exact subdifferential polyhedron within 1e-9.
    """
    d = f.dim
    for cushion in (1e-10, 1e-8):
        sub = eps_subdiff_set(f, z, cushion)
        a, b, _ = hs_matrix(sub)
        nvar = d + 1
        rows_a: list[np.ndarray] = []
        rows_b: list[float] = []
        for i in range(len(a)):
            row = np.zeros(nvar)
            row[:d] = a[i]
            rows_a.append(row)
            rows_b.append(float(b[i]))
        for i in range(d):
            row = np.zeros(nvar)
            row[i] = 1.0
            row[d] = -1.0
            rows_a.append(row.copy())
            rows_b.append(float(xstar[i]))
            row[i] = -1.0
            rows_a.append(row)
            rows_b.append(float(-xstar[i]))
        c = np.zeros(nvar)
        c[d] = 1.0
        res = solve_lp(c, np.array(rows_a), np.array(rows_b))
        if res.status == "optimal" and res.x is not None:
            return np.asarray(res.x[:d]), float(res.fun if res.fun is not None else 0.0)
    raise RuntimeError("no subgradient found at the relocated point")


def brondsted_rockafellar(
    f: ConvexPolyhedralFunction,
    x: Sequence[float],
    xstar: Sequence[float],
    epsilon: float,
) -> BRWitness:
    """Relocate an eps-subgradient at x to an exact subgradient nearby.

    Guarantees |z - x|_1 <= sqrt(eps) and |zstar - xstar|_inf <= sqrt(eps).
    Raises NotEpsSubgradientError when xstar fails the membership test and
    UnboundedError when the penalized objective has no minimizer.
    """
    if not isinstance(f, ConvexPolyhedralFunction):
        raise TypeError("relocation operates on polyhedral convex functions")
    if epsilon <= 0.0:
        raise ValueError("relocation needs epsilon > 0")
    d = f.dim
    pt = np.asarray(x, dtype=float).reshape(-1)
    xs = np.asarray(xstar, dtype=float).reshape(-1)
    if pt.size != d or xs.size != d:
        raise DimensionError("point or dual vector dimension != function dimension")
    membership = eps_subdiff_set(f, pt, epsilon)
    if not contains_point(membership, xs, tol=1e-9):
        raise NotEpsSubgradientError(
            "the dual vector is not an approximate subgradient at x"
        )
    z, _ = _relocation_lp(f, pt, xs, math.sqrt(epsilon))
    zstar, _ = _nearest_subgradient(f, z, xs)
    return BRWitness(
        tuple(float(v) for v in z),
        tuple(float(v) for v in zstar),
        float(np.sum(np.abs(z - pt))),
        float(np.max(np.abs(zstar - xs))) if d else 0.0,
    )


def integrate_subdiff(
    oracle: SubgradientOracle,
    x0: Sequence[float],
    f_x0: float,
    target: Sequence[float],
    steps: int,
) -> float:
    """Reconstruct f(target) from f(x0) by a midpoint Riemann sum of the oracle.

    When the oracle carries its source, each midpoint selection is checked
    against the subgradient inequality at the segment endpoints; a violation
    raises InvalidOracleError.
    """
    if steps < 1:
        raise ValueError("integration needs at least one step")
    a = np.asarray(x0, dtype=float).reshape(-1)
    b = np.asarray(target, dtype=float).reshape(-1)
    if a.size != b.size:
        raise DimensionError("segment endpoints of different dimensions")
    delta = (b - a) / steps
    src = oracle.source
    fa = fb = None
    if src is not None:
        fa = eval_cpf(src, a)
        fb = eval_cpf(src, b)
        if fa == INF or fb == INF:
            raise DomainError("integration segment leaves the effective domain")
    acc = 0.0
    for k in range(steps):
        m = a + (k + 0.5) * delta
        g = oracle(m)
        if g.shape != a.shape:
            raise DimensionError("oracle returned a vector of the wrong dimension")
        if src is not None:
            fm = eval_cpf(src, m)
            if fm == INF:
                raise DomainError("integration segment leaves the effective domain")
            for y, fy in ((a, fa), (b, fb)):
                assert fy is not None
                if fy < fm + float(g @ (y - m)) - 1e-7:
                    raise InvalidOracleError(
                        "selection violates the subgradient inequality at a sample"
                    )
        acc += float(g @ delta)
    return float(f_x0 + acc)


def active_subdiff_generators(
    f: ConvexPolyhedralFunction,
    x: Sequence[float],
    tol: float = 1e-9,
) -> tuple[tuple[tuple[float, ...], ...], tuple[tuple[float, ...], ...]]:
    """Generator form of the exact subdifferential at an effective-domain point.

    Returns (slopes of active pieces, outward normals of active domain rows):
    the subdifferential is the convex hull of the former plus the cone of the
    latter.  Raises DomainError outside the domain.
    """
    pt = np.asarray(x, dtype=float).reshape(-1)
    fx = eval_cpf(f, pt)
    if fx == INF:
        raise DomainError("subdifferential generators queried outside the domain")
    scale = max(1.0, abs(fx))
    slopes = tuple(
        p.slope for p in f.pieces if p.value(pt) >= fx - tol * scale
    )
    a, b, _ = hs_matrix(f.domain)
    normals = []
    for i in range(len(a)):
        norm = np.linalg.norm(a[i])
        if norm == 0.0:
            continue
        if (b[i] - a[i] @ pt) / norm <= tol:
            normals.append(tuple(a[i]))
    return slopes, tuple(normals)
