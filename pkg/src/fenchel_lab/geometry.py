"""Exact polyhedral geometry in dimension <= 4 on top of an LP workhorse.

Sets are intersections of halfspaces ``<normal, x> <= offset`` (optionally
strict).  All numeric verdicts reduce to linear programs solved by HiGHS via
scipy; vertex/ray/line enumeration is brute-force over row subsets, which is
exact and cheap at these dimensions and row counts.

Conventions
-----------
* membership and redundancy use tolerance GEOM_TOL after normalizing
  halfspace normals to unit Euclidean length,
* support values are extended reals: -inf for empty sets, +inf for
  unbounded directions,
* the canonical empty polyhedron is the single trivial row ``0 <= -1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .errors import DimensionError

GEOM_TOL = 1e-9
PRUNE_TOL = 1e-12
BIG_BOX = 1e6

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-9,
}


@dataclass(frozen=True)
class LPResult:
    status: str
    x: tuple[float, ...] | None
    fun: float | None


def solve_lp(
    c: Sequence[float],
    a_ub: np.ndarray | None = None,
    b_ub: np.ndarray | None = None,
    a_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    bounds: Sequence[tuple[float | None, float | None]] | None = None,
) -> LPResult:
    """Minimize c @ x subject to a_ub @ x <= b_ub and a_eq @ x == b_eq.

    Variables are free by default (scipy's default nonnegativity is overridden).
    Returns status "optimal", "infeasible", or "unbounded"; solver breakdowns
    raise RuntimeError.
    """
    c = np.asarray(c, dtype=float)
    if bounds is None:
        bounds = [(None, None)] * c.size
    if a_ub is not None and len(a_ub) == 0:
        a_ub, b_ub = None, None
    if a_eq is not None and len(a_eq) == 0:
        a_eq, b_eq = None, None
    # Degenerate systems can leave HiGHS undecided at the tight tolerances;
    # fall back to default tolerances, then to dual simplex.
    attempts = (
        ("highs", _HIGHS_OPTIONS),
        ("highs", None),
        ("highs-ds", None),
    )
    res = None
    for method, options in attempts:
        res = linprog(
            c,
            A_ub=a_ub,
            b_ub=b_ub,
            A_eq=a_eq,
            b_eq=b_eq,
            bounds=bounds,
            method=method,
            options=options,
        )
        if res.status == 0:
            return LPResult("optimal", tuple(float(v) for v in res.x), float(res.fun))
        if res.status == 2:
            return LPResult("infeasible", None, None)
        if res.status == 3:
            return LPResult("unbounded", None, None)
    assert res is not None
    raise RuntimeError(f"LP solver failure (status {res.status}): {res.message}")


@dataclass(frozen=True)
class Halfspace:
    """The set {x : <normal, x> <= offset} (strict: < instead of <=)."""

    normal: tuple[float, ...]
    offset: float
    strict: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "normal", tuple(float(v) for v in self.normal))
        object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True)
class VRep:
    """Generator form conv(vertices) + cone(rays) + span(lines); all empty = empty set."""

    vertices: tuple[tuple[float, ...], ...]
    rays: tuple[tuple[float, ...], ...]
    lines: tuple[tuple[float, ...], ...]

    @property
    def is_empty(self) -> bool:
        return not (self.vertices or self.rays or self.lines)


@dataclass(frozen=True)
class Polyhedron:
    """Intersection of finitely many halfspaces in R^dim."""

    dim: int
    halfspaces: tuple[Halfspace, ...]

    def __post_init__(self) -> None:
        for hs in self.halfspaces:
            if len(hs.normal) != self.dim:
                raise DimensionError(
                    f"halfspace normal of length {len(hs.normal)} in R^{self.dim}"
                )

    @staticmethod
    def full_space(dim: int) -> "Polyhedron":
        return Polyhedron(dim, ())

    @staticmethod
    def empty(dim: int) -> "Polyhedron":
        return Polyhedron(dim, (Halfspace((0.0,) * dim, -1.0),))

    @staticmethod
    def from_box(dim: int, radius: float, center: Sequence[float] | None = None) -> "Polyhedron":
        if center is None:
            center = (0.0,) * dim
        rows = []
        for i in range(dim):
            e = [0.0] * dim
            e[i] = 1.0
            rows.append(Halfspace(tuple(e), center[i] + radius))
            e[i] = -1.0
            rows.append(Halfspace(tuple(e), radius - center[i]))
        return Polyhedron(dim, tuple(rows))

    @property
    def has_strict(self) -> bool:
        return any(hs.strict for hs in self.halfspaces)

    def closure(self) -> "Polyhedron":
        """Drop strictness flags; the closure of a nonempty mixed-strict set."""
        return Polyhedron(
            self.dim, tuple(Halfspace(h.normal, h.offset) for h in self.halfspaces)
        )


def hs_matrix(poly: Polyhedron) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rows as (A, b, strict_mask); A has shape (n, dim) even when n == 0."""
    n = len(poly.halfspaces)
    a = np.zeros((n, poly.dim))
    b = np.zeros(n)
    strict = np.zeros(n, dtype=bool)
    for i, hs in enumerate(poly.halfspaces):
        a[i] = hs.normal
        b[i] = hs.offset
        strict[i] = hs.strict
    return a, b, strict


def _normalized_rows(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scale rows to unit normals; returns (a, b, zero_row_mask)."""
    norms = np.linalg.norm(a, axis=1)
    zero = norms <= 0.0
    scale = np.where(zero, 1.0, norms)
    return a / scale[:, None], b / scale, zero


def contains_point(poly: Polyhedron, x: Sequence[float], tol: float = GEOM_TOL) -> bool:
    """Membership with normalized-row tolerance; strict rows need positive slack."""
    x = np.asarray(x, dtype=float)
    if x.shape != (poly.dim,):
        raise DimensionError(f"point of shape {x.shape} in R^{poly.dim}")
    a, b, strict = hs_matrix(poly)
    if len(a) == 0:
        return True
    an, bn, zero = _normalized_rows(a, b)
    slack = bn - an @ x
    for i in range(len(a)):
        if zero[i]:
            ok = b[i] > tol if strict[i] else b[i] >= -tol
        else:
            ok = slack[i] > tol if strict[i] else slack[i] >= -tol
        if not ok:
            return False
    return True


def _closed_rows(poly: Polyhedron) -> tuple[np.ndarray, np.ndarray]:
    a, b, _ = hs_matrix(poly)
    return a, b


def max_slack_point(
    poly: Polyhedron,
    slack_rows: str = "all",
    cap: float = 1.0,
    box_radius: float = BIG_BOX,
) -> tuple[tuple[float, ...], float] | None:
    """Point maximizing the minimum normalized slack over selected rows.

    slack_rows: "all" (interior-style), "strict" (only strict rows need slack;
    the nonemptiness certificate for sets with strict faces).  Returns
    (point, achieved_slack) or None when the closed system plus box is
    infeasible.  The slack is capped so the LP is bounded.
    """
    a, b, strict = hs_matrix(poly)
    d = poly.dim
    an, bn, zero = _normalized_rows(a, b)
    rows_a: list[np.ndarray] = []
    rows_b: list[float] = []
    for i in range(len(a)):
        if zero[i]:
            needs_slack = slack_rows == "all" or (slack_rows == "strict" and strict[i])
            if needs_slack and b[i] <= 0.0:
                return None
            if not needs_slack and b[i] < 0.0:
                return None
            continue
        needs_slack = slack_rows == "all" or (slack_rows == "strict" and strict[i])
        coef = np.append(an[i], 1.0 if needs_slack else 0.0)
        rows_a.append(coef)
        rows_b.append(bn[i])
    for i in range(d):
        e = np.zeros(d + 1)
        e[i] = 1.0
        rows_a.append(e.copy())
        rows_b.append(box_radius)
        e[i] = -1.0
        rows_a.append(e)
        rows_b.append(box_radius)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * d + [(None, cap)]
    res = solve_lp(c, np.array(rows_a), np.array(rows_b), bounds=bounds)
    if res.status == "infeasible":
        return None
    if res.status != "optimal":  # pragma: no cover - capped objective
        raise RuntimeError("slack LP unexpectedly unbounded")
    assert res.x is not None
    return res.x[:d], float(-res.fun if res.fun is not None else 0.0)


def is_empty(poly: Polyhedron, tol: float = PRUNE_TOL) -> bool:
    """Emptiness of the set itself (strict rows must admit positive slack)."""
    mode = "strict" if poly.has_strict else "all"
    got = max_slack_point(poly, slack_rows=mode)
    if got is None:
        return True
    if poly.has_strict:
        return got[1] <= tol
    # The slack variable is free, so contradictory closed systems come back
    # "optimal" with a negative best slack rather than infeasible.
    return got[1] < -tol


def support_function(
    poly: Polyhedron,
    direction: Sequence[float],
    box_radius: float | None = None,
) -> float:
    """sup <direction, x> over the closure, optionally truncated to a box.

    Returns -inf for an empty set and +inf when unbounded (no truncation).
    """
    u = np.asarray(direction, dtype=float)
    if u.shape != (poly.dim,):
        raise DimensionError(f"direction of shape {u.shape} in R^{poly.dim}")
    a, b = _closed_rows(poly)
    rows_a = [a] if len(a) else []
    rows_b = [b] if len(a) else []
    if box_radius is not None:
        eye = np.eye(poly.dim)
        rows_a.extend([eye, -eye])
        rows_b.extend([np.full(poly.dim, box_radius)] * 2)
    a_ub = np.vstack(rows_a) if rows_a else None
    b_ub = np.concatenate(rows_b) if rows_b else None
    res = solve_lp(-u, a_ub, b_ub)
    if res.status == "infeasible":
        return -math.inf
    if res.status == "unbounded":
        return math.inf
    assert res.fun is not None
    return -res.fun


def intersect(p: Polyhedron, q: Polyhedron) -> Polyhedron:
    if p.dim != q.dim:
        raise DimensionError(f"intersecting R^{p.dim} with R^{q.dim}")
    return Polyhedron(p.dim, p.halfspaces + q.halfspaces)


def _dedupe_rows(rows: list[np.ndarray], tol: float) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for r in rows:
        if not any(np.max(np.abs(r - k)) <= tol for k in kept):
            kept.append(r)
    return kept


def enumerate_vrep(poly: Polyhedron, tol: float = GEOM_TOL) -> VRep:
    """Vertices, extreme-ray candidates, and lineality basis of the closure.

    Rays may include non-extreme members of the recession cone; consumers
    treating rays as constraints tolerate (and later prune) that redundancy.
    """
    d = poly.dim
    a, b, _ = hs_matrix(poly)
    an, bn, zero = _normalized_rows(a, b)
    keep = []
    for i in range(len(a)):
        if zero[i]:
            if b[i] < -tol:
                return VRep((), (), ())
            continue
        keep.append(i)
    a, b = an[keep], bn[keep]
    if len(a) == 0:
        basis = tuple(tuple(row) for row in np.eye(d))
        return VRep(((0.0,) * d,), (), basis)
    if solve_lp(np.zeros(d), a, b).status == "infeasible":
        return VRep((), (), ())
    lin = null_space(a)
    if lin.shape[1] > 0:
        q = null_space(lin.T)
        lines = tuple(tuple(col) for col in lin.T)
        if q.shape[1] == 0:
            return VRep(((0.0,) * d,), (), lines)
        a2 = a @ q
        core = _vrep_core(a2, b, tol)
        vertices = tuple(tuple(q @ np.asarray(v)) for v in core.vertices)
        rays = tuple(tuple(q @ np.asarray(r)) for r in core.rays)
        return VRep(vertices, rays, lines)
    return _vrep_core(a, b, tol)


def _vrep_core(a: np.ndarray, b: np.ndarray, tol: float) -> VRep:
    """Enumeration for a pointed, nonempty, normalized system."""
    n, m = a.shape
    verts: list[np.ndarray] = []
    for subset in itertools.combinations(range(n), m):
        sub = a[list(subset)]
        try:
            x = np.linalg.solve(sub, b[list(subset)])
        except np.linalg.LinAlgError:
            continue
        if np.max(np.abs(sub @ x - b[list(subset)])) > 1e-7:
            continue
        scale = max(1.0, float(np.max(np.abs(x))))
        if np.all(a @ x <= b + tol * scale):
            verts.append(x)
    verts = _dedupe_rows(verts, 1e-8)
    rays: list[np.ndarray] = []
    if m == 1:
        for sign in (1.0, -1.0):
            r = np.array([sign])
            if np.all(a @ r <= tol):
                rays.append(r)
    else:
        for subset in itertools.combinations(range(n), m - 1):
            sub = a[list(subset)]
            ns = null_space(sub) if subset else np.eye(m)
            if ns.shape[1] != 1:
                continue
            r = ns[:, 0]
            for cand in (r, -r):
                if np.all(a @ cand <= tol):
                    rays.append(cand / np.linalg.norm(cand))
    rays = _dedupe_rows(rays, 1e-8)
    return VRep(
        tuple(tuple(v) for v in verts),
        tuple(tuple(r) for r in rays),
        (),
    )


def prune_halfspaces(poly: Polyhedron, keep_tol: float = PRUNE_TOL) -> Polyhedron:
    """Drop rows whose removal provably leaves the set unchanged (within a big box)."""
    a, b, strict = hs_matrix(poly)
    if np.any(strict):
        raise ValueError("pruning is defined for closed polyhedra only")
    an, bn, zero = _normalized_rows(a, b)
    rows = []
    for i in range(len(a)):
        if zero[i]:
            if b[i] < 0.0:
                return Polyhedron.empty(poly.dim)
            continue
        rows.append((an[i], bn[i]))
    dedup: list[tuple[np.ndarray, float]] = []
    for r, off in rows:
        if not any(
            np.max(np.abs(r - r2)) <= 1e-12 and abs(off - off2) <= 1e-12
            for r2, off2 in dedup
        ):
            dedup.append((r, off))
    if not dedup:
        return Polyhedron.full_space(poly.dim)
    a = np.array([r for r, _ in dedup])
    b = np.array([off for _, off in dedup])
    if solve_lp(np.zeros(poly.dim), a, b).status == "infeasible":
        return Polyhedron.empty(poly.dim)
    eye = np.eye(poly.dim)
    box_a = np.vstack([eye, -eye])
    box_b = np.full(2 * poly.dim, BIG_BOX)
    kept = list(range(len(a)))
    i = 0
    while i < len(kept):
        others = [j for j in kept if j != kept[i]]
        a_ub = np.vstack([a[others], box_a]) if others else box_a
        b_ub = np.concatenate([b[others], box_b]) if others else box_b
        res = solve_lp(-a[kept[i]], a_ub, b_ub)
        redundant = res.status == "optimal" and res.fun is not None and -res.fun <= b[kept[i]] + keep_tol
        if redundant:
            kept.pop(i)
        else:
            i += 1
    return Polyhedron(
        poly.dim, tuple(Halfspace(tuple(a[j]), float(b[j])) for j in kept)
    )


def implicit_equality_rows(poly: Polyhedron, tol: float = GEOM_TOL) -> list[int]:
    """Indices of rows that hold with equality on the whole (closed) set."""
    a, b, _ = hs_matrix(poly)
    an, bn, zero = _normalized_rows(a, b)
    nonzero = ~zero
    out = []
    for i in range(len(a)):
        if zero[i]:
            continue
        res = solve_lp(an[i], an[nonzero], bn[nonzero])
        if res.status == "optimal" and res.fun is not None:
            max_slack = bn[i] - res.fun
            if max_slack <= tol:
                out.append(i)
    return out


def relative_interior_point(
    poly: Polyhedron, tol: float = GEOM_TOL
) -> tuple[tuple[float, ...], float] | None:
    """A point with positive slack on all non-implicit rows, or None if empty."""
    a, b, _ = hs_matrix(poly)
    an, bn, zero = _normalized_rows(a, b)
    implicit = set(implicit_equality_rows(poly, tol))
    d = poly.dim
    rows_a: list[np.ndarray] = []
    rows_b: list[float] = []
    eq_a: list[np.ndarray] = []
    eq_b: list[float] = []
    for i in range(len(a)):
        if zero[i]:
            if b[i] < -tol:
                return None
            continue
        if i in implicit:
            eq_a.append(np.append(an[i], 0.0))
            eq_b.append(bn[i])
        else:
            rows_a.append(np.append(an[i], 1.0))
            rows_b.append(bn[i])
    for i in range(d):
        e = np.zeros(d + 1)
        e[i] = 1.0
        rows_a.append(e.copy())
        rows_b.append(BIG_BOX)
        e[i] = -1.0
        rows_a.append(e)
        rows_b.append(BIG_BOX)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    res = solve_lp(
        c,
        np.array(rows_a),
        np.array(rows_b),
        np.array(eq_a) if eq_a else None,
        np.array(eq_b) if eq_b else None,
        bounds=[(None, None)] * d + [(None, 1.0)],
    )
    if res.status != "optimal" or res.x is None:
        return None
    slack = float(-res.fun if res.fun is not None else 0.0)
    if slack <= 0.0:
        # Non-implicit rows of a nonempty set always admit positive common
        # slack; a nonpositive optimum certifies emptiness.
        return None
    return res.x[:d], slack


def quasi_uniform_directions(dim: int, n: int) -> tuple[tuple[float, ...], ...]:
    """Deterministic direction families: +-1 (1-d), circle angles (2-d), Fibonacci sphere (3-d)."""
    if dim == 1:
        return ((1.0,), (-1.0,))
    if dim == 2:
        out = []
        for k in range(n):
            theta = 2.0 * math.pi * k / n
            out.append((math.cos(theta), math.sin(theta)))
        return tuple(out)
    if dim == 3:
        out = []
        golden = (1.0 + math.sqrt(5.0)) / 2.0
        for k in range(n):
            z = 1.0 - 2.0 * (k + 0.5) / n
            r = math.sqrt(max(0.0, 1.0 - z * z))
            theta = 2.0 * math.pi * k / golden
            out.append((r * math.cos(theta), r * math.sin(theta), z))
        return tuple(out)
    raise DimensionError(f"directions undefined for dimension {dim}")
