"""Conjugation, envelopes, lower semicontinuous hulls, and inf-convolution.

The polyhedral conjugate is computed exactly by enumerating the epigraph's
vertices, rays, and lines: vertices become affine pieces of the conjugate,
non-vertical rays become halfspaces of its domain, and lines become equality
pairs.  The grid conjugate is the classical linear-time discrete Legendre
transform (lower convex hull plus a monotone merge) applied axis by axis.
"""

from __future__ import annotations

import warnings
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import (
    DimensionError,
    EnvelopeImproperError,
    ImproperFunctionError,
    SlopeRangeWarning,
)
from .extended import INF, NEG_INF, ExtReal
from .functions import (
    AffinePiece,
    AnyFunction,
    ConvexPolyhedralFunction,
    Grid,
    GridFunction,
    PiecewiseMinFunction,
    PolyhedralFunction,
    add_polyhedral,
    eval_cpf,
    function_dim,
    is_proper,
    prune_pieces,
)
from .geometry import (
    GEOM_TOL,
    Halfspace,
    Polyhedron,
    enumerate_vrep,
    hs_matrix,
    is_empty,
    max_slack_point,
    prune_halfspaces,
    solve_lp,
)

# ---------------------------------------------------------------------------
# polyhedral conjugation
# ---------------------------------------------------------------------------


def _epigraph(f: ConvexPolyhedralFunction) -> Polyhedron:
    """Epigraph {(x, t) : f(x) <= t} as a polyhedron in R^(d+1)."""
    d = f.dim
    rows = []
    for p in f.pieces:
        rows.append(Halfspace(tuple(p.slope) + (-1.0,), -p.intercept))
    for hs in f.domain.halfspaces:
        rows.append(Halfspace(tuple(hs.normal) + (0.0,), hs.offset))
    return Polyhedron(d + 1, tuple(rows))


@lru_cache(maxsize=512)
def conjugate_cpf(f: ConvexPolyhedralFunction) -> ConvexPolyhedralFunction:
    """Exact conjugate sup_x <s, x> - f(x) of a proper polyhedral convex function."""
    if is_empty(f.domain):
        raise ImproperFunctionError("conjugate of a function with empty domain")
    d = f.dim
    vrep = enumerate_vrep(_epigraph(f))
    if vrep.is_empty or not vrep.vertices:
        raise ImproperFunctionError("epigraph admits no vertex description")
    pieces = []
    for v in vrep.vertices:
        pieces.append(AffinePiece(tuple(v[:d]), -float(v[d])))
    dom_rows: list[Halfspace] = []
    for r in vrep.rays:
        rx, rt = np.asarray(r[:d]), float(r[d])
        if np.linalg.norm(rx) <= 1e-10:
            if rt < -1e-10:
                raise ImproperFunctionError("epigraph recedes downward; value -inf")
            continue
        dom_rows.append(Halfspace(tuple(rx), rt))
    for l in vrep.lines:
        lx, lt = np.asarray(l[:d]), float(l[d])
        if np.linalg.norm(lx) <= 1e-10:
            raise ImproperFunctionError("vertical epigraph line; value -inf")
        dom_rows.append(Halfspace(tuple(lx), lt))
        dom_rows.append(Halfspace(tuple(-lx), -lt))
    domain = prune_halfspaces(Polyhedron(d, tuple(dom_rows)))
    kept = prune_pieces(tuple(pieces), domain)
    return ConvexPolyhedralFunction(kept, domain)


@lru_cache(maxsize=256)
def conjugate_pmf(f: PiecewiseMinFunction) -> ConvexPolyhedralFunction:
    """(min over branches)* = max over branch conjugates, one polyhedral max."""
    branch_conjugates = []
    for b in f.branches:
        if is_empty(b.domain):
            continue
        branch_conjugates.append(conjugate_cpf(b))
    if not branch_conjugates:
        raise ImproperFunctionError("conjugate of a nowhere-finite function")
    pieces: list[AffinePiece] = []
    dom_rows: list[Halfspace] = []
    for c in branch_conjugates:
        pieces.extend(c.pieces)
        dom_rows.extend(c.domain.halfspaces)
    domain = prune_halfspaces(Polyhedron(f.dim, tuple(dom_rows)))
    if is_empty(domain):
        return ConvexPolyhedralFunction(
            (AffinePiece((0.0,) * f.dim, 0.0),), Polyhedron.empty(f.dim)
        )
    kept = prune_pieces(tuple(pieces), domain)
    return ConvexPolyhedralFunction(kept, domain)


# ---------------------------------------------------------------------------
# grid conjugation (discrete Legendre transform)
# ---------------------------------------------------------------------------


def legendre_1d(xs: np.ndarray, vals: np.ndarray, duals: np.ndarray) -> np.ndarray:
    """max_j (s * xs[j] - vals[j]) for each s in duals, in O(n + m).

    +inf samples are skipped; any -inf sample makes every output +inf; an
    all-infinite line yields -inf (supremum over an empty index set).  Ties in
    the merge stick to the smallest node index, and each output is computed by
    the same expression s * x - v a direct scan would use.
    """
    if np.any(vals == NEG_INF):
        return np.full(duals.size, INF)
    finite = np.isfinite(vals)
    if not np.any(finite):
        return np.full(duals.size, NEG_INF)
    px = xs[finite]
    pv = vals[finite]
    hull: list[int] = []
    for j in range(px.size):
        while len(hull) >= 2:
            i1, i2 = hull[-2], hull[-1]
            # pop i2 when it is on or above the chord i1 -> j
            lhs = (px[j] - px[i1]) * pv[i2]
            rhs = (px[j] - px[i2]) * pv[i1] + (px[i2] - px[i1]) * pv[j]
            if lhs >= rhs:
                hull.pop()
            else:
                break
        hull.append(j)
    hx = px[hull]
    hv = pv[hull]
    out = np.empty(duals.size)
    k = 0
    for m in range(duals.size):
        s = duals[m]
        while k + 1 < hx.size and s * hx[k + 1] - hv[k + 1] > s * hx[k] - hv[k]:
            k += 1
        out[m] = s * hx[k] - hv[k]
    return out


def legendre_1d_direct(xs: np.ndarray, vals: np.ndarray, duals: np.ndarray) -> np.ndarray:
    """Quadratic-time reference: the direct supremum with identical conventions."""
    if np.any(vals == NEG_INF):
        return np.full(duals.size, INF)
    finite = np.isfinite(vals)
    if not np.any(finite):
        return np.full(duals.size, NEG_INF)
    px = vals[finite]
    fx = xs[finite]
    out = np.empty(duals.size)
    for m in range(duals.size):
        s = duals[m]
        best = -np.inf
        for j in range(fx.size):
            cand = s * fx[j] - px[j]
            if cand > best:
                best = cand
        out[m] = best
    return out


def _transform_axis(arr: np.ndarray, axis: int, xs: np.ndarray, duals: np.ndarray) -> np.ndarray:
    moved = np.moveaxis(arr, axis, -1)
    lead = moved.shape[:-1]
    flat = moved.reshape(-1, moved.shape[-1])
    out = np.empty((flat.shape[0], duals.size))
    for i in range(flat.shape[0]):
        out[i] = legendre_1d(xs, flat[i], duals)
    return np.moveaxis(out.reshape(lead + (duals.size,)), -1, axis)


def _slope_ranges(f: GridFunction) -> list[tuple[float, float]]:
    """Per-axis [min, max] of finite-sample difference quotients along grid lines."""
    out = []
    for axis in range(f.grid.dim):
        xs = f.grid.axis(axis)
        moved = np.moveaxis(f.values, axis, -1).reshape(-1, f.grid.nodes[axis])
        lo, hi = INF, -INF
        for line in moved:
            idx = np.flatnonzero(np.isfinite(line))
            if idx.size < 2:
                continue
            slopes = np.diff(line[idx]) / np.diff(xs[idx])
            lo = min(lo, float(slopes.min()))
            hi = max(hi, float(slopes.max()))
        if lo <= hi:
            out.append((lo, hi))
        else:
            out.append((0.0, 0.0))
    return out


def conjugate_grid(f: GridFunction, dual_grid: Grid) -> GridFunction:
    """Discrete conjugate of grid samples onto a caller-supplied dual grid.

    Warns with SlopeRangeWarning (never clips silently) when the dual box does
    not cover the observed slope range along some axis.
    """
    if not f.is_proper():
        raise ImproperFunctionError("conjugate of an improper grid function")
    if dual_grid.dim != f.grid.dim:
        raise DimensionError("dual grid dimension differs from the primal grid")
    for axis, (lo, hi) in enumerate(_slope_ranges(f)):
        if lo < dual_grid.lower[axis] - 1e-9 or hi > dual_grid.upper[axis] + 1e-9:
            warnings.warn(
                SlopeRangeWarning(
                    f"axis {axis}: slope range [{lo:.6g}, {hi:.6g}] exceeds the dual box "
                    f"[{dual_grid.lower[axis]:.6g}, {dual_grid.upper[axis]:.6g}]"
                ),
                stacklevel=2,
            )
    arr = f.values
    d = f.grid.dim
    for i, axis in enumerate(reversed(range(d))):
        if i > 0:
            arr = -arr
        arr = _transform_axis(arr, axis, f.grid.axis(axis), dual_grid.axis(axis))
    return GridFunction(dual_grid, arr)


def auto_dual_grid(f: GridFunction, pad: float = 1.0) -> Grid:
    """A dual box covering the observed slope ranges, same node counts."""
    ranges = _slope_ranges(f)
    lower = []
    upper = []
    for axis, (lo, hi) in enumerate(ranges):
        span = max(hi - lo, 1.0)
        lower.append(lo - pad * 0.5 * span)
        upper.append(hi + pad * 0.5 * span)
    return Grid(tuple(lower), tuple(upper), f.grid.nodes)


def covering_dual_grid(fs: Sequence[GridFunction], pad: float = 1.0) -> Grid:
    """One dual grid covering every function's slope range, at the finest spacing.

    Comparing envelopes (or conjugates of envelopes) of related grid functions
    is only meaningful against a *common* set of dual nodes: separately chosen
    dual grids under-estimate each hull differently at nodes whose supporting
    slope falls between dual nodes, and the comparison then reports that
    sampling mismatch instead of a property of the functions.
    """
    if not fs:
        raise ValueError("need at least one grid function")
    autos = [auto_dual_grid(f, pad) for f in fs]
    dim = autos[0].dim
    lower = []
    upper = []
    nodes = []
    for axis in range(dim):
        lo = min(g.lower[axis] for g in autos)
        hi = max(g.upper[axis] for g in autos)
        spacing = min(g.spacing[axis] for g in autos)
        lower.append(lo)
        upper.append(hi)
        nodes.append(max(2, int(np.ceil((hi - lo) / spacing)) + 1))
    return Grid(tuple(lower), tuple(upper), tuple(nodes))


# ---------------------------------------------------------------------------
# dispatch, envelope, hull, inf-convolution
# ---------------------------------------------------------------------------


def conjugate(f: AnyFunction, dual_grid: Grid | None = None) -> AnyFunction:
    """Legendre-Fenchel conjugate in the carrier appropriate to the input.

    Grid samples conjugate onto ``dual_grid`` (required); polyhedral inputs
    conjugate exactly to a polyhedral convex function.
    """
    if isinstance(f, GridFunction):
        if dual_grid is None:
            raise ValueError("grid conjugation needs an explicit dual grid")
        return conjugate_grid(f, dual_grid)
    if isinstance(f, ConvexPolyhedralFunction):
        return conjugate_cpf(f)
    if isinstance(f, PiecewiseMinFunction):
        return conjugate_pmf(f)
    raise TypeError(f"unsupported representation {type(f)!r}")


def convex_envelope(f: AnyFunction, dual_grid: Grid | None = None) -> AnyFunction:
    """Closed convex envelope via double conjugation.

    Raises EnvelopeImproperError when no affine minorant exists (the envelope
    would be identically -inf).
    """
    if isinstance(f, GridFunction):
        if not f.is_proper():
            raise ImproperFunctionError("envelope of an improper grid function")
        if dual_grid is None:
            dual_grid = auto_dual_grid(f)
        star = conjugate_grid(f, dual_grid)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SlopeRangeWarning)
            return conjugate_grid(star, f.grid)
    star = conjugate(f)
    assert isinstance(star, ConvexPolyhedralFunction)
    if is_empty(star.domain):
        raise EnvelopeImproperError(
            "no affine minorant exists; the envelope is identically -inf"
        )
    return conjugate_cpf(star)


def lsc_hull(f: GridFunction) -> GridFunction:
    """Greatest lower semicontinuous minorant estimate on node samples.

    Two local rules iterate to a fixpoint (values only decrease):

    * a finite node drops to the smaller of its per-axis two-neighbor maxima,
      which levels isolated spikes while leaving monotone, convex, or kinked
      interpolation-consistent data untouched,
    * an infinite node drops to the smallest floored linear extrapolation
      max(v[k+u], 2 v[k+u] - v[k+2u]) over axis directions u, which closes
      open-domain boundaries against their sampled trend.

    Limitations, by construction: a strict local maximum of continuous data
    flattens by one neighbor level, and a finite spike adjacent to an infinite
    node survives (there is no two-sided finite evidence against it).
    """
    if not isinstance(f, GridFunction):
        raise TypeError("the lsc hull operates on grid samples")
    if not f.is_proper():
        raise ImproperFunctionError("lsc hull of an improper grid function")
    v = f.values.copy()
    d = f.grid.dim

    def shifted(arr: np.ndarray, axis: int, k: int) -> np.ndarray:
        out = np.full_like(arr, INF)
        src = [slice(None)] * d
        dst = [slice(None)] * d
        n = arr.shape[axis]
        if abs(k) >= n:
            return out
        if k > 0:
            src[axis] = slice(k, n)
            dst[axis] = slice(0, n - k)
        else:
            src[axis] = slice(0, n + k)
            dst[axis] = slice(-k, n)
        out[tuple(dst)] = arr[tuple(src)]
        return out

    for _ in range(4 * v.size):
        finite_cand = np.full_like(v, INF)
        inf_cand = np.full_like(v, INF)
        for axis in range(d):
            up = shifted(v, axis, 1)
            dn = shifted(v, axis, -1)
            finite_cand = np.minimum(finite_cand, np.maximum(up, dn))
            for step in (1, -1):
                n1 = shifted(v, axis, step)
                n2 = shifted(v, axis, 2 * step)
                with np.errstate(invalid="ignore"):
                    ext = np.where(
                        np.isfinite(n1),
                        np.where(np.isfinite(n2), np.maximum(n1, 2.0 * n1 - n2), n1),
                        INF,
                    )
                inf_cand = np.minimum(inf_cand, ext)
        new = np.where(
            v == INF, np.minimum(v, inf_cand), np.minimum(v, finite_cand)
        )
        if np.array_equal(new, v):
            break
        v = new
    return GridFunction(f.grid, v)


def _aligned_result_grid(f: Grid, g: Grid) -> Grid | None:
    for hf, hg in zip(f.spacing, g.spacing):
        if abs(hf - hg) > 1e-12 * max(1.0, abs(hf)):
            return None
    lower = tuple(a + b for a, b in zip(f.lower, g.lower))
    upper = tuple(a + b for a, b in zip(f.upper, g.upper))
    nodes = tuple(nf + ng - 1 for nf, ng in zip(f.nodes, g.nodes))
    return Grid(lower, upper, nodes)


def inf_convolution(
    f: AnyFunction,
    g: AnyFunction,
    result_grid: Grid | None = None,
) -> AnyFunction:
    """Infimal convolution inf_y f(y) + g(x - y) in the carrier of the inputs.

    Grid pair: direct minimization over node pairs onto a result grid (exact
    when spacings align, nearest-node accumulation otherwise).  Polyhedral
    pair: the closed hull, computed exactly through the conjugate identity
    (f box g)* = f* + g* followed by one conjugation; raises
    ImproperFunctionError when the result would be -inf (empty dual overlap).
    """
    if isinstance(f, GridFunction) and isinstance(g, GridFunction):
        if f.grid.dim != g.grid.dim:
            raise DimensionError("convolving functions of different dimensions")
        if not f.is_proper() or not g.is_proper():
            raise ImproperFunctionError("inf-convolution needs proper inputs")
        grid = result_grid or _aligned_result_grid(f.grid, g.grid)
        if grid is None:
            raise ValueError(
                "spacings differ; supply an explicit result grid for the sum box"
            )
        out = np.full(grid.nodes, INF)
        gv = g.values
        g_origin = np.asarray(g.grid.lower)
        h = np.asarray(grid.spacing)
        f_idx = np.argwhere(np.isfinite(f.values))
        g_axes = [g.grid.axis(i) for i in range(g.grid.dim)]
        for idx in f_idx:
            base = f.values[tuple(idx)]
            xf = np.array(
                [f.grid.axis(i)[idx[i]] for i in range(f.grid.dim)]
            )
            g_finite = np.argwhere(np.isfinite(gv))
            for jdx in g_finite:
                xg = np.array([g_axes[i][jdx[i]] for i in range(g.grid.dim)])
                target = xf + xg
                pos = np.rint((target - np.asarray(grid.lower)) / h).astype(int)
                if np.any(pos < 0) or np.any(pos >= np.asarray(grid.nodes)):
                    continue
                cand = base + gv[tuple(jdx)]
                key = tuple(pos)
                if cand < out[key]:
                    out[key] = cand
        if not np.any(np.isfinite(out)):
            raise ImproperFunctionError("inf-convolution result has empty domain")
        return GridFunction(grid, out)
    if isinstance(f, (ConvexPolyhedralFunction, PiecewiseMinFunction)) and isinstance(
        g, (ConvexPolyhedralFunction, PiecewiseMinFunction)
    ):
        fs = conjugate(f)
        gs = conjugate(g)
        total = add_polyhedral(fs, gs)
        assert isinstance(total, ConvexPolyhedralFunction)
        if is_empty(total.domain):
            raise ImproperFunctionError(
                "inf-convolution is -inf everywhere (no common dual slope)"
            )
        return conjugate_cpf(total)
    raise TypeError("inf-convolution expects two grid or two polyhedral inputs")


def affine_minorant(f: AnyFunction) -> AffinePiece | None:
    """A globally valid affine lower bound, or None when none exists."""
    if isinstance(f, ConvexPolyhedralFunction):
        return f.pieces[0]
    if isinstance(f, PiecewiseMinFunction):
        star = conjugate_pmf(f)
        if is_empty(star.domain):
            return None
        got = max_slack_point(star.domain)
        if got is None:
            return None
        a = got[0]
        val = max(p.value(a) for p in star.pieces)
        return AffinePiece(tuple(a), -val)
    if isinstance(f, GridFunction):
        if not f.is_proper():
            return None
        star = conjugate_grid(f, auto_dual_grid(f))
        finite = np.isfinite(star.values)
        if not np.any(finite):
            return None
        flat = np.argmin(np.where(finite, star.values, INF))
        idx = np.unravel_index(flat, star.values.shape)
        a = tuple(star.grid.axis(i)[idx[i]] for i in range(star.grid.dim))
        return AffinePiece(a, -float(star.values[idx]))
    raise TypeError(f"unsupported representation {type(f)!r}")


# ---------------------------------------------------------------------------
# semantic comparison and minimization of polyhedral convex functions
# ---------------------------------------------------------------------------


def cpf_sup_gap(
    f: ConvexPolyhedralFunction,
    g: ConvexPolyhedralFunction,
    box_radius: float = 1e6,
) -> float:
    """sup over (dom f intersect dom g intersect box) of f - g; -inf if empty."""
    best = -INF
    fa, fb, _ = hs_matrix(f.domain)
    ga, gb, _ = hs_matrix(g.domain)
    d = f.dim
    eye = np.eye(d)
    for p in f.pieces:
        rows_a = []
        rows_b = []
        for q in g.pieces:
            diff = np.asarray(q.slope) - np.asarray(p.slope)
            rows_a.append(np.append(diff, 1.0))
            rows_b.append(p.intercept - q.intercept)
        all_rows = np.vstack([fa, ga, eye, -eye])
        all_offs = np.concatenate([fb, gb, np.full(2 * d, box_radius)])
        for row, off in zip(all_rows, all_offs):
            rows_a.append(np.append(row, 0.0))
            rows_b.append(off)
        c = np.zeros(d + 1)
        c[-1] = -1.0
        res = solve_lp(c, np.array(rows_a), np.array(rows_b))
        if res.status == "unbounded":  # pragma: no cover - box keeps it bounded
            return INF
        if res.status == "optimal" and res.fun is not None:
            best = max(best, -res.fun)
    return best


def domain_inclusion_violation(
    inner: Polyhedron, outer: Polyhedron, box_radius: float = 1e6
) -> float:
    """max over rows of outer of (support of inner inside the row's direction - offset).

    Zero or negative means inner is contained in outer (within the box).
    """
    a, b, _ = hs_matrix(outer)
    ia, ib, _ = hs_matrix(inner)
    d = outer.dim
    eye = np.eye(d)
    worst = 0.0
    for i in range(len(a)):
        norm = np.linalg.norm(a[i])
        if norm == 0.0:
            continue
        rows_a = np.vstack([ia, eye, -eye]) if len(ia) else np.vstack([eye, -eye])
        rows_b = np.concatenate([ib, np.full(2 * d, box_radius)])
        res = solve_lp(-a[i] / norm, rows_a, rows_b)
        if res.status == "infeasible":
            return -INF
        if res.status == "optimal" and res.fun is not None:
            worst = max(worst, -res.fun - b[i] / norm)
    return worst


def cpf_functions_equal(
    f: ConvexPolyhedralFunction,
    g: ConvexPolyhedralFunction,
    tol: float = GEOM_TOL,
) -> tuple[bool, float]:
    """Semantic equality of two polyhedral convex functions inside a big box.

    Checks mutual domain inclusion (row-support LPs) and mutual value
    domination (piece LPs); returns (equal, worst_violation).
    """
    f_empty = is_empty(f.domain)
    g_empty = is_empty(g.domain)
    if f_empty or g_empty:
        return (f_empty == g_empty, 0.0 if f_empty == g_empty else INF)
    viol = 0.0
    viol = max(viol, domain_inclusion_violation(f.domain, g.domain))
    viol = max(viol, domain_inclusion_violation(g.domain, f.domain))
    gap_fg = cpf_sup_gap(f, g)
    gap_gf = cpf_sup_gap(g, f)
    for gap in (gap_fg, gap_gf):
        if gap == INF:
            return (False, INF)
        if gap > -INF:
            viol = max(viol, gap)
    return (bool(viol <= tol), float(viol))


def minimize_cpf(
    f: ConvexPolyhedralFunction,
) -> tuple[ExtReal, tuple[float, ...] | None]:
    """(min value, argmin) over the domain; (+inf, None) when the domain is empty,
    (-inf, None) when unbounded below."""
    d = f.dim
    a, b, _ = hs_matrix(f.domain)
    rows_a = []
    rows_b = []
    for p in f.pieces:
        rows_a.append(np.append(np.asarray(p.slope), -1.0))
        rows_b.append(-p.intercept)
    for i in range(len(a)):
        rows_a.append(np.append(a[i], 0.0))
        rows_b.append(b[i])
    c = np.zeros(d + 1)
    c[-1] = 1.0
    res = solve_lp(c, np.array(rows_a), np.array(rows_b))
    if res.status == "infeasible":
        return INF, None
    if res.status == "unbounded":
        return NEG_INF, None
    assert res.x is not None and res.fun is not None
    return float(res.fun), tuple(res.x[:d])
