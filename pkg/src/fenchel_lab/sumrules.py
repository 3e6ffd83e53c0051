"""Verifiers for the approximate sum rules and their equivalent statements.

The central object is the pair union at a point x and budget eps,

    U(eps) = { s1 + s2 : defect_f(s1) + defect_g(s2) <= eps },

where ``defect_h(s) = h*(s) + h(x) - <s, x>`` is the (nonnegative)
Young-Fenchel defect.  U(eps) equals the union over all splits
eps1 + eps2 = eps of Minkowski sums of the eps1/eps2-subdifferentials, and is
the linear image of a polyhedron, hence closed; its support function in any
direction is a single LP.  The verdicts compare U(eps) against
``eps_subdiff_set(f + g, x, eps)`` along quasi-uniform directions (truncated
to a box) plus exact vertex-membership checks.  One containment,
U(eps) subset-of the left side, holds unconditionally, which makes the
combined support/vertex comparison decisive for the equality verdicts.
Finite-split unions are also computed and reported as diagnostics; they are
never the verdict path because their discretization bias is O(eps/splits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    EmptyDomainError,
    HypothesisError,
    NotEpsSubgradientError,
    ScopeError,
)
from .extended import INF, NEG_INF, is_finite
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
    eval_function,
    eval_grid,
    function_dim,
    is_proper,
    sum_cpf,
)
from .geometry import (
    GEOM_TOL,
    Halfspace,
    Polyhedron,
    enumerate_vrep,
    hs_matrix,
    implicit_equality_rows,
    intersect,
    is_empty,
    quasi_uniform_directions,
    solve_lp,
    support_function,
)
from .subgradients import (
    active_subdiff_generators,
    brondsted_rockafellar,
    eps_subdiff_set,
    eps_threshold,
)
from .transforms import (
    affine_minorant,
    conjugate,
    conjugate_grid,
    convex_envelope,
    covering_dual_grid,
    cpf_functions_equal,
    cpf_sup_gap,
    domain_inclusion_violation,
    inf_convolution,
)

VERDICT_TOL = 1e-6
_DEFAULT_DIRECTIONS = {1: 2, 2: 64, 3: 256}
_DIAG_DIRECTIONS = 8
_QUAL_BOX = 1e6


def _directed_gap(a: float, b: float) -> float:
    """a - b with empty-set supports: both empty compare as zero gap."""
    if a == NEG_INF and b == NEG_INF:
        return 0.0
    if b == NEG_INF:
        return INF
    if a == NEG_INF:
        return NEG_INF
    return a - b


class Rule(Enum):
    """The verified statements; members carry their report labels."""

    SUMM1 = "SUMM1"
    SUM1B = "SUM1B"
    SUM1D = "SUM1D"
    EQUALITY = "EQUALITY"
    CONJ_IDENTITY = "CONJ_IDENTITY"
    EXACT_RULE = "EXACT_RULE"
    INTERSECTION_CLOSURE = "INTERSECTION_CLOSURE"


class QualificationStatus(Enum):
    CONTINUITY_POINT = "CONTINUITY_POINT"
    RI_OVERLAP = "RI_OVERLAP"
    NONE = "NONE"


@dataclass(frozen=True)
class SetCompareReport:
    """Truncated support-function comparison of two sets."""

    hausdorff_truncated: float
    box_radius: float
    directions_tested: int
    containment_ab: bool
    containment_ba: bool


@dataclass(frozen=True)
class RuleStatus:
    """Verdict for a single statement: holds iff residual <= tolerance."""

    rule: Rule
    holds: bool
    residual: float
    tolerance: float
    detail: SetCompareReport | float
    diagnostics: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class EquivalenceReport:
    """The four statements' verdicts plus their predicted co-occurrence."""

    statuses: tuple[RuleStatus, RuleStatus, RuleStatus, RuleStatus]
    consistent: bool


@dataclass(frozen=True)
class WitnessRow:
    n: int
    x_n: tuple[float, ...]
    y_n: tuple[float, ...]
    xstar_n: tuple[float, ...]
    ystar_n: tuple[float, ...]
    sum_deviation: float
    inner_f: float
    inner_g: float
    value_gap_f: float
    value_gap_g: float


@dataclass(frozen=True)
class WitnessTable:
    """Relocated approximate-subgradient sequences for a sum decomposition."""

    rows: tuple[WitnessRow, ...]
    x: tuple[float, ...]
    xstar: tuple[float, ...]
    split_residuals: tuple[float, ...]

    def chain_bound(self, n: int) -> float:
        """Bound on the dual-sum deviation at step n, from the relocation chain."""
        eps = 2.0 ** (-n)
        xnorm = max(abs(v) for v in self.xstar) if self.xstar else 0.0
        return eps * eps + eps * (2.0 + eps * eps + xnorm)

    def convergence_columns(self, row: WitnessRow) -> tuple[float, ...]:
        return (
            row.sum_deviation,
            row.inner_f,
            row.inner_g,
            row.value_gap_f,
            row.value_gap_g,
        )


def _direction_count(dim: int, n_directions: int | None) -> int:
    if n_directions is None:
        return _DEFAULT_DIRECTIONS[dim]
    if n_directions < 1:
        raise ValueError("need at least one comparison direction")
    return n_directions


def _truncated_support(poly: Polyhedron, w: np.ndarray, box_radius: float) -> float:
    return support_function(poly, w, box_radius=box_radius)


def _point_distance(poly: Polyhedron, v: np.ndarray) -> float:
    """min over the closed set of the l-infinity distance to v (INF if empty)."""
    d = poly.dim
    a, b, _ = hs_matrix(poly)
    nvar = d + 1
    rows_a: list[np.ndarray] = []
    rows_b: list[float] = []
    for i in range(len(a)):
        rows_a.append(np.append(a[i], 0.0))
        rows_b.append(float(b[i]))
    for i in range(d):
        row = np.zeros(nvar)
        row[i] = 1.0
        row[d] = -1.0
        rows_a.append(row.copy())
        rows_b.append(float(v[i]))
        row[i] = -1.0
        rows_a.append(row)
        rows_b.append(float(-v[i]))
    c = np.zeros(nvar)
    c[d] = 1.0
    res = solve_lp(c, np.array(rows_a), np.array(rows_b))
    if res.status == "infeasible":
        return INF
    assert res.status == "optimal" and res.fun is not None
    return max(0.0, float(res.fun))


def _box_vertices(poly: Polyhedron, box_radius: float) -> tuple[np.ndarray, ...]:
    boxed = intersect(poly.closure(), Polyhedron.from_box(poly.dim, box_radius))
    return tuple(np.asarray(v) for v in enumerate_vrep(boxed).vertices)


def _set_compare_full(
    a: Polyhedron,
    b: Polyhedron,
    box_radius: float,
    n_directions: int | None,
    tol: float,
) -> tuple[SetCompareReport, float]:
    """Report plus the worst equality violation (supports and vertices)."""
    if a.dim != b.dim:
        raise DimensionError("comparing sets of different dimensions")
    count = _direction_count(a.dim, n_directions)
    a_empty = is_empty(a)
    b_empty = is_empty(b)
    if a_empty or b_empty:
        if a_empty and b_empty:
            return SetCompareReport(0.0, box_radius, count, True, True), 0.0
        return (
            SetCompareReport(INF, box_radius, count, a_empty, b_empty),
            INF,
        )
    ac = a.closure()
    bc = b.closure()
    dirs = quasi_uniform_directions(a.dim, count)
    gap_ab = 0.0
    gap_ba = 0.0
    for w in dirs:
        wv = np.asarray(w)
        sa = _truncated_support(ac, wv, box_radius)
        sb = _truncated_support(bc, wv, box_radius)
        gap_ab = max(gap_ab, sa - sb)
        gap_ba = max(gap_ba, sb - sa)
    vdist_ab = max(
        (_point_distance(bc, v) for v in _box_vertices(ac, box_radius)),
        default=0.0,
    )
    vdist_ba = max(
        (_point_distance(ac, v) for v in _box_vertices(bc, box_radius)),
        default=0.0,
    )
    hausdorff = max(gap_ab, gap_ba, 0.0)
    containment_ab = gap_ab <= tol and vdist_ab <= tol
    containment_ba = gap_ba <= tol and vdist_ba <= tol
    violation = max(hausdorff, vdist_ab, vdist_ba)
    return (
        SetCompareReport(hausdorff, box_radius, len(dirs), containment_ab, containment_ba),
        violation,
    )


def set_compare(
    a: Polyhedron,
    b: Polyhedron,
    box_radius: float,
    n_directions: int | None = None,
    tol: float = VERDICT_TOL,
) -> SetCompareReport:
    """Compare A and B inside [-R, R]^d: support sweep plus vertex membership.

    Infeasible inputs are valid and compare as the empty set.
    """
    report, _ = _set_compare_full(a, b, box_radius, n_directions, tol)
    return report


# ---------------------------------------------------------------------------
# the pair-union LP frame
# ---------------------------------------------------------------------------


class _PairFrame:
    """LPs over (s1, t1, s2, t2) with t_i >= f_i*(s_i), at a fixed base point.

    Budgets constrain the Young-Fenchel defects d_i = t_i + f_i(x) - <s_i, x>;
    a joint budget d1 + d2 <= beta realizes the continuum split union, separate
    budgets d_i <= beta_i realize a single Minkowski-sum term.
    """

    def __init__(
        self,
        f: PolyhedralFunction,
        g: PolyhedralFunction,
        x: np.ndarray,
        fx: float,
        gx: float,
    ) -> None:
        self.dim = function_dim(f)
        self.x = x
        self.fx = fx
        self.gx = gx
        d = self.dim
        nvar = 2 * d + 2
        rows_a: list[np.ndarray] = []
        rows_b: list[float] = []
        for offset, fn in ((0, f), (d + 1, g)):
            star = conjugate(fn)
            assert isinstance(star, ConvexPolyhedralFunction)
            for p in star.pieces:
                row = np.zeros(nvar)
                row[offset : offset + d] = p.slope
                row[offset + d] = -1.0
                rows_a.append(row)
                rows_b.append(-p.intercept)
            da, db, _ = hs_matrix(star.domain)
            for i in range(len(da)):
                row = np.zeros(nvar)
                row[offset : offset + d] = da[i]
                rows_a.append(row)
                rows_b.append(float(db[i]))
        self._rows_a = rows_a
        self._rows_b = rows_b

    def _budget_rows(
        self, joint: float | None, separate: tuple[float, float] | None
    ) -> tuple[list[np.ndarray], list[float]]:
        d = self.dim
        nvar = 2 * d + 2
        rows_a: list[np.ndarray] = []
        rows_b: list[float] = []
        if joint is not None:
            row = np.zeros(nvar)
            row[:d] = -self.x
            row[d] = 1.0
            row[d + 1 : 2 * d + 1] = -self.x
            row[2 * d + 1] = 1.0
            rows_a.append(row)
            rows_b.append(joint - self.fx - self.gx)
        if separate is not None:
            for offset, cap, val in (
                (0, separate[0], self.fx),
                (d + 1, separate[1], self.gx),
            ):
                row = np.zeros(nvar)
                row[offset : offset + d] = -self.x
                row[offset + d] = 1.0
                rows_a.append(row)
                rows_b.append(cap - val)
        return rows_a, rows_b

    def support(
        self,
        w: np.ndarray,
        box_radius: float,
        joint: float | None = None,
        separate: tuple[float, float] | None = None,
    ) -> float:
        """sup <w, s1 + s2> over the budgeted pair set, truncated; -inf if empty."""
        d = self.dim
        nvar = 2 * d + 2
        rows_a = list(self._rows_a)
        rows_b = list(self._rows_b)
        extra_a, extra_b = self._budget_rows(joint, separate)
        rows_a.extend(extra_a)
        rows_b.extend(extra_b)
        for i in range(d):
            row = np.zeros(nvar)
            row[i] = 1.0
            row[d + 1 + i] = 1.0
            rows_a.append(row)
            rows_b.append(box_radius)
            rows_a.append(-row)
            rows_b.append(box_radius)
        c = np.zeros(nvar)
        c[:d] = -w
        c[d + 1 : 2 * d + 1] = -w
        res = solve_lp(c, np.array(rows_a), np.array(rows_b))
        if res.status == "infeasible":
            return NEG_INF
        assert res.status == "optimal" and res.fun is not None
        return -float(res.fun)

    def distance(
        self,
        v: np.ndarray,
        joint: float | None = None,
        separate: tuple[float, float] | None = None,
    ) -> float:
        """min l-infinity distance from v to the budgeted sum set; INF if empty."""
        d = self.dim
        nvar = 2 * d + 3
        rows_a: list[np.ndarray] = []
        rows_b: list[float] = []
        for base, off in zip(self._rows_a, self._rows_b):
            rows_a.append(np.append(base, 0.0))
            rows_b.append(off)
        extra_a, extra_b = self._budget_rows(joint, separate)
        for base, off in zip(extra_a, extra_b):
            rows_a.append(np.append(base, 0.0))
            rows_b.append(off)
        for i in range(d):
            row = np.zeros(nvar)
            row[i] = 1.0
            row[d + 1 + i] = 1.0
            row[-1] = -1.0
            rows_a.append(row.copy())
            rows_b.append(float(v[i]))
            row[i] = -1.0
            row[d + 1 + i] = -1.0
            rows_a.append(row)
            rows_b.append(float(-v[i]))
        c = np.zeros(nvar)
        c[-1] = 1.0
        res = solve_lp(c, np.array(rows_a), np.array(rows_b))
        if res.status == "infeasible":
            return INF
        assert res.status == "optimal" and res.fun is not None
        return max(0.0, float(res.fun))


def _support_gap_stats(
    lhs_supports: Sequence[float], rhs_supports: Sequence[float]
) -> tuple[float, float]:
    """(max lhs - rhs, max rhs - lhs) with empty-set (-inf) conventions."""
    gap_ab = 0.0
    gap_ba = 0.0
    for sl, sr in zip(lhs_supports, rhs_supports):
        if sl == NEG_INF and sr == NEG_INF:
            continue
        if sr == NEG_INF:
            return INF, gap_ba
        if sl == NEG_INF:
            gap_ba = INF
            continue
        gap_ab = max(gap_ab, sl - sr)
        gap_ba = max(gap_ba, sr - sl)
    return gap_ab, gap_ba


def _require_polyhedral(f: AnyFunction, name: str) -> PolyhedralFunction:
    if isinstance(f, (ConvexPolyhedralFunction, PiecewiseMinFunction)):
        return f
    raise TypeError(f"{name} must have a polyhedral representation for set verdicts")


def check_sum_rules(
    f: AnyFunction,
    g: AnyFunction,
    x: Sequence[float],
    epsilon: float,
    splits: int = 32,
    box_radius: float = 10.0,
    n_directions: int | None = None,
    tol: float = VERDICT_TOL,
) -> tuple[RuleStatus, RuleStatus, RuleStatus]:
    """Verdicts for the three subdifferential statements at one probe (x, eps).

    SUMM1: the eps-subdifferential of f + g equals the closed split union.
    SUM1B: it equals the nested intersection of split unions over budgets
    above eps; for polyhedral data that intersection collapses to the budget-
    eps union (budget minima are attained), so the verdict shares SUMM1's
    comparison and the sampled budget schedule is reported as diagnostics.
    SUM1D: it is contained in the Minkowski sum of the two 2eps-subdifferentials.

    Raises DomainError when x leaves either effective domain and ScopeError
    when eps is not strictly above the emptiness threshold of f + g at x.
    """
    fp = _require_polyhedral(f, "f")
    gp = _require_polyhedral(g, "g")
    d = function_dim(fp)
    if function_dim(gp) != d:
        raise DimensionError("f and g live in different dimensions")
    if epsilon <= 0.0:
        raise ValueError("sum-rule probes need epsilon > 0")
    if splits < 1:
        raise ValueError("need at least one split")
    pt = np.asarray(x, dtype=float).reshape(-1)
    if pt.size != d:
        raise DimensionError("probe point dimension mismatch")
    fx = eval_function(fp, pt)
    gx = eval_function(gp, pt)
    if not (is_finite(fx) and is_finite(gx)):
        raise DomainError("probe point outside dom f or dom g")
    total = add_polyhedral(fp, gp)
    threshold = eps_threshold(total, pt)
    if epsilon <= threshold:
        raise ScopeError(
            f"epsilon {epsilon!r} is not above the emptiness threshold "
            f"{threshold!r} of f + g at the probe point"
        )
    lhs = eps_subdiff_set(total, pt, epsilon)
    frame = _PairFrame(fp, gp, pt, fx, gx)
    count = _direction_count(d, n_directions)
    dirs = [np.asarray(w) for w in quasi_uniform_directions(d, count)]

    lhs_sup = [_truncated_support(lhs, w, box_radius) for w in dirs]
    union_sup = [frame.support(w, box_radius, joint=epsilon) for w in dirs]
    twoeps = (2.0 * epsilon, 2.0 * epsilon)
    sum1d_sup = [frame.support(w, box_radius, separate=twoeps) for w in dirs]

    verts = _box_vertices(lhs, box_radius)
    vdist_union = max((frame.distance(v, joint=epsilon) for v in verts), default=0.0)
    vdist_sum1d = max((frame.distance(v, separate=twoeps) for v in verts), default=0.0)

    gap_lu, gap_ul = _support_gap_stats(lhs_sup, union_sup)
    summ1_residual = max(gap_lu, gap_ul, vdist_union)
    summ1_report = SetCompareReport(
        max(gap_lu, gap_ul, 0.0),
        box_radius,
        len(dirs),
        gap_lu <= tol and vdist_union <= tol,
        gap_ul <= tol,
    )

    diag_dirs = dirs[: min(_DIAG_DIRECTIONS, len(dirs))]
    split_gap = _finite_split_gap(frame, epsilon, splits, box_radius, diag_dirs)
    support_gaps = [_directed_gap(a, b) for a, b in zip(lhs_sup, union_sup)]

    summ1 = RuleStatus(
        Rule.SUMM1,
        summ1_residual <= tol,
        summ1_residual,
        tol,
        summ1_report,
        {
            "threshold": threshold,
            "splits": splits,
            "finite_split_gap": split_gap,
            "max_vertex_distance": vdist_union,
            "support_gaps": support_gaps,
        },
    )

    alpha_min = epsilon * (1.0 + 1.0 / splits)
    inflation = 0.0
    for w in diag_dirs:
        hi = frame.support(w, box_radius, joint=alpha_min)
        lo = frame.support(w, box_radius, joint=epsilon)
        if hi == NEG_INF and lo == NEG_INF:
            continue
        if lo == NEG_INF:
            inflation = INF
            break
        inflation = max(inflation, hi - lo)
    sum1b = RuleStatus(
        Rule.SUM1B,
        summ1_residual <= tol,
        summ1_residual,
        tol,
        summ1_report,
        {
            "threshold": threshold,
            "alpha_min": alpha_min,
            "alpha_support_inflation": inflation,
            "max_vertex_distance": vdist_union,
        },
    )

    gap_ld, gap_dl = _support_gap_stats(lhs_sup, sum1d_sup)
    sum1d_residual = max(gap_ld, vdist_sum1d, 0.0)
    sum1d_report = SetCompareReport(
        max(gap_ld, gap_dl, 0.0),
        box_radius,
        len(dirs),
        gap_ld <= tol and vdist_sum1d <= tol,
        gap_dl <= tol,
    )
    sum1d = RuleStatus(
        Rule.SUM1D,
        sum1d_residual <= tol,
        sum1d_residual,
        tol,
        sum1d_report,
        {
            "threshold": threshold,
            "max_vertex_distance": vdist_sum1d,
            "support_gaps": [_directed_gap(a, b) for a, b in zip(lhs_sup, sum1d_sup)],
        },
    )
    return summ1, sum1b, sum1d


def _finite_split_gap(
    frame: _PairFrame,
    epsilon: float,
    splits: int,
    box_radius: float,
    dirs: Sequence[np.ndarray],
) -> float:
    """Worst undershoot of the finite-split union against the continuum union."""
    gap = 0.0
    for w in dirs:
        continuum = frame.support(w, box_radius, joint=epsilon)
        best = NEG_INF
        for k in range(splits + 1):
            e1 = epsilon * k / splits
            got = frame.support(w, box_radius, separate=(e1, epsilon - e1))
            best = max(best, got)
        if continuum == NEG_INF:
            continue
        if best == NEG_INF:
            return INF
        gap = max(gap, continuum - best)
    return gap


def finite_split_union_gap(
    f: AnyFunction,
    g: AnyFunction,
    x: Sequence[float],
    epsilon: float,
    splits: int,
    box_radius: float = 10.0,
    n_directions: int | None = None,
) -> float:
    """Support undershoot of the discretized split union; non-increasing in splits."""
    fp = _require_polyhedral(f, "f")
    gp = _require_polyhedral(g, "g")
    pt = np.asarray(x, dtype=float).reshape(-1)
    fx = eval_function(fp, pt)
    gx = eval_function(gp, pt)
    if not (is_finite(fx) and is_finite(gx)):
        raise DomainError("probe point outside dom f or dom g")
    frame = _PairFrame(fp, gp, pt, fx, gx)
    d = function_dim(fp)
    count = _direction_count(d, n_directions)
    dirs = [np.asarray(w) for w in quasi_uniform_directions(d, count)][
        : min(_DIAG_DIRECTIONS, count)
    ]
    return _finite_split_gap(frame, epsilon, splits, box_radius, dirs)


# ---------------------------------------------------------------------------
# envelope equality and the conjugate identity
# ---------------------------------------------------------------------------


def _check_hypotheses(f: AnyFunction, g: AnyFunction) -> None:
    if affine_minorant(f) is None:
        raise HypothesisError("f has no continuous affine minorant")
    if affine_minorant(g) is None:
        raise HypothesisError("g has no continuous affine minorant")


def check_regularization_equality(
    f: AnyFunction,
    g: AnyFunction,
    probe_grid: Grid | None = None,
    tol: float = VERDICT_TOL,
) -> RuleStatus:
    """Does the closed convex hull distribute over the sum f + g?

    Polyhedral inputs are compared exactly (domain-inclusion and value-gap
    LPs); grid inputs are compared pointwise on probe_grid nodes.  The hull of
    the sum always dominates the sum of hulls, so any violation is one-sided.
    """
    if isinstance(f, GridFunction) or isinstance(g, GridFunction):
        return _grid_equality(f, g, probe_grid, tol)
    fp = _require_polyhedral(f, "f")
    gp = _require_polyhedral(g, "g")
    total = add_polyhedral(fp, gp)
    if not is_proper(total):
        raise HypothesisError("dom f and dom g do not intersect")
    _check_hypotheses(fp, gp)
    env_total = convex_envelope(total)
    env_sum = sum_cpf(_as_cpf(convex_envelope(fp)), _as_cpf(convex_envelope(gp)))
    assert isinstance(env_total, ConvexPolyhedralFunction)
    if probe_grid is not None:
        gap = _grid_gap_cpf(env_total, env_sum, probe_grid)
        return RuleStatus(
            Rule.EQUALITY,
            gap <= tol,
            gap,
            tol,
            gap,
            {"comparison": "probe-grid nodes"},
        )
    equal, violation = cpf_functions_equal(env_total, env_sum, tol)
    directed = cpf_sup_gap(env_total, env_sum)
    reverse = cpf_sup_gap(env_sum, env_total)
    dom_gap = max(
        domain_inclusion_violation(env_sum.domain, env_total.domain),
        0.0,
    )
    return RuleStatus(
        Rule.EQUALITY,
        equal,
        violation,
        tol,
        violation,
        {
            "gap_hull_of_sum_minus_sum_of_hulls": directed,
            "gap_sum_of_hulls_minus_hull_of_sum": reverse,
            "domain_inclusion_violation": dom_gap,
        },
    )


def _as_cpf(f: AnyFunction) -> ConvexPolyhedralFunction:
    assert isinstance(f, ConvexPolyhedralFunction)
    return f


def _grid_sum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        raw = a + b
    return np.where((a == INF) | (b == INF), INF, raw)


def _grid_gap_cpf(
    a: ConvexPolyhedralFunction, b: ConvexPolyhedralFunction, grid: Grid
) -> float:
    gap = 0.0
    for pt in grid.node_coordinates():
        va = eval_cpf(a, pt)
        vb = eval_cpf(b, pt)
        if va == vb:
            continue
        if not (is_finite(va) and is_finite(vb)):
            return INF
        gap = max(gap, abs(va - vb))
    return gap


def _grid_equality(
    f: AnyFunction, g: AnyFunction, probe_grid: Grid | None, tol: float
) -> RuleStatus:
    if not (isinstance(f, GridFunction) and isinstance(g, GridFunction)):
        raise TypeError("mixed grid/polyhedral equality checks are unsupported")
    if f.grid != g.grid:
        raise DimensionError("grid operands must share one sampling grid")
    total = GridFunction(f.grid, _grid_sum(f.values, g.values))
    if not total.is_proper():
        raise HypothesisError("dom f and dom g do not intersect")
    _check_hypotheses(f, g)
    shared_dual = covering_dual_grid([total, f, g])
    env_total = convex_envelope(total, shared_dual)
    env_f = convex_envelope(f, shared_dual)
    env_g = convex_envelope(g, shared_dual)
    assert isinstance(env_total, GridFunction)
    assert isinstance(env_f, GridFunction) and isinstance(env_g, GridFunction)
    probe = probe_grid if probe_grid is not None else f.grid
    gap = 0.0
    for pt in probe.node_coordinates():
        lhs = eval_grid(env_total, pt)
        rhs_f = eval_grid(env_f, pt)
        rhs_g = eval_grid(env_g, pt)
        rhs = INF if INF in (rhs_f, rhs_g) else rhs_f + rhs_g
        if lhs == rhs:
            continue
        if not (is_finite(lhs) and is_finite(rhs)):
            gap = INF
            break
        gap = max(gap, abs(lhs - rhs))
    return RuleStatus(
        Rule.EQUALITY,
        gap <= tol,
        gap,
        tol,
        gap,
        {"comparison": "probe-grid nodes"},
    )


def check_conjugate_identity(
    f: AnyFunction,
    g: AnyFunction,
    dual_grid: Grid | None = None,
    tol: float = VERDICT_TOL,
) -> RuleStatus:
    """(f + g)* against the closed inf-convolution of the conjugates.

    The right side is computed by double conjugation, so the verdict is the
    dual face of the hull-distribution equality and must agree with it.
    """
    if isinstance(f, GridFunction) or isinstance(g, GridFunction):
        return _grid_conjugate_identity(f, g, dual_grid, tol)
    fp = _require_polyhedral(f, "f")
    gp = _require_polyhedral(g, "g")
    total = add_polyhedral(fp, gp)
    if not is_proper(total):
        raise HypothesisError("dom f and dom g do not intersect")
    _check_hypotheses(fp, gp)
    lhs = conjugate(total)
    rhs = inf_convolution(_as_cpf(conjugate(fp)), _as_cpf(conjugate(gp)))
    assert isinstance(lhs, ConvexPolyhedralFunction)
    assert isinstance(rhs, ConvexPolyhedralFunction)
    equal, violation = cpf_functions_equal(lhs, rhs, tol)
    return RuleStatus(
        Rule.CONJ_IDENTITY,
        equal,
        violation,
        tol,
        violation,
        {"equivalent_to": Rule.EQUALITY.value},
    )


def _grid_conjugate_identity(
    f: AnyFunction, g: AnyFunction, dual_grid: Grid | None, tol: float
) -> RuleStatus:
    if not (isinstance(f, GridFunction) and isinstance(g, GridFunction)):
        raise TypeError("mixed grid/polyhedral identity checks are unsupported")
    if f.grid != g.grid:
        raise DimensionError("grid operands must share one sampling grid")
    if dual_grid is None:
        raise ValueError("grid identity checks need an explicit dual grid")
    total = GridFunction(f.grid, _grid_sum(f.values, g.values))
    if not total.is_proper():
        raise HypothesisError("dom f and dom g do not intersect")
    _check_hypotheses(f, g)
    lhs = conjugate_grid(total, dual_grid)
    shared_dual = covering_dual_grid([total, f, g])
    env_f = convex_envelope(f, shared_dual)
    env_g = convex_envelope(g, shared_dual)
    assert isinstance(env_f, GridFunction) and isinstance(env_g, GridFunction)
    env_sum = _grid_sum(env_f.values, env_g.values)
    rhs = conjugate_grid(GridFunction(f.grid, env_sum), dual_grid)
    gap = 0.0
    flat_l = lhs.values.ravel()
    flat_r = rhs.values.ravel()
    for vl, vr in zip(flat_l, flat_r):
        if vl == vr:
            continue
        if not (is_finite(vl) and is_finite(vr)):
            gap = INF
            break
        gap = max(gap, abs(float(vl) - float(vr)))
    return RuleStatus(
        Rule.CONJ_IDENTITY,
        gap <= tol,
        gap,
        tol,
        gap,
        {"equivalent_to": Rule.EQUALITY.value},
    )


def equivalence_harness(
    f: AnyFunction,
    g: AnyFunction,
    probes: Sequence[tuple[Sequence[float], float]],
    splits: int = 32,
    box_radius: float = 10.0,
    n_directions: int | None = None,
    tol: float = VERDICT_TOL,
    probe_grid: Grid | None = None,
) -> EquivalenceReport:
    """All four statements over a probe set; they are predicted to co-occur."""
    if not probes:
        raise ValueError("the harness needs at least one probe")
    equality = check_regularization_equality(f, g, probe_grid, tol)
    per_rule: dict[Rule, list[RuleStatus]] = {
        Rule.SUMM1: [],
        Rule.SUM1B: [],
        Rule.SUM1D: [],
    }
    for x, eps in probes:
        s1, s1b, s1d = check_sum_rules(
            f, g, x, eps, splits, box_radius, n_directions, tol
        )
        per_rule[Rule.SUMM1].append(s1)
        per_rule[Rule.SUM1B].append(s1b)
        per_rule[Rule.SUM1D].append(s1d)

    def aggregate(rule: Rule) -> RuleStatus:
        statuses = per_rule[rule]
        worst = max(range(len(statuses)), key=lambda i: statuses[i].residual)
        return RuleStatus(
            rule,
            all(s.holds for s in statuses),
            statuses[worst].residual,
            tol,
            statuses[worst].detail,
            {
                "probes": len(statuses),
                "worst_probe": worst,
                "per_probe_residuals": [s.residual for s in statuses],
            },
        )

    statuses = (
        equality,
        aggregate(Rule.SUMM1),
        aggregate(Rule.SUM1B),
        aggregate(Rule.SUM1D),
    )
    verdicts = {s.holds for s in statuses}
    return EquivalenceReport(statuses, len(verdicts) == 1)


# ---------------------------------------------------------------------------
# qualification and the exact rule
# ---------------------------------------------------------------------------


def _interior_overlap(inner: Polyhedron, other: Polyhedron) -> bool:
    """Is there a point interior to `inner` and inside `other`."""
    d = inner.dim
    ia, ib, _ = hs_matrix(inner)
    oa, ob, _ = hs_matrix(other)
    rows_a: list[np.ndarray] = []
    rows_b: list[float] = []
    for mat, off, margin in ((ia, ib, True), (oa, ob, False)):
        for i in range(len(mat)):
            norm = float(np.linalg.norm(mat[i]))
            if norm == 0.0:
                if off[i] < 0.0:
                    return False
                continue
            row = np.append(mat[i] / norm, 1.0 if margin else 0.0)
            rows_a.append(row)
            rows_b.append(float(off[i]) / norm)
    for i in range(d):
        row = np.zeros(d + 1)
        row[i] = 1.0
        rows_a.append(row.copy())
        rows_b.append(_QUAL_BOX)
        row[i] = -1.0
        rows_a.append(row)
        rows_b.append(_QUAL_BOX)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * d + [(None, 1.0)]
    res = solve_lp(c, np.array(rows_a), np.array(rows_b), bounds=bounds)
    if res.status != "optimal" or res.fun is None:
        return False
    return -res.fun > GEOM_TOL


def _relative_interior_overlap(a: Polyhedron, b: Polyhedron) -> bool:
    """Do the relative interiors of the two sets intersect."""
    d = a.dim
    nvar = d + 1
    rows_a: list[np.ndarray] = []
    rows_b: list[float] = []
    eq_a: list[np.ndarray] = []
    eq_b: list[float] = []
    for poly in (a, b):
        mat, off, _ = hs_matrix(poly)
        implicit = implicit_equality_rows(poly)
        for i in range(len(mat)):
            norm = float(np.linalg.norm(mat[i]))
            if norm == 0.0:
                if off[i] < 0.0:
                    return False
                continue
            if i in implicit:
                eq_a.append(np.append(mat[i] / norm, 0.0))
                eq_b.append(float(off[i]) / norm)
            else:
                rows_a.append(np.append(mat[i] / norm, 1.0))
                rows_b.append(float(off[i]) / norm)
    for i in range(d):
        row = np.zeros(nvar)
        row[i] = 1.0
        rows_a.append(row.copy())
        rows_b.append(_QUAL_BOX)
        row[i] = -1.0
        rows_a.append(row)
        rows_b.append(_QUAL_BOX)
    c = np.zeros(nvar)
    c[-1] = -1.0
    bounds = [(None, None)] * d + [(None, 1.0)]
    res = solve_lp(
        c,
        np.array(rows_a),
        np.array(rows_b),
        a_eq=np.array(eq_a) if eq_a else None,
        b_eq=np.array(eq_b) if eq_b else None,
        bounds=bounds,
    )
    if res.status != "optimal" or res.fun is None:
        return False
    return -res.fun > GEOM_TOL


def qualification_check(
    f: ConvexPolyhedralFunction, g: ConvexPolyhedralFunction
) -> QualificationStatus:
    """Certificates licensing the exact sum rule, strongest first.

    CONTINUITY_POINT: one function's domain interior meets the other's domain
    (checked both ways).  RI_OVERLAP: the domains' relative interiors meet.
    """
    if not isinstance(f, ConvexPolyhedralFunction) or not isinstance(
        g, ConvexPolyhedralFunction
    ):
        raise TypeError("qualification certificates need convex polyhedral inputs")
    if f.dim != g.dim:
        raise DimensionError("f and g live in different dimensions")
    if _interior_overlap(f.domain, g.domain) or _interior_overlap(
        g.domain, f.domain
    ):
        return QualificationStatus.CONTINUITY_POINT
    if _relative_interior_overlap(f.domain, g.domain):
        return QualificationStatus.RI_OVERLAP
    return QualificationStatus.NONE


def exact_sum_rule_check(
    f: ConvexPolyhedralFunction,
    g: ConvexPolyhedralFunction,
    x: Sequence[float],
    epsilon: float,
    splits: int = 32,
    box_radius: float = 10.0,
    n_directions: int | None = None,
    tol: float = VERDICT_TOL,
) -> RuleStatus:
    """Closure-free split-union equality under a qualification certificate.

    The split union is closed and attained here (it is the linear image of a
    polyhedron), so covering is checked against the union itself; eps = 0
    degenerates to the plain Minkowski sum of the two subdifferentials.
    """
    qual = qualification_check(f, g)
    if qual is QualificationStatus.NONE:
        raise ScopeError("the pair carries no qualification certificate")
    if epsilon < 0.0:
        raise ValueError("the exact rule needs epsilon >= 0")
    d = f.dim
    pt = np.asarray(x, dtype=float).reshape(-1)
    fx = eval_cpf(f, pt)
    gx = eval_cpf(g, pt)
    if not (is_finite(fx) and is_finite(gx)):
        raise DomainError("probe point outside dom f or dom g")
    total = sum_cpf(f, g)
    lhs = eps_subdiff_set(total, pt, epsilon)
    frame = _PairFrame(f, g, pt, fx, gx)
    count = _direction_count(d, n_directions)
    dirs = [np.asarray(w) for w in quasi_uniform_directions(d, count)]
    lhs_sup = [_truncated_support(lhs, w, box_radius) for w in dirs]
    union_sup = [frame.support(w, box_radius, joint=epsilon) for w in dirs]
    verts = _box_vertices(lhs, box_radius)
    vdist = max((frame.distance(v, joint=epsilon) for v in verts), default=0.0)
    gap_ab, gap_ba = _support_gap_stats(lhs_sup, union_sup)
    residual = max(gap_ab, gap_ba, vdist)
    report = SetCompareReport(
        max(gap_ab, gap_ba, 0.0),
        box_radius,
        len(dirs),
        gap_ab <= tol and vdist <= tol,
        gap_ba <= tol,
    )
    diag_dirs = dirs[: min(_DIAG_DIRECTIONS, len(dirs))]
    cover_gap = (
        _finite_split_gap(frame, epsilon, splits, box_radius, diag_dirs)
        if epsilon > 0.0
        else 0.0
    )
    return RuleStatus(
        Rule.EXACT_RULE,
        residual <= tol,
        residual,
        tol,
        report,
        {
            "qualification": qual.value,
            "finite_split_cover_gap": cover_gap,
            "max_vertex_distance": vdist,
        },
    )


# ---------------------------------------------------------------------------
# sequential witnesses via relocation on the product function
# ---------------------------------------------------------------------------


def _product_function(
    f: ConvexPolyhedralFunction, g: ConvexPolyhedralFunction
) -> ConvexPolyhedralFunction:
    """phi(y, z) = f(y) + g(z) on the doubled space."""
    d = f.dim
    pieces = tuple(
        AffinePiece(p.slope + q.slope, p.intercept + q.intercept)
        for p in f.pieces
        for q in g.pieces
    )
    rows: list[Halfspace] = []
    for hs in f.domain.halfspaces:
        rows.append(Halfspace(hs.normal + (0.0,) * d, hs.offset))
    for hs in g.domain.halfspaces:
        rows.append(Halfspace((0.0,) * d + hs.normal, hs.offset))
    return ConvexPolyhedralFunction(pieces, Polyhedron(2 * d, tuple(rows)))


def _split_dual(
    f: ConvexPolyhedralFunction,
    g: ConvexPolyhedralFunction,
    x: np.ndarray,
    xstar: np.ndarray,
    budget: float,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Best l-infinity split of xstar across the two budgeted subdifferentials."""
    d = f.dim
    sets = (eps_subdiff_set(f, x, budget), eps_subdiff_set(g, x, budget))
    nvar = 2 * d + 1
    rows_a: list[np.ndarray] = []
    rows_b: list[float] = []
    for offset, poly in ((0, sets[0]), (d, sets[1])):
        mat, off, _ = hs_matrix(poly)
        for i in range(len(mat)):
            row = np.zeros(nvar)
            row[offset : offset + d] = mat[i]
            rows_a.append(row)
            rows_b.append(float(off[i]))
    for i in range(d):
        row = np.zeros(nvar)
        row[i] = 1.0
        row[d + i] = 1.0
        row[-1] = -1.0
        rows_a.append(row.copy())
        rows_b.append(float(xstar[i]))
        row[i] = -1.0
        row[d + i] = -1.0
        rows_a.append(row)
        rows_b.append(float(-xstar[i]))
    c = np.zeros(nvar)
    c[-1] = 1.0
    res = solve_lp(c, np.array(rows_a), np.array(rows_b))
    if res.status != "optimal" or res.x is None or res.fun is None:
        raise HypothesisError(
            "dual split infeasible: the dense-sum property fails at this budget, "
            "which contradicts the finite-dimensional setting"
        )
    sol = np.asarray(res.x)
    return sol[:d], sol[d : 2 * d], max(0.0, float(res.fun))


def sequential_witnesses(
    f: ConvexPolyhedralFunction,
    g: ConvexPolyhedralFunction,
    x: Sequence[float],
    xstar: Sequence[float],
    n_rows: int,
) -> WitnessTable:
    """Pairs (x_n, x_n*), (y_n, y_n*) of exact subgradients approximating a
    subgradient of the sum, on the geometric budget schedule eps_n = 2^-n.

    Each step splits xstar across the two eps_n^2/2-subdifferentials at x,
    then relocates on the product function phi(y, z) = f(y) + g(z) with
    budget eps_n^2, giving l1 displacements at most eps_n per factor and a
    dual-sum deviation within the chain bound.
    """
    if not isinstance(f, ConvexPolyhedralFunction) or not isinstance(
        g, ConvexPolyhedralFunction
    ):
        raise TypeError("sequential witnesses need convex polyhedral inputs")
    if n_rows < 1:
        raise ValueError("the witness table needs at least one row")
    d = f.dim
    pt = np.asarray(x, dtype=float).reshape(-1)
    xs = np.asarray(xstar, dtype=float).reshape(-1)
    if pt.size != d or xs.size != d:
        raise DimensionError("point or dual vector dimension mismatch")
    fx = eval_cpf(f, pt)
    gx = eval_cpf(g, pt)
    if not (is_finite(fx) and is_finite(gx)):
        raise DomainError("base point outside dom f or dom g")
    total = sum_cpf(f, g)
    star = conjugate(total)
    assert isinstance(star, ConvexPolyhedralFunction)
    defect = eval_cpf(star, xs) + fx + gx - float(xs @ pt)
    if not defect <= 1e-8:
        raise NotEpsSubgradientError(
            "xstar is not a subgradient of f + g at the base point"
        )
    phi = _product_function(f, g)
    base = np.concatenate([pt, pt])
    rows: list[WitnessRow] = []
    residuals: list[float] = []
    for n in range(1, n_rows + 1):
        eps = 2.0 ** (-n)
        half = eps * eps / 2.0
        budget = max(half - 2e-9, half / 2.0)
        u, v, split_residual = _split_dual(f, g, pt, xs, budget)
        residuals.append(split_residual)
        witness = brondsted_rockafellar(
            phi, base, np.concatenate([u, v]), eps * eps
        )
        xn = np.asarray(witness.z[:d])
        yn = np.asarray(witness.z[d:])
        xsn = np.asarray(witness.zstar[:d])
        ysn = np.asarray(witness.zstar[d:])
        rows.append(
            WitnessRow(
                n,
                tuple(float(t) for t in xn),
                tuple(float(t) for t in yn),
                tuple(float(t) for t in xsn),
                tuple(float(t) for t in ysn),
                float(np.max(np.abs(xsn + ysn - xs))) if d else 0.0,
                float(xsn @ (xn - pt)),
                float(ysn @ (yn - pt)),
                float(eval_cpf(f, xn) - fx),
                float(eval_cpf(g, yn) - gx),
            )
        )
    return WitnessTable(
        tuple(rows),
        tuple(float(t) for t in pt),
        tuple(float(t) for t in xs),
        tuple(residuals),
    )


# ---------------------------------------------------------------------------
# outer limits of exact subdifferentials
# ---------------------------------------------------------------------------


def _vform_support(
    slopes: Sequence[np.ndarray],
    normals: Sequence[np.ndarray],
    w: np.ndarray,
    box_radius: float,
) -> float:
    """Truncated support of conv(slopes) + cone(normals)."""
    d = w.size
    ns, nn = len(slopes), len(normals)
    nvar = ns + nn
    point_rows = np.zeros((d, nvar))
    for j, s in enumerate(slopes):
        point_rows[:, j] = s
    for j, m in enumerate(normals):
        point_rows[:, ns + j] = m
    rows_a = np.vstack([point_rows, -point_rows])
    rows_b = np.full(2 * d, box_radius)
    a_eq = np.zeros((1, nvar))
    a_eq[0, :ns] = 1.0
    c = -(w @ point_rows)
    bounds = [(0.0, None)] * nvar
    res = solve_lp(c, rows_a, rows_b, a_eq=a_eq, b_eq=np.array([1.0]), bounds=bounds)
    if res.status == "infeasible":
        return NEG_INF
    assert res.status == "optimal" and res.fun is not None
    return -float(res.fun)


def _vform_distance(
    slopes: Sequence[np.ndarray],
    normals: Sequence[np.ndarray],
    v: np.ndarray,
) -> float:
    """l-infinity distance from v to conv(slopes) + cone(normals)."""
    d = v.size
    ns, nn = len(slopes), len(normals)
    nvar = ns + nn + 1
    point_rows = np.zeros((d, ns + nn))
    for j, s in enumerate(slopes):
        point_rows[:, j] = s
    for j, m in enumerate(normals):
        point_rows[:, ns + j] = m
    rows_a = []
    rows_b = []
    for sign in (1.0, -1.0):
        block = np.hstack([sign * point_rows, -np.ones((d, 1))])
        rows_a.append(block)
        rows_b.append(sign * v)
    a_eq = np.zeros((1, nvar))
    a_eq[0, :ns] = 1.0
    c = np.zeros(nvar)
    c[-1] = 1.0
    bounds = [(0.0, None)] * (ns + nn) + [(None, None)]
    res = solve_lp(
        c,
        np.vstack(rows_a),
        np.concatenate(rows_b),
        a_eq=a_eq,
        b_eq=np.array([1.0]),
        bounds=bounds,
    )
    if res.status != "optimal" or res.fun is None:
        return INF
    return max(0.0, float(res.fun))


def _somewhere_active(
    f: ConvexPolyhedralFunction, z: np.ndarray, radius: float
) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """Generators active at some point of the radius-ball around z (exact LPs)."""
    d = f.dim
    dom_a, dom_b, _ = hs_matrix(f.domain)
    ball = Polyhedron.from_box(d, radius, tuple(z))
    ball_a, ball_b, _ = hs_matrix(ball)
    base_a = np.vstack([dom_a, ball_a]) if len(dom_a) else ball_a
    base_b = np.concatenate([dom_b, ball_b]) if len(dom_a) else ball_b
    slopes: list[np.ndarray] = []
    for idx, p in enumerate(f.pieces):
        rows_a = [base_a]
        rows_b = [base_b]
        others_a = []
        others_b = []
        for j, q in enumerate(f.pieces):
            if j == idx:
                continue
            others_a.append(np.asarray(q.slope) - np.asarray(p.slope))
            others_b.append(p.intercept - q.intercept)
        if others_a:
            rows_a.append(np.array(others_a))
            rows_b.append(np.array(others_b))
        res = solve_lp(
            np.zeros(d), np.vstack(rows_a), np.concatenate(rows_b)
        )
        if res.status == "optimal":
            slopes.append(np.asarray(p.slope, dtype=float))
    normals: list[np.ndarray] = []
    for i in range(len(dom_a)):
        if float(np.linalg.norm(dom_a[i])) == 0.0:
            continue
        res = solve_lp(
            np.zeros(d),
            base_a,
            base_b,
            a_eq=dom_a[i : i + 1],
            b_eq=dom_b[i : i + 1],
        )
        if res.status == "optimal":
            normals.append(np.asarray(dom_a[i], dtype=float))
    return tuple(slopes), tuple(normals)


def outer_limit_subdiff(
    f: ConvexPolyhedralFunction,
    z: Sequence[float],
    radii: Sequence[float],
    box_radius: float = 10.0,
    n_directions: int | None = None,
    tol: float = VERDICT_TOL,
) -> SetCompareReport:
    """Outer limit of subdifferentials over shrinking balls against the
    subdifferential at the center.

    For each radius the generators active somewhere in the ball are found by
    exact feasibility LPs (no point sampling); the nested intersection over
    the given radii is the set at the smallest radius.  Equality with the
    center subdifferential is predicted once the radius passes below the
    distance to the nearest activity change.
    """
    if not isinstance(f, ConvexPolyhedralFunction):
        raise TypeError("outer limits need a convex polyhedral input")
    pt = np.asarray(z, dtype=float).reshape(-1)
    if pt.size != f.dim:
        raise DimensionError("center point dimension mismatch")
    if eval_cpf(f, pt) == INF:
        raise DomainError("center point outside the effective domain")
    radii = tuple(float(r) for r in radii)
    if not radii or any(r <= 0.0 for r in radii):
        raise ValueError("radii must be positive")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    slopes_a, normals_a = _somewhere_active(f, pt, radii[-1])
    slopes_b, normals_b = active_subdiff_generators(f, pt)
    slopes_bv = tuple(np.asarray(s, dtype=float) for s in slopes_b)
    normals_bv = tuple(np.asarray(m, dtype=float) for m in normals_b)
    count = _direction_count(f.dim, n_directions)
    dirs = [np.asarray(w) for w in quasi_uniform_directions(f.dim, count)]
    gap_ab = 0.0
    gap_ba = 0.0
    for w in dirs:
        sa = _vform_support(slopes_a, normals_a, w, box_radius)
        sb = _vform_support(slopes_bv, normals_bv, w, box_radius)
        gap_ab = max(gap_ab, sa - sb)
        gap_ba = max(gap_ba, sb - sa)
    gen_dist = max(
        (_vform_distance(slopes_bv, normals_bv, s) for s in slopes_a),
        default=0.0,
    )
    cone_dist = 0.0
    if normals_a:
        origin = (np.zeros(f.dim),)
        cone_dist = max(
            _vform_distance(origin, normals_bv, m / np.linalg.norm(m))
            for m in normals_a
        )
    containment_ab = gap_ab <= tol and gen_dist <= tol and cone_dist <= tol
    containment_ba = gap_ba <= tol
    return SetCompareReport(
        max(gap_ab, gap_ba, 0.0),
        box_radius,
        len(dirs),
        containment_ab,
        containment_ba,
    )


# ---------------------------------------------------------------------------
# closures of intersections of sets with open faces
# ---------------------------------------------------------------------------


def _meets_interior(a: Polyhedron, b: Polyhedron) -> bool:
    """Is there a point of a (strict faces honored) interior to b."""
    d = a.dim
    rows_a: list[np.ndarray] = []
    rows_b: list[float] = []
    for poly, force_margin in ((a, False), (b, True)):
        mat, off, strict = hs_matrix(poly)
        for i in range(len(mat)):
            norm = float(np.linalg.norm(mat[i]))
            if norm == 0.0:
                if off[i] < 0.0 or (strict[i] and off[i] <= 0.0):
                    return False
                continue
            margin = force_margin or bool(strict[i])
            row = np.append(mat[i] / norm, 1.0 if margin else 0.0)
            rows_a.append(row)
            rows_b.append(float(off[i]) / norm)
    for i in range(d):
        row = np.zeros(d + 1)
        row[i] = 1.0
        rows_a.append(row.copy())
        rows_b.append(_QUAL_BOX)
        row[i] = -1.0
        rows_a.append(row)
        rows_b.append(_QUAL_BOX)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * d + [(None, 1.0)]
    res = solve_lp(c, np.array(rows_a), np.array(rows_b), bounds=bounds)
    if res.status != "optimal" or res.fun is None:
        return False
    return -res.fun > GEOM_TOL


def check_intersection_closure(
    a: Polyhedron,
    b: Polyhedron,
    box_radius: float = 10.0,
    n_directions: int | None = None,
    tol: float = VERDICT_TOL,
) -> RuleStatus:
    """Does closure distribute over the intersection of two convex sets.

    Strict halfspaces model open faces; closure drops strictness.  The report
    also records whether one set met the other's interior (the sufficient
    qualification), so unqualified failures are informative rather than errors.
    """
    if a.dim != b.dim:
        raise DimensionError("intersecting sets of different dimensions")
    if is_empty(a):
        raise EmptyDomainError("the first set is empty")
    if is_empty(b):
        raise EmptyDomainError("the second set is empty")
    inter = intersect(a, b)
    inter_empty = is_empty(inter)
    lhs = Polyhedron.empty(a.dim) if inter_empty else inter.closure()
    rhs = intersect(a.closure(), b.closure())
    report, violation = _set_compare_full(lhs, rhs, box_radius, n_directions, tol)
    if _meets_interior(a, b):
        qualification = "first set meets the second's interior"
    elif _meets_interior(b, a):
        qualification = "second set meets the first's interior"
    else:
        qualification = "none"
    return RuleStatus(
        Rule.INTERSECTION_CLOSURE,
        violation <= tol,
        violation,
        tol,
        report,
        {
            "qualification": qualification,
            "intersection_empty": inter_empty,
        },
    )
