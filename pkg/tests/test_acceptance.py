"""Acceptance gate: ten end-to-end checks over the public surface.

Every check is deterministic (fixed seeds), measures the package against the
independent LP oracles in ``oracles`` or against bundled corpus instances, and
prints one ``criterion NN: PASS`` line on success.  Tolerances are pinned in
the asserts; nothing here is tunable.
"""

from __future__ import annotations

import math
import time
import warnings
from pathlib import Path

import numpy as np

import fenchel_lab
from fenchel_lab import (
    INF,
    AffinePiece,
    ConvexPolyhedralFunction,
    Grid,
    PiecewiseMinFunction,
    SlopeRangeWarning,
    brondsted_rockafellar,
    conjugate,
    convex_envelope,
    eps_subdiff_set,
    eps_threshold,
    eval_function,
    exact_sum_rule_check,
    integrate_subdiff,
    make_cpf,
    selection_oracle,
    sequential_witnesses,
)
from fenchel_lab.cli import corpus_run, run_instance
from fenchel_lab.functions import sum_cpf
from fenchel_lab.geometry import contains_point, enumerate_vrep
from fenchel_lab.reporting import machine_text
from fenchel_lab.transforms import cpf_functions_equal

from helpers import (
    box,
    pmf_epigraph_points,
    random_anchored_pair,
    random_cpf,
    random_pmf,
    sample_fn_on_grid,
    sample_pmf_on_grid,
)
from oracles import (
    active_slopes,
    envelope_value,
    hull_contains,
    minkowski_sum_points,
)

CORPUS = Path(fenchel_lab.__file__).parent / "corpus"


def _shared_box_min_of_affines(
    rng: np.random.Generator, dim: int, n_branches: int
) -> PiecewiseMinFunction:
    """Min of affine branches that all share the full box [-3, 3]^d.

    On a common box the data is a min of 3-Lipschitz affines, so grid samples
    have difference quotients within +-3 and a +-4 dual box covers every
    supporting slope of their lower hull.
    """
    dom = box((-3.0,) * dim, (3.0,) * dim)
    branches = []
    for _ in range(n_branches):
        slope = tuple(float(v) for v in rng.uniform(-3.0, 3.0, size=dim))
        intercept = float(rng.uniform(-2.0, 2.0))
        branches.append(
            ConvexPolyhedralFunction((AffinePiece(slope, intercept),), dom)
        )
    return PiecewiseMinFunction(tuple(branches))


def test_criterion_01_envelope_matches_epigraph_hull_oracle():
    """convex_envelope vs the brute-force epigraph-hull LP on 50 fuzzed minima.

    30 instances with scattered branch boxes take the polyhedral route and
    must agree within 1e-9 at every probe (including +inf agreement outside
    the hull); 20 shared-box instances take the grid route and must land in
    [oracle - 2h, oracle + 1e-9] at every grid node.  Total runtime <= 60 s.
    """
    t0 = time.monotonic()

    probes_checked = 0
    for i in range(30):
        dim = 1 if i < 15 else 2
        rng = np.random.default_rng(100 + i)
        f = random_pmf(rng, dim, n_branches=int(rng.integers(2, 5)))
        env = convex_envelope(f)
        pts, vals = pmf_epigraph_points(f)
        probes = [tuple(float(v) for v in p) for p in pts]
        for _ in range(4):
            a, b = rng.integers(0, len(pts), size=2)
            lam = float(rng.uniform())
            probes.append(
                tuple(float(v) for v in lam * pts[a] + (1.0 - lam) * pts[b])
            )
        probes.append((4.0,) * dim)
        for p in probes:
            want = envelope_value(pts, vals, p)
            got = eval_function(env, p)
            if want == INF or got == INF:
                assert want == got == INF, (
                    f"instance {i} probe {p}: oracle {want} vs envelope {got}"
                )
            else:
                assert abs(got - want) <= 1e-9, (
                    f"instance {i} probe {p}: |{got} - {want}| > 1e-9"
                )
            probes_checked += 1

    worst_down = 0.0
    nodes_checked = 0
    with warnings.catch_warnings():
        warnings.simplefilter("error", SlopeRangeWarning)
        for dim, nodes, count in ((1, 49, 12), (2, 25, 8)):
            h = 6.0 / (nodes - 1)
            dual_nodes = int(np.ceil(8.0 / (h / 4.0))) + 1
            dual = Grid((-4.0,) * dim, (4.0,) * dim, (dual_nodes,) * dim)
            grid = Grid((-3.0,) * dim, (3.0,) * dim, (nodes,) * dim)
            for seed in range(count):
                rng = np.random.default_rng(500 + 10 * dim + seed)
                f = _shared_box_min_of_affines(rng, dim, int(rng.integers(3, 5)))
                env = convex_envelope(sample_pmf_on_grid(f, grid), dual)
                pts, vals = pmf_epigraph_points(f)
                for node, got in zip(
                    grid.node_coordinates(), env.values.ravel()
                ):
                    want = envelope_value(pts, vals, tuple(node))
                    assert want - 2.0 * h <= got <= want + 1e-9, (
                        f"grid d={dim} seed={seed} node {tuple(node)}: "
                        f"{got} outside [{want - 2 * h}, {want + 1e-9}]"
                    )
                    worst_down = max(worst_down, want - float(got))
                    nodes_checked += 1

    elapsed = time.monotonic() - t0
    assert elapsed <= 60.0, f"criterion 01 took {elapsed:.1f}s > 60s"
    print(
        f"criterion 01: PASS — 30 polyhedral instances ({probes_checked} probes"
        f" at 1e-9) + 20 grid instances ({nodes_checked} nodes, worst"
        f" down-error {worst_down:.3g} within 2h), {elapsed:.1f}s"
    )


def test_criterion_02_triple_conjugate_equals_conjugate():
    """f*** == f* as functions (mutual piece-domination LPs) on 50 instances."""
    worst = 0.0
    for i in range(50):
        dim = 1 if i < 22 else (2 if i < 44 else 3)
        rng = np.random.default_rng(200 + i)
        f = random_cpf(rng, dim, n_pieces=int(rng.integers(2, 5)))
        star = conjugate(f)
        triple = conjugate(conjugate(star))
        equal, violation = cpf_functions_equal(triple, star)
        assert equal, f"instance {i} (d={dim}): f*** != f* by {violation:.3e}"
        worst = max(worst, violation)
    print(
        f"criterion 02: PASS — f*** == f* on 50 instances"
        f" (worst domination violation {worst:.3g})"
    )


def test_criterion_03_threshold_identity_and_convex_zero():
    """eps_threshold == f - f** within 1e-9 on 200 pairs; == 0.0 on convex."""
    worst = 0.0
    pairs = 0
    for i in range(100):
        dim = 1 if i < 60 else 2
        rng = np.random.default_rng(300 + i)
        f = random_pmf(rng, dim, n_branches=int(rng.integers(2, 5)))
        pts, vals = pmf_epigraph_points(f)
        corners_per_branch = 2**dim
        corner = tuple(float(v) for v in pts[rng.integers(0, len(pts))])
        b = int(rng.integers(0, len(f.branches)))
        block = pts[b * corners_per_branch : (b + 1) * corners_per_branch]
        weights = rng.dirichlet(np.ones(len(block)))
        inside = tuple(float(v) for v in weights @ block)
        for x in (corner, inside):
            got = eps_threshold(f, x)
            want = eval_function(f, x) - envelope_value(pts, vals, x)
            assert abs(got - want) <= 1e-9, (
                f"instance {i} probe {x}: threshold {got} vs oracle {want}"
            )
            worst = max(worst, abs(got - want))
            pairs += 1
    assert pairs == 200

    zero_probes = 0
    for i in range(60):
        dim = 1 if i % 2 == 0 else 2
        rng = np.random.default_rng(360 + i)
        f = random_cpf(rng, dim, n_pieces=int(rng.integers(2, 5)))
        for x in ((0.0,) * dim, tuple(rng.uniform(-0.9, 0.9, size=dim))):
            assert eps_threshold(f, x) == 0.0
            zero_probes += 1
    print(
        f"criterion 03: PASS — threshold identity on 200 pairs (worst"
        f" deviation {worst:.3g}), exactly 0.0 at {zero_probes} convex probes"
    )


def test_criterion_04_verify_corpus_unanimous():
    """Bundled verify corpus: every instance matches, verdicts unanimous."""
    t0 = time.monotonic()
    summary, code = corpus_run(CORPUS / "verify", "verify")
    elapsed = time.monotonic() - t0
    assert code == 0, f"corpus run exited {code}: {summary['summary']}"
    entries = summary["corpus"]
    assert len(entries) >= 12

    failing = [e["instance"] for e in entries if not e["verdicts"]["summ1"]]
    holding = [e["instance"] for e in entries if e["verdicts"]["summ1"]]
    assert len(failing) >= 4 and "fail-ind01-ind02" in failing
    assert len(holding) >= 8 and "hold-touching-balls" in holding

    for e in entries:
        v = e["verdicts"]
        four = (v["equality"], v["summ1"], v["sum1b"], v["sum1d"])
        assert len(set(four)) == 1, f"{e['instance']}: split verdicts {four}"
        assert v["consistent"] is True
        assert e["matches"] is True, f"{e['instance']}: {e['mismatches']}"
        p = e["parameters"]
        assert p["splits"] == 32
        assert p["box_radius"] == 10.0
        assert p["tolerance"] == 1e-6
    assert elapsed <= 120.0, f"criterion 04 took {elapsed:.1f}s > 120s"
    print(
        f"criterion 04: PASS — {len(entries)} instances"
        f" ({len(failing)} failing, {len(holding)} holding), all verdicts"
        f" unanimous and matching, {elapsed:.1f}s"
    )


def test_criterion_05_exact_rule_matches_minkowski_oracle():
    """Qualified pairs: exact rule holds at eps in {0, 0.1, 1}; the eps = 0
    set equals the independently built Minkowski sum of the two
    subdifferentials."""
    for i in range(30):
        dim = 1 if i < 15 else 2
        rng = np.random.default_rng(400 + i)
        f, g, anchor = random_anchored_pair(rng, dim)
        for eps in (0.0, 0.1, 1.0):
            status = exact_sum_rule_check(f, g, anchor, eps)
            assert status.holds and status.residual <= 1e-6, (
                f"pair {i} eps={eps}: residual {status.residual:.3e}"
            )
        summed = minkowski_sum_points(
            active_slopes(f, anchor), active_slopes(g, anchor)
        )
        exact_set = eps_subdiff_set(sum_cpf(f, g), anchor, 0.0)
        for q in summed:
            assert contains_point(exact_set, q, tol=1e-9), (
                f"pair {i}: Minkowski point {tuple(q)} outside d(f+g)"
            )
        for v in enumerate_vrep(exact_set).vertices:
            assert hull_contains(summed, v, tol=1e-9), (
                f"pair {i}: vertex {v} outside df + dg"
            )
    print(
        "criterion 05: PASS — 30 qualified pairs hold at eps in {0, 0.1, 1};"
        " eps = 0 sets match the Minkowski-sum oracle both ways at 1e-9"
    )


def test_criterion_06_relocation_contract():
    """100 relocations: exact membership at 1e-9 plus both sqrt(eps) bounds,
    with zero violations."""
    violations = 0
    for i in range(100):
        dim = 1 if i % 2 == 0 else 2
        rng = np.random.default_rng(600 + i)
        f = random_cpf(rng, dim, n_pieces=int(rng.integers(2, 5)))
        x = tuple(rng.uniform(-0.9, 0.9, size=dim))
        eps = float(10.0 ** rng.uniform(-4.0, 0.0))
        verts = enumerate_vrep(eps_subdiff_set(f, x, eps)).vertices
        assert verts, f"case {i}: empty approximate subdifferential"
        weights = rng.dirichlet(np.ones(len(verts)))
        xstar = tuple(float(v) for v in weights @ np.asarray(verts))
        wit = brondsted_rockafellar(f, x, xstar, eps)
        exact = contains_point(
            eps_subdiff_set(f, wit.z, 0.0), wit.zstar, tol=1e-9
        )
        if not (
            exact
            and wit.norm_primal <= math.sqrt(eps)
            and wit.norm_dual <= math.sqrt(eps)
        ):
            violations += 1
    assert violations == 0, f"{violations} of 100 relocations broke the contract"
    print(
        "criterion 06: PASS — 100 relocations: exact membership at 1e-9,"
        " |z - x|_1 and |z* - x*|_inf within sqrt(eps), zero violations"
    )


def test_criterion_07_sequential_witness_chain():
    """20 witness tables: every row within the chain bound, all five
    convergence columns below 1e-3 at n = 12."""
    for i in range(20):
        dim = 1 if i < 10 else 2
        rng = np.random.default_rng(700 + i)
        f, g, anchor = random_anchored_pair(rng, dim, slope_scale=2.5)
        s_f = f.pieces[int(rng.integers(0, len(f.pieces)))].slope
        s_g = g.pieces[int(rng.integers(0, len(g.pieces)))].slope
        xstar = tuple(a + b for a, b in zip(s_f, s_g))
        table = sequential_witnesses(f, g, anchor, xstar, 12)
        assert len(table.rows) == 12
        for row in table.rows:
            bound = table.chain_bound(row.n)
            assert row.sum_deviation <= bound, (
                f"pair {i} row {row.n}: deviation {row.sum_deviation:.3e}"
                f" > bound {bound:.3e}"
            )
        last = table.rows[-1]
        for name, value in zip(
            ("sum_deviation", "inner_f", "inner_g", "value_gap_f", "value_gap_g"),
            table.convergence_columns(last),
        ):
            assert abs(value) <= 1e-3, (
                f"pair {i} column {name} at n=12: {value:.3e} > 1e-3"
            )
    print(
        "criterion 07: PASS — 20 witness tables of 12 rows: chain bound holds"
        " on every row, all five convergence columns <= 1e-3 at n = 12"
    )


def test_criterion_08_integration_reconstructs_values():
    """Midpoint integration of a subgradient selection rebuilds the function
    within L * len / steps; pairs with identical subdifferentials rebuild a
    constant difference."""
    steps = 10_000
    worst_ratio = 0.0
    for i in range(20):
        dim = 1 if i < 10 else 2
        rng = np.random.default_rng(800 + i)
        f = random_cpf(rng, dim)
        x0 = tuple(rng.uniform(-0.9, 0.9, size=dim))
        target = tuple(rng.uniform(-0.9, 0.9, size=dim))
        lipschitz = max(float(np.linalg.norm(p.slope)) for p in f.pieces)
        length = float(np.linalg.norm(np.subtract(target, x0)))
        rec = integrate_subdiff(
            selection_oracle(f), x0, eval_function(f, x0), target, steps
        )
        err = abs(rec - eval_function(f, target))
        bound = lipschitz * length / steps
        assert err <= bound, f"instance {i}: error {err:.3e} > bound {bound:.3e}"
        worst_ratio = max(worst_ratio, err / bound if bound else 0.0)

    worst_spread = 0.0
    for i in range(10):
        dim = 1 if i % 2 == 0 else 2
        rng = np.random.default_rng(860 + i)
        f = random_cpf(rng, dim)
        shift = float(rng.uniform(-2.0, 2.0))
        shifted = [AffinePiece(p.slope, p.intercept + shift) for p in f.pieces]
        dominated = AffinePiece(
            f.pieces[0].slope, f.pieces[0].intercept + shift - 5.0
        )
        g = make_cpf(shifted + [dominated], f.domain.halfspaces, dim)
        x0 = tuple(rng.uniform(-0.5, 0.5, size=dim))
        oracle_f, oracle_g = selection_oracle(f), selection_oracle(g)
        diffs = []
        for _ in range(50):
            t = tuple(rng.uniform(-0.9, 0.9, size=dim))
            rec_f = integrate_subdiff(
                oracle_f, x0, eval_function(f, x0), t, 200
            )
            rec_g = integrate_subdiff(
                oracle_g, x0, eval_function(g, x0), t, 200
            )
            diffs.append(rec_g - rec_f)
        spread = max(diffs) - min(diffs)
        assert spread <= 1e-6, f"pair {i}: difference varies by {spread:.3e}"
        assert all(abs(d - shift) <= 1e-6 for d in diffs)
        worst_spread = max(worst_spread, spread)
    print(
        f"criterion 08: PASS — 20 reconstructions within L*len/steps (worst"
        f" ratio {worst_ratio:.2f}), 10 constant differences flat to"
        f" {worst_spread:.3g} over 50 points each"
    )


def test_criterion_09_relaxation_value_identity():
    """Min(f + I_F) == Min of the convex relaxation on 30 mixed-route
    instances; the bundled split-failure instance keeps value equality while
    its decomposition fails."""
    from fenchel_lab import MinProblem, relax_and_compare

    checked = 0
    for i in range(30):
        rng = np.random.default_rng(900 + i)
        dim = 1 if i % 2 == 0 else 2
        f = random_cpf(rng, dim)
        if i < 10:
            lo = rng.uniform(-0.9, 0.0, size=dim)
            hi = rng.uniform(0.1, 0.9, size=dim)
            problem = MinProblem(f, box(lo, hi), name=f"region-poly-{i}")
            budget = 1e-9
        elif i < 18:
            points = [tuple(rng.uniform(-0.9, 0.9, size=dim)) for _ in range(4)]
            problem = MinProblem(f, points, name=f"points-poly-{i}")
            budget = 1e-9
        else:
            nodes = 21 if dim == 1 else 13
            grid = Grid((-1.0,) * dim, (1.0,) * dim, (nodes,) * dim)
            sampled = sample_fn_on_grid(lambda p: eval_function(f, p), grid)
            spacing = max(grid.spacing)
            slope_inf = max(max(abs(s) for s in p.slope) for p in f.pieces)
            budget = spacing * (slope_inf + 1.0) + 1e-9
            if i < 24:
                problem = MinProblem(
                    sampled, box((-0.5,) * dim, (0.5,) * dim),
                    name=f"region-grid-{i}",
                )
            else:
                h = 2.0 / (nodes - 1)
                raw = rng.uniform(-1.0, 1.0, size=(4, dim))
                points = [
                    tuple(-1.0 + h * np.round((p + 1.0) / h)) for p in raw
                ]
                problem = MinProblem(sampled, points, name=f"points-grid-{i}")
                budget = 1e-9
        report = relax_and_compare(problem)
        assert report.gap <= budget, (
            f"{problem.name}: gap {report.gap:.3e} > {budget:.3e}"
        )
        checked += 1
    assert checked == 30

    bundled = run_instance(CORPUS / "relax" / "relax-ind01-feas02.json", "relax")
    assert bundled.verdicts == {"decomposition": False, "value_identity": True}
    assert bundled.matches is True
    print(
        "criterion 09: PASS — 30 instances with Min(f + I_F) == relaxed"
        " minimum within route tolerance; bundled instance keeps value"
        " equality while its decomposition fails"
    )


def test_criterion_10_reports_are_deterministic():
    """Running every bundled corpus twice yields byte-identical machine text."""
    commands = ("relax", "subdiff", "transform", "verify", "witnesses")
    for command in commands:
        first, code_first = corpus_run(CORPUS / command, command)
        second, code_second = corpus_run(CORPUS / command, command)
        assert code_first == code_second == 0
        text_first = machine_text(first)
        assert text_first == machine_text(second), (
            f"{command}: repeated corpus runs differ"
        )
        assert text_first.endswith("\n")
    print(
        "criterion 10: PASS — all five corpus commands produce byte-identical"
        " machine reports across repeated runs"
    )
