"""Acceptance criteria 1-10, one PASS/FAIL line each, exact integer equality throughout.

Run through pytest (the lines are repeated in the terminal summary) or directly
with ``python tests/test_acceptance.py``.

Criteria 3 and 10 range over the family "k <= 2, m <= 4, entries in [0, 3]" over
six groups, about 420,000 systems. By default a stratified subset is run and the
criterion is reported as FAIL (not established). ``ABELREP_FULL_FAMILY=1``
runs the whole family for both criteria, and ``ABELREP_FULL_PARTITION=1`` runs it
for criterion 10 only, which takes about an hour on one core.
"""

from __future__ import annotations

import itertools
import os
import time
from math import gcd, prod

import numpy as np
import pytest

from abelrep.applications import build_corner_system, corner_group, count_corners, homothetic_checks, random_subset
from abelrep.errors import PreconditionError
from abelrep.groups import FiniteAbelianGroup
from abelrep.homsystem import HomSystem, enumerate_solutions, project_solutions
from abelrep.hypergraph import (
    build_K_from_circular,
    enumerate_copies,
    greedy_edge_cover,
    removal_deletion,
    restrict_to_domains,
    transfer_1_auto,
    transfer_mu_auto,
    transfer_mu_equiv_1,
    transfer_mu_equiv_2,
    verify_rp_properties,
)
from abelrep.intmatrix import (
    IntMatrix,
    band_shape_ok,
    bareiss_det,
    block,
    build_band_annihilator,
    determinantal_divisor,
    is_block_n_circular,
    smith_normal_form,
)
from abelrep.perms import census
from abelrep.pipeline import (
    AffineMap,
    EquivalenceMap,
    circularize,
    dehomogenize,
    lift_to_homocyclic,
    obs_partition_check,
    run_full_pipeline,
)

RESULTS: dict[int, str] = {}

FAMILY_GROUPS = [(2,), (3,), (4,), (6,), (2, 2), (4, 2)]
FAMILY_SHAPES = [(k, m) for k in (1, 2) for m in range(1, 5)]
FULL_FAMILY = os.environ.get("ABELREP_FULL_FAMILY") == "1"
FULL_PARTITION = FULL_FAMILY or os.environ.get("ABELREP_FULL_PARTITION") == "1"


def report(n: int, passed: bool, detail: str) -> bool:
    line = f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line, flush=True)
    return passed


def family(orders, full: bool):
    """Systems of the criterion-3 family over one group, or a stratified subset."""
    G = FiniteAbelianGroup(orders)
    rng = np.random.default_rng(sum(orders) * 1009 + len(orders))
    for k, m in FAMILY_SHAPES:
        if full:
            cells = itertools.product(range(4), repeat=k * m)
        else:
            # one random matrix per shape, plus the all-ones and all-zero matrices
            cells = [tuple(rng.integers(0, 4, k * m)), (1,) * (k * m)]
            if k == 1 and m == 3:
                cells.append((0,) * 3)
        for flat in cells:
            yield HomSystem.scalar([list(flat[r * m : (r + 1) * m]) for r in range(k)], G)


def family_size() -> int:
    return len(FAMILY_GROUPS) * sum(4 ** (k * m) for k, m in FAMILY_SHAPES)


# ---------------------------------------------------------------------- 1


def brute_minors_gcd(A: IntMatrix, i: int) -> int:
    g = 0
    for rows in itertools.combinations(range(A.rows), i):
        for cols in itertools.combinations(range(A.cols), i):
            g = gcd(g, bareiss_det([[A[r, c] for c in cols] for r in rows]))
    return g


def criterion_1() -> bool:
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(1000):
        r, c = int(rng.integers(1, 5)), int(rng.integers(1, 6))
        A = IntMatrix(rng.integers(-5, 6, (r, c)).tolist(), c)
        snf = smith_normal_form(A)
        d = snf.diag
        ok = snf.U @ A @ snf.V == snf.S
        ok &= abs(snf.U.det()) == 1 and abs(snf.V.det()) == 1
        ok &= all(b % a == 0 if a else b == 0 for a, b in zip(d, d[1:]))
        for i in range(1, min(r, c) + 1):
            ok &= determinantal_divisor(A, i) == prod(d[:i]) == brute_minors_gcd(A, i)
        bad += not ok
    dt = time.perf_counter() - t0
    return report(1, bad == 0 and dt < 10, f"1000 random SNFs, {bad} failures, {dt:.1f}s (limit 10s)")


# ---------------------------------------------------------------------- 2


def criterion_2() -> bool:
    sol = enumerate_solutions(HomSystem.scalar([[1, 2, 2]], FiniteAbelianGroup((6,))))
    S1 = [x.coords[0] for x in project_solutions(sol, 1)]
    return report(2, S1 == [0, 2, 4], f"S_1 of x1 + 2(x2 + x3) = 0 over Z6 is {S1}")


# ---------------------------------------------------------------------- 3


def audit(tr) -> tuple[bool, bool]:
    """(every stage satisfies |S_next| = mu |S_prev| with uniform fibers, all exhaustive)."""
    ok = not tr.empty and tr.final_is_circular
    for st in tr.stages:
        rep = st.report
        ok &= rep is not None and rep.ok and rep.count2 == st.map.mu * rep.count1
    return ok, tr.exhaustive


def criterion_3() -> tuple[bool, dict]:
    t0 = time.perf_counter()
    stats = {"systems": 0, "identity_ok": 0, "exhaustive": 0, "failures": []}
    worked = run_full_pipeline(HomSystem.scalar([[2, 2, 2]], FiniteAbelianGroup((4,))))
    sim = next(s for s in worked.stages if s.label == "simulate")
    worked_ok = sim.map.mu == 2 and (sim.report.count1, sim.report.count2) == (32, 64) and all(audit(worked))
    for orders in FAMILY_GROUPS:
        for sys in family(orders, FULL_FAMILY):
            ok, exh = audit(run_full_pipeline(sys))
            stats["systems"] += 1
            stats["identity_ok"] += ok
            stats["exhaustive"] += ok and exh
            if not ok:
                stats["failures"].append((orders, sys.matrix.tolist()))
    dt = time.perf_counter() - t0
    complete = FULL_FAMILY and stats["systems"] == family_size()
    passed = complete and worked_ok and stats["exhaustive"] == stats["systems"] and dt < 300
    scope = "full family" if FULL_FAMILY else f"stratified subset of the {family_size()}-system family"
    detail = (
        f"{scope}: {stats['identity_ok']}/{stats['systems']} pass the mu-audit, "
        f"{stats['exhaustive']} certified exhaustively; worked case (2 2 2)/Z4 32->64 "
        f"{'ok' if worked_ok else 'WRONG'}; {dt:.0f}s (limit 300s)"
    )
    if not complete:
        detail += "; full family not run"
    report(3, passed, detail)
    stats["worked_ok"] = worked_ok
    return passed, stats


# ---------------------------------------------------------------------- 4


def random_identity_shape(rng, k: int, m: int, t: int, n: int) -> IntMatrix:
    rows = []
    for r in range(k * t):
        ident = [int(r == c) for c in range(k * t)]
        rows.append(ident + rng.integers(0, n, (m - k) * t).tolist())
    return IntMatrix(rows, m * t)


def criterion_4() -> bool:
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    n_circ = n_ann = bad = 0
    attempts = 0
    while (n_circ < 150 or n_ann < 150) and attempts < 20000:
        attempts += 1
        t = int(rng.integers(1, 3))
        n = int(rng.choice([2, 3, 4, 5, 6]))
        m = int(rng.integers(3, 7))
        k = int(rng.integers(1, m - 1))
        A = random_identity_shape(rng, k, m, t, n)
        G = FiniteAbelianGroup((n,) * t)
        if n_circ < 150:
            try:
                Jbar, _ = circularize(HomSystem(A, G), n)
            except PreconditionError:
                Jbar = None  # block determinant not a unit: outside the contract
            if Jbar is not None:
                n_circ += 1
                bad += not is_block_n_circular(Jbar.matrix, t, n)
        if n_ann < 150 and is_block_n_circular(A, t, n):
            n_ann += 1
            C = build_band_annihilator(A, t, n)
            ok = (A @ C).is_zero() and band_shape_ok(C, t, k)
            ok &= all(gcd(block(C, i, i, t).det(), n) == 1 for i in range(m))
            bad += not ok
    dt = time.perf_counter() - t0
    passed = bad == 0 and n_circ == 150 and n_ann == 150 and dt < 60
    return report(
        4, passed, f"{n_circ} circularize outputs, {n_ann} band annihilators (t <= 2, m <= 6), {bad} failures, {dt:.1f}s"
    )


# ---------------------------------------------------------------------- 5


def criterion_5() -> bool:
    t0 = time.perf_counter()
    Z5 = FiniteAbelianGroup((5,))
    sys = HomSystem.scalar([[1, 1, 1]], Z5)
    K, cert = build_K_from_circular(sys)
    rep = verify_rp_properties(cert, strong=True)
    tri_ok = rep.ok and rep.copies == 125 and rep.class_sizes == {5: 25} and rep.rp4
    tri_ok &= len(enumerate_copies(cert.H, K, partite=True)) == 125
    fam_bad = []
    for m in (3, 4):
        for n in range(2, 8):
            s = HomSystem.scalar([[1] * m], FiniteAbelianGroup((n,)))
            _, c = build_K_from_circular(s)
            r = verify_rp_properties(c, strong=True)
            if not (r.ok and r.copies == enumerate_solutions(s).count * n):
                fam_bad.append((m, n))
    dt = time.perf_counter() - t0
    passed = tri_ok and not fam_bad and dt < 120
    return report(
        5, passed, f"Z5 triangle 125 copies, 5 per solution, RP1-RP4 {'ok' if tri_ok else 'FAILED'}; "
        f"family m in {{3,4}}, Z2..Z7: {12 - len(fam_bad)}/12 with copies = |S|*|G|; {dt:.1f}s"
    )


# ---------------------------------------------------------------------- 6


def transfer_instances():
    Z2, Z3, Z4, Z5 = (FiniteAbelianGroup((n,)) for n in (2, 3, 4, 5))
    one = lambda f: AffineMap(IntMatrix([[f]]), (0,))  # noqa: E731
    out = {}

    tri = HomSystem.scalar([[1, 1, 1]], Z5)
    _, c_tri = build_K_from_circular(tri)
    shifted = tri.with_rhs([Z5.element((1,))])
    _, shift = dehomogenize(shifted)
    out["1-auto (shift)"] = transfer_1_auto(c_tri, shift, shifted)

    cyc = HomSystem.scalar([[1, 1, 1, 1]], Z4)
    _, c_cyc = build_K_from_circular(cyc)
    drop = transfer_mu_auto(c_cyc, EquivalenceMap.projection((0, 1, 2), Z4, 1, "mu-auto"), HomSystem.scalar([[0, 0, 0]], Z4))
    out["mu-auto (drop x4)"] = drop
    out["mu-auto (keep x1, x3)"] = transfer_mu_auto(
        c_cyc, EquivalenceMap.projection((0, 2), Z4, 4, "mu-auto"), HomSystem.scalar([[0, 0]], Z4)
    )
    k2 = HomSystem.scalar([[1, 0, 1, 1], [0, 1, 1, 2]], Z3)
    _, c_k2 = build_K_from_circular(k2)
    out["mu-auto (k=2)"] = transfer_mu_auto(c_k2, EquivalenceMap.projection((0, 2), Z3, 1, "mu-auto"), HomSystem.scalar([[0, 0]], Z3))

    red = EquivalenceMap((0, 1, 2), (one(1),) * 3, 8, "mu-equiv-1", Z4, Z2)
    out["mu-equiv-1 (mod 2)"] = transfer_mu_equiv_1(drop, red, HomSystem.scalar([[0, 0, 0]], Z2))

    dbl = EquivalenceMap((0, 1, 2), (one(2), one(1), one(1)), 2, "mu-equiv-2", Z4, Z4)
    out["mu-equiv-2 (double x1)"] = transfer_mu_equiv_2(c_cyc, dbl, HomSystem.scalar([[2, 0, 0]], Z4))
    return out


def criterion_6() -> bool:
    t0 = time.perf_counter()
    certs = transfer_instances()
    status = {name: verify_rp_properties(c).ok and c.report.ok for name, c in certs.items()}
    kinds = {"1-auto", "mu-auto", "mu-equiv-1", "mu-equiv-2"}
    covered = {name.split(" ")[0] for name, ok in status.items() if ok}
    dt = time.perf_counter() - t0
    passed = all(status.values()) and covered == kinds and dt < 300
    listing = ", ".join(f"{k} {'ok' if v else 'FAIL'}" for k, v in status.items())
    return report(6, passed, f"{listing}; {dt:.1f}s")


# ---------------------------------------------------------------------- 7


def criterion_7() -> bool:
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    cases = []
    Z5, Z4, Z3 = (FiniteAbelianGroup((n,)) for n in (5, 4, 3))
    for sys in (
        HomSystem.scalar([[1, 1, 1]], Z5),
        HomSystem.scalar([[1, 2, 3]], Z5),
        HomSystem.scalar([[1, 1, 1, 1]], Z4),
        HomSystem.scalar([[1, 0, 1, 1], [0, 1, 1, 2]], Z3),
    ):
        _, cert = build_K_from_circular(sys)
        n = sys.group.orders[0]
        cases.append((cert, [[(0,), (1,)]] + [None] * (sys.m - 1)))
        for _ in range(3):
            X = [[(v,) for v in range(n) if rng.random() < 0.6] for _ in range(sys.m)]
            cases.append((cert, X))
    verified = 0
    for cert, X in cases:
        cover = greedy_edge_cover(cert.H, restrict_to_domains(cert.K, X), partite=cert.partite)
        res = removal_deletion(cert, X, cover)
        verified += res.verified
    dt = time.perf_counter() - t0
    passed = verified == len(cases) and dt < 60
    return report(7, passed, f"{verified}/{len(cases)} greedy-cover instances give S(A, G, X minus X') empty; {dt:.1f}s")


# ---------------------------------------------------------------------- 8


def criterion_8() -> bool:
    t0 = time.perf_counter()
    out = census(t_max=3, n_max=7)
    expected = sum(
        prod(range(1, t + 1)) * sum(prod(range(1, n + 1)) for n in range(t, 8)) for t in range(1, 4)
    )
    dt = time.perf_counter() - t0
    passed = out["ok"] and out["pairs"] == expected and dt < 300
    return report(8, passed, f"{out['agree']}/{out['pairs']} (tau, sigma) pairs agree; {dt:.1f}s")


# ---------------------------------------------------------------------- 9


def criterion_9() -> bool:
    t0 = time.perf_counter()
    ident_ok = True
    agree = total = 0
    rng = np.random.default_rng(9)
    for orders, m in (((3,), 2), ((2,), 3), ((5,), 2)):
        G = FiniteAbelianGroup(orders)
        sys = build_corner_system(G, m)
        chk = homothetic_checks(sys)
        ident_ok &= chk["count"] == G.order ** (m + 1) and chk["projections_full"] and chk["diagonal_inside"]
        P = corner_group(G, m)
        for _ in range(100):
            S = random_subset(P, float(rng.uniform(0.2, 0.9)), int(rng.integers(2**31)))
            agree += count_corners(sys, S, G=G).agree
            total += 1
    dt = time.perf_counter() - t0
    passed = ident_ok and agree == total and dt < 60
    return report(
        9, passed, f"|S| = |G|^(m+1) with full projections {'ok' if ident_ok else 'FAILED'}; "
        f"double count agrees on {agree}/{total} random subsets; {dt:.1f}s"
    )


# ---------------------------------------------------------------------- 10


def criterion_10() -> tuple[bool, int, int]:
    t0 = time.perf_counter()
    checked = good = 0
    for orders in FAMILY_GROUPS:
        seen = set()
        for sys in family(orders, FULL_PARTITION):
            if not sys.group.is_homocyclic:
                sys, _ = lift_to_homocyclic(sys)
            key = sys.reduced_matrix().tobytes() + bytes(sys.reduced_matrix().shape)
            if key in seen:
                continue  # same system after reduction mod the group exponent
            seen.add(key)
            checked += 1
            good += obs_partition_check(sys)
    dt = time.perf_counter() - t0
    scope = "full family" if FULL_PARTITION else "stratified subset"
    detail = f"{scope}: {good}/{checked} distinct systems partition exactly; {dt:.0f}s"
    if not FULL_PARTITION:
        detail += "; full family not run"
    return report(10, FULL_PARTITION and good == checked, detail), good, checked


# ---------------------------------------------------------------------- pytest wrappers


def test_criterion_1_snf_witnesses():
    assert criterion_1()


def test_criterion_2_projection():
    assert criterion_2()


def test_criterion_3_pipeline_mu_audit():
    passed, stats = criterion_3()
    # what was run must be right even when the criterion as a whole is out of reach
    assert stats["worked_ok"]
    assert stats["identity_ok"] == stats["systems"], stats["failures"][:5]
    if not passed:
        pytest.xfail(RESULTS[3])


def test_criterion_4_circularity():
    assert criterion_4()


def test_criterion_5_representation_counts():
    assert criterion_5()


def test_criterion_6_transfers():
    assert criterion_6()


def test_criterion_7_removal():
    assert criterion_7()


def test_criterion_8_permutation_census():
    assert criterion_8()


def test_criterion_9_corners():
    assert criterion_9()


def test_criterion_10_partition():
    passed, good, checked = criterion_10()
    assert good == checked > 0
    if not passed:
        pytest.xfail(RESULTS[10])


if __name__ == "__main__":
    for fn in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
               criterion_6, criterion_7, criterion_8, criterion_9, criterion_10):
        fn()
