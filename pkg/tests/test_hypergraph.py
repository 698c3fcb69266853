import json
from dataclasses import replace
from fractions import Fraction

import pytest

from abelrep.errors import InvalidInputError, PreconditionError
from abelrep.groups import FiniteAbelianGroup
from abelrep.homsystem import HomSystem, enumerate_solutions
from abelrep.hypergraph import (
    ColoredHypergraph,
    Edge,
    build_cycle_template_H,
    build_K_from_circular,
    certificate_from_json,
    enumerate_copies,
    greedy_edge_cover,
    identity_representation,
    removal_deletion,
    restrict_to_domains,
    transfer_1_auto,
    transfer_mu_auto,
    transfer_mu_equiv_1,
    transfer_mu_equiv_2,
    verify_rp_properties,
)
from abelrep.intmatrix import IntMatrix
from abelrep.pipeline import AffineMap, EquivalenceMap, dehomogenize

Z2, Z3, Z4, Z5 = (FiniteAbelianGroup((n,)) for n in (2, 3, 4, 5))


@pytest.fixture(scope="module")
def triangle():
    sys = HomSystem.scalar([[1, 1, 1]], Z5)
    K, cert = build_K_from_circular(sys)
    return sys, K, cert


@pytest.fixture(scope="module")
def four_cycle():
    sys = HomSystem.scalar([[1, 1, 1, 1]], Z4)
    return sys, build_K_from_circular(sys)[1]


def scalar_map(factors, mu, kind, source, target):
    maps = tuple(AffineMap(IntMatrix([[f]]), (0,)) for f in factors)
    return EquivalenceMap(tuple(range(len(factors))), maps, mu, kind, source, target)


# ---------------------------------------------------------------- templates


def test_cycle_template_triangle():
    H = build_cycle_template_H(3, 1)
    assert sorted((e.color, tuple(sorted(e.verts))) for e in H.edges) == [(1, (0, 1)), (2, (1, 2)), (3, (0, 2))]


def test_cycle_template_triples():
    H = build_cycle_template_H(4, 2)
    assert sorted(tuple(sorted(e.verts)) for e in H.edges) == [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    assert H.uniformity == 3


def test_cycle_template_rejects_short_cycle():
    with pytest.raises(InvalidInputError):
        build_cycle_template_H(2, 1)


def test_duplicate_edges_rejected():
    with pytest.raises(InvalidInputError):
        ColoredHypergraph([[0], [1]], 2, [Edge(1, (0, 1)), Edge(1, (1, 0))])


# ---------------------------------------------------------------- construction and copies


def test_K_from_triangle(triangle):
    sys, K, cert = triangle
    assert sum(len(c) for c in K.clusters) == 15
    assert cert.p == 1 and cert.Q == ((),)
    assert cert.c == Fraction(1, 9) and cert.lam == 5
    # color-1 edges join clusters 1 and 2 with label g1 - g2
    for e in K.edges_of_color(1):
        u, v = sorted(e.verts)
        assert e.label == ((u % 5 - v % 5) % 5,)


def test_triangle_copy_count(triangle):
    sys, K, cert = triangle
    copies = enumerate_copies(cert.H, K, partite=True)
    assert len(copies) == 125
    for f in copies[:40]:
        labels = [K.label(e.color, tuple(f[v] for v in e.verts)) for e in sorted(cert.H.edges, key=lambda e: e.color)]
        assert sys.is_solution(labels)


def test_missing_color_kills_copies(triangle):
    _, K, cert = triangle
    K2 = K.without([(e.color, e.verts) for e in K.edges_of_color(2)])
    assert enumerate_copies(cert.H, K2) == []


def test_restricted_copies(triangle):
    _, K, cert = triangle
    KX = restrict_to_domains(K, [[(0,)], None, None])
    assert len(enumerate_copies(cert.H, KX, partite=True)) == 25


def test_build_K_preconditions():
    with pytest.raises(PreconditionError):
        build_K_from_circular(HomSystem.scalar([[1, 1]], Z5))  # m < k + 2
    with pytest.raises(PreconditionError):
        build_K_from_circular(HomSystem.scalar([[1, 1, 1]], Z5, rhs=[Z5.element((1,))]))
    with pytest.raises(PreconditionError):
        build_K_from_circular(HomSystem.scalar([[1, 1, 1]], Z5), C=IntMatrix.identity(3))


# ---------------------------------------------------------------- RP suite


def test_rp_suite_triangle(triangle):
    _, _, cert = triangle
    rep = verify_rp_properties(cert, strong=True)
    assert rep.ok and rep.rp1 and rep.rp2 and rep.rp3 and rep.rp4
    assert rep.copies == 125 and rep.lambda_measured == 5
    assert rep.class_sizes == {5: 25}  # 25 solutions, 5 copies each


@pytest.mark.parametrize("m", [3, 4])
@pytest.mark.parametrize("n", [2, 3, 5, 6])
def test_rp_suite_family(m, n):
    G = FiniteAbelianGroup((n,))
    sys = HomSystem.scalar([[1] * m], G)
    _, cert = build_K_from_circular(sys)
    rep = verify_rp_properties(cert)
    assert rep.ok
    assert rep.copies == enumerate_solutions(sys).count * n


def test_wrong_p_fails_rp2(triangle):
    _, _, cert = triangle
    rep = verify_rp_properties(replace(cert, p=Fraction(2)))
    assert not rep.rp2 and not rep.ok
    assert rep.counterexamples


def test_identity_representation_triangle_in_K4():
    H0 = ColoredHypergraph([[0], [1], [2]], 2, [Edge(1, (0, 1)), Edge(2, (1, 2)), Edge(3, (0, 2))])
    K0 = ColoredHypergraph(
        [[i] for i in range(4)], 2, [Edge(c, (a, b)) for c in (1, 2, 3) for a in range(4) for b in range(a + 1, 4)]
    )
    cert = identity_representation(H0, K0)
    assert cert.p == 1 and cert.c == 1 and cert.lam == 1
    assert verify_rp_properties(cert, strong=False).ok
    # colored triangles: ordered triples of distinct vertices
    assert len(cert.domain.solutions()) == 24


def test_identity_representation_single_edge():
    H0 = ColoredHypergraph([[0], [1]], 2, [Edge(1, (0, 1))])
    K0 = ColoredHypergraph([[0], [1], [2]], 2, [Edge(1, (0, 1)), Edge(1, (1, 2)), Edge(2, (0, 2))])
    cert = identity_representation(H0, K0)
    assert len(cert.domain.solutions()) == 2  # the colour-1 edges
    rep = verify_rp_properties(cert, strong=False)
    assert rep.rp2 and rep.rp3
    assert not rep.rp1  # h = s: RP1 asks for more vertices than the uniformity


def test_identity_representation_empty_K():
    H0 = ColoredHypergraph([[0], [1]], 2, [Edge(1, (0, 1))])
    K0 = ColoredHypergraph([[0], [1], [2]], 2, [])
    assert len(identity_representation(H0, K0).domain.solutions()) == 0


def test_identity_representation_rejects_repeated_color():
    H0 = ColoredHypergraph([[0], [1], [2]], 2, [Edge(1, (0, 1)), Edge(1, (1, 2))])
    with pytest.raises((InvalidInputError, PreconditionError)):
        identity_representation(H0, H0)


# ---------------------------------------------------------------- transfers


def test_transfer_identity_map_keeps_certificate(triangle):
    sys, _, cert = triangle
    out = transfer_1_auto(cert, EquivalenceMap.identity(3, Z5), sys)
    assert out.report.ok
    assert out.gamma == cert.gamma and out.p == cert.p


def test_transfer_1_auto_shift(triangle):
    sys, _, cert = triangle
    shifted = sys.with_rhs([Z5.element((1,))])
    _, emap = dehomogenize(shifted)
    out = transfer_1_auto(cert, emap, shifted)
    assert out.report.ok


def test_transfer_mu_auto_drop_variable(four_cycle):
    _, cert = four_cycle
    out = transfer_mu_auto(cert, EquivalenceMap.projection((0, 1, 2), Z4, 1, "mu-auto"), HomSystem.scalar([[0, 0, 0]], Z4))
    assert out.report.ok and out.p == 1


def test_transfer_mu_auto_two_variables(four_cycle):
    _, cert = four_cycle
    out = transfer_mu_auto(cert, EquivalenceMap.projection((0, 2), Z4, 4, "mu-auto"), HomSystem.scalar([[0, 0]], Z4))
    assert out.report.ok and len(out.Q) == 4


def test_transfer_needs_partite_copies(four_cycle):
    _, cert = four_cycle
    loose = replace(cert, partite=False)
    out = transfer_mu_auto(loose, EquivalenceMap.projection((0, 2), Z4, 4, "mu-auto"), HomSystem.scalar([[0, 0]], Z4))
    assert not out.report.ok


def test_transfer_mu_equiv_1_reduction(four_cycle):
    _, cert = four_cycle
    mid = transfer_mu_auto(cert, EquivalenceMap.projection((0, 1, 2), Z4, 1, "mu-auto"), HomSystem.scalar([[0, 0, 0]], Z4))
    emap = scalar_map([1, 1, 1], 8, "mu-equiv-1", Z4, Z2)
    out = transfer_mu_equiv_1(mid, emap, HomSystem.scalar([[0, 0, 0]], Z2))
    assert out.report.ok and len(out.Q) == 4


def test_transfer_mu_equiv_2_doubling(four_cycle):
    _, cert = four_cycle
    emap = scalar_map([2, 1, 1], 2, "mu-equiv-2", Z4, Z4)
    out = transfer_mu_equiv_2(cert, emap, HomSystem.scalar([[2, 0, 0]], Z4))
    assert out.report.ok
    assert out.gamma == (2, 1, 1) and out.p == 1


def test_transfer_k2_projection():
    sys = HomSystem.scalar([[1, 0, 1, 1], [0, 1, 1, 2]], Z3)
    _, cert = build_K_from_circular(sys)
    out = transfer_mu_auto(cert, EquivalenceMap.projection((0, 2), Z3, 1, "mu-auto"), HomSystem.scalar([[0, 0]], Z3))
    assert out.report.ok


def test_certificate_json_roundtrip(four_cycle):
    _, cert = four_cycle
    out = transfer_mu_equiv_2(cert, scalar_map([2, 1, 1], 2, "mu-equiv-2", Z4, Z4), HomSystem.scalar([[2, 0, 0]], Z4))
    again = certificate_from_json(json.loads(json.dumps(out.to_json())))
    assert verify_rp_properties(again).ok


# ---------------------------------------------------------------- removal


def test_greedy_cover_hits_every_copy(triangle):
    _, K, cert = triangle
    KX = restrict_to_domains(K, [[(0,), (1,)], None, None])
    cover = greedy_edge_cover(cert.H, KX, partite=True)
    assert enumerate_copies(cert.H, KX.without(cover), partite=True) == []


def test_greedy_cover_no_copies(triangle):
    _, K, cert = triangle
    empty = K.without([(e.color, e.verts) for e in K.edges_of_color(1)])
    assert greedy_edge_cover(cert.H, empty) == []


def test_removal_with_greedy_cover(triangle):
    _, K, cert = triangle
    X = [[(0,), (1,)], None, None]
    cover = greedy_edge_cover(cert.H, restrict_to_domains(K, X), partite=True)
    res = removal_deletion(cert, X, cover)
    assert res.verified
    assert sorted(res.Xprime[0]) == [(0,), (1,)]


def test_removal_all_color_one_edges(triangle):
    _, K, cert = triangle
    res = removal_deletion(cert, None, [(e.color, e.verts) for e in K.edges_of_color(1)])
    assert res.verified and len(res.Xprime[0]) == 5


def test_removal_empty_domain(triangle):
    _, _, cert = triangle
    res = removal_deletion(cert, [[], None, None], [])
    assert res.verified and all(len(x) == 0 for x in res.Xprime)


def test_removal_rejects_insufficient_cover(triangle):
    _, _, cert = triangle
    with pytest.raises(PreconditionError):
        removal_deletion(cert, None, [])
