import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from abelrep.errors import GroupMismatchError, InvalidGroupError
from abelrep.groups import (
    FiniteAbelianGroup,
    add,
    cyclic,
    element_order,
    enumerate_elements,
    is_coset,
    is_subgroup,
    kernel_of_mult,
    neg,
    normalize_group,
    order_census,
    quotient_lift,
    scalar_mul,
)


def census_of(orders):
    return order_census(FiniteAbelianGroup(tuple(orders)))


@pytest.mark.parametrize(
    "orders, expected",
    [([6], (6,)), ([2, 3], (6,)), ([4, 6], (12, 2)), ([2, 2, 3], (6, 2)), ([8, 4, 2], (8, 4, 2))],
)
def test_normalize_group(orders, expected):
    G = normalize_group(orders)
    assert G.orders == expected
    assert G.is_canonical
    # isomorphic groups share the element-order census
    assert order_census(G) == census_of(orders)


def test_normalize_rejects_trivial_factor():
    with pytest.raises(InvalidGroupError):
        normalize_group([1, 4])


@given(st.lists(st.integers(2, 12), min_size=1, max_size=3))
def test_normalize_preserves_order_and_census(orders):
    G = normalize_group(orders)
    assert G.order == FiniteAbelianGroup(tuple(orders)).order
    assert all(a % b == 0 for a, b in zip(G.orders, G.orders[1:]))
    if G.order <= 2000:
        assert order_census(G) == census_of(orders)


def test_arithmetic_examples(Z):
    V4, Z6 = Z(2, 2), Z(6)
    assert add(V4.element((1, 1)), V4.element((1, 1))).coords == (0, 0)
    assert scalar_mul(2, Z6.element((1,))).coords == (2,)
    assert neg(Z6.element((5,))).coords == (1,)
    with pytest.raises(GroupMismatchError):
        add(V4.element((1, 0)), Z6.element((1,)))


@given(st.sampled_from([(6,), (4, 2), (3, 3), (2, 2, 2)]), st.data())
def test_group_axioms(orders, data):
    G = FiniteAbelianGroup(orders)
    pick = lambda: G.element(data.draw(st.tuples(*[st.integers(0, n - 1) for n in orders])))
    a, b, c = pick(), pick(), pick()
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert (a + G.zero()) == a
    assert (a + (-a)).is_zero()
    assert element_order(a) * 1 and scalar_mul(element_order(a), a).is_zero()


@pytest.mark.parametrize(
    "d, orders, expected",
    [
        (1, (6,), [(0,)]),
        (2, (6,), [(0,), (3,)]),
        (2, (4, 2), [(0, 0), (0, 1), (2, 0), (2, 1)]),
    ],
)
def test_kernel_of_mult(d, orders, expected):
    got = sorted(x.coords for x in kernel_of_mult(d, FiniteAbelianGroup(orders)))
    assert got == expected


@given(st.integers(1, 12), st.sampled_from([(6,), (4, 2), (12,), (3, 3)]))
def test_kernel_matches_brute_force(d, orders):
    G = FiniteAbelianGroup(orders)
    brute = sorted(x.coords for x in enumerate_elements(G) if scalar_mul(d, x).is_zero())
    kern = kernel_of_mult(d, G)
    assert sorted(x.coords for x in kern) == brute
    assert is_subgroup(kern)


@pytest.mark.parametrize(
    "orders, lifted, beta",
    [((6,), (6,), 1), ((4, 2), (4, 4), 2), ((6, 2), (6, 6), 3)],
)
def test_quotient_lift(orders, lifted, beta):
    G = FiniteAbelianGroup(orders)
    Gp, tau, b = quotient_lift(G)
    assert Gp.orders == lifted and b == beta
    # fiber census: tau is a surjective homomorphism with equal fibers
    sizes = {len(tau.fiber(x)) for x in enumerate_elements(G)}
    assert sizes == {Gp.order // G.order}
    for x, y in itertools.product(list(enumerate_elements(Gp))[:12], repeat=2):
        assert tau(x + y) == tau(x) + tau(y)


def test_enumerate_elements_order(Z):
    assert [x.coords for x in enumerate_elements(Z(2))] == [(0,), (1,)]
    assert len(list(enumerate_elements(Z(2, 2)))) == 4
    assert [x.coords[0] for x in enumerate_elements(cyclic(6))] == list(range(6))


def test_index_roundtrip(Z):
    G = Z(4, 2)
    for i in range(G.order):
        assert G.index(G.from_index(i).coords) == i


def test_subgroup_and_coset_predicates(Z):
    G = Z(4)
    H = [G.element((0,)), G.element((2,))]
    assert is_subgroup(H)
    coset = [G.element((1,)), G.element((3,))]
    assert not is_subgroup(coset)
    assert is_coset(coset)
    assert not is_coset([G.element((0,)), G.element((1,))])


def test_json_roundtrip(Z):
    G = Z(12, 2)
    assert FiniteAbelianGroup.from_json(G.to_json()) == G
