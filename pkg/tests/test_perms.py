import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from abelrep.errors import InvalidInputError
from abelrep.perms import (
    BLUE,
    RED,
    Permutation,
    build_pattern_digraph,
    census,
    copies_match_occurrences,
    greedy_pair_deletion,
    occurrences,
)

perms = st.integers(1, 6).flatmap(lambda n: st.permutations(range(n)).map(Permutation))


def P(text):
    return Permutation.parse(text)


def test_parse_and_json():
    p = P("2 0 1")
    assert p.values == (2, 0, 1)
    assert Permutation.parse("2,0,1") == p
    assert Permutation.from_json(p.to_json()) == p
    assert Permutation.from_json([2, 0, 1]) == p
    assert str(p) == "2 0 1"


def test_not_a_permutation():
    with pytest.raises(InvalidInputError):
        Permutation((0, 0, 1))


def test_digraph_identity_two():
    G = build_pattern_digraph(P("0 1"))
    assert [(e.color, e.verts) for e in G.edges] == [(BLUE, (0, 1))]


def test_digraph_swap():
    G = build_pattern_digraph(P("1 0"))
    assert [(e.color, e.verts) for e in G.edges] == [(RED, (1, 0))]


@given(perms)
def test_digraph_is_loopless_tournament(sigma):
    G = build_pattern_digraph(sigma)
    n = len(sigma)
    assert len(G.edges) == n * (n - 1) // 2
    pairs = {frozenset(e.verts) for e in G.edges}
    assert len(pairs) == len(G.edges)
    assert all(len(set(e.verts)) == 2 for e in G.edges)


@pytest.mark.parametrize(
    "tau, sigma, expected",
    [("0 1", "0 1 2", [(0, 1), (0, 2), (1, 2)]), ("1 0", "0 1 2", []), ("1 0", "2 0 1", [(0, 1), (0, 2)])],
)
def test_occurrences(tau, sigma, expected):
    assert occurrences(P(tau), P(sigma)) == expected


def test_occurrences_pattern_too_long():
    with pytest.raises(InvalidInputError):
        occurrences(P("0 1 2"), P("1 0"))


def test_copies_match_small():
    rep = copies_match_occurrences(P("0 1"), P("0 1 2"))
    assert rep.ok and rep.copies == rep.occurrences == 3


@given(perms)
def test_self_embedding_is_unique(sigma):
    rep = copies_match_occurrences(sigma, sigma)
    assert rep.copies == 1 and rep.ok


@given(perms, st.data())
def test_copies_match_random_patterns(sigma, data):
    t = data.draw(st.integers(1, len(sigma)))
    tau = Permutation(tuple(data.draw(st.permutations(range(t)))))
    rep = copies_match_occurrences(tau, sigma)
    assert rep.ok and rep.monotone and rep.rigid


def test_census_small():
    out = census(t_max=3, n_max=5)
    expected = sum(
        len(list(itertools.permutations(range(t)))) * sum(len(list(itertools.permutations(range(n)))) for n in range(t, 6))
        for t in range(1, 4)
    )
    assert out["pairs"] == expected and out["ok"]


def test_greedy_pair_deletion_destroys_pattern():
    out = greedy_pair_deletion(P("1 0"), P("3 1 2 0"))
    assert out["destroyed"] and out["heuristic"]
    assert out["size"] >= 1
