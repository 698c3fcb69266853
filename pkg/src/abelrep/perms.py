"""Permutation patterns as colored copies in bicolored tournaments.

``G_sigma`` has vertices ``0..n-1`` and a directed edge ``i -> j`` whenever
``sigma(i) < sigma(j)``; the edge is blue when ``i < j`` and red otherwise.
Colored, orientation-preserving copies of ``G_tau`` in ``G_sigma`` are exactly
the occurrences of ``tau`` in ``sigma``, each realized by one (monotone)
vertex map.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

from .errors import DEFAULT_CAP, InvalidInputError
from .hypergraph import ColoredHypergraph, Edge, enumerate_copies, greedy_edge_cover

BLUE, RED = 1, 2

__all__ = [
    "BLUE",
    "RED",
    "Permutation",
    "build_pattern_digraph",
    "occurrences",
    "PatternReport",
    "copies_match_occurrences",
    "census",
    "greedy_pair_deletion",
]


@dataclass(frozen=True)
class Permutation:
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        vals = tuple(int(v) for v in self.values)
        if sorted(vals) != list(range(len(vals))):
            raise InvalidInputError(f"{list(vals)} is not a permutation of 0..{len(vals) - 1}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __call__(self, i: int) -> int:
        return self.values[i]

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        """``"2 0 1"`` (commas also accepted)."""
        return cls(tuple(int(t) for t in text.replace(",", " ").split()))

    @classmethod
    def all(cls, n: int) -> Iterable["Permutation"]:
        return (cls(p) for p in itertools.permutations(range(n)))

    def to_json(self) -> dict:
        return {"values": list(self.values)}

    @classmethod
    def from_json(cls, doc) -> "Permutation":
        if isinstance(doc, str):
            return cls.parse(doc)
        if isinstance(doc, list):
            return cls(tuple(doc))
        return cls(tuple(doc["values"]))

    def __str__(self) -> str:
        return " ".join(map(str, self.values))


def build_pattern_digraph(sigma: Permutation) -> ColoredHypergraph:
    """The loopless bicolored tournament ``G_sigma``."""
    n = len(sigma)
    if n < 1:
        raise InvalidInputError("permutation must have at least one element")
    edges = []
    for i, j in itertools.permutations(range(n), 2):
        if sigma(i) < sigma(j):
            edges.append(Edge(BLUE if i < j else RED, (i, j)))
    return ColoredHypergraph([[v] for v in range(n)], 2, edges, directed=True)


def occurrences(tau: Permutation, sigma: Permutation) -> list[tuple[int, ...]]:
    """``Lambda^tau(sigma)`` by brute force, sorted."""
    m, n = len(tau), len(sigma)
    if m > n:
        raise InvalidInputError(f"pattern of length {m} cannot occur in a permutation of length {n}")
    pairs = list(itertools.combinations(range(m), 2))
    return [
        xs
        for xs in itertools.combinations(range(n), m)
        if all((sigma(xs[i]) < sigma(xs[j])) == (tau(i) < tau(j)) for i, j in pairs)
    ]


@dataclass
class PatternReport:
    tau: Permutation
    sigma: Permutation
    copies: int
    occurrences: int
    bijective: bool
    monotone: bool
    rigid: bool
    mismatches: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.bijective and self.monotone and self.rigid

    def to_json(self) -> dict:
        return {
            "tau": list(self.tau.values),
            "sigma": list(self.sigma.values),
            "copies": self.copies,
            "occurrences": self.occurrences,
            "bijective": self.bijective,
            "monotone": self.monotone,
            "rigid": self.rigid,
            "ok": self.ok,
            "mismatches": self.mismatches,
        }


def copies_match_occurrences(tau: Permutation, sigma: Permutation, cap: int = DEFAULT_CAP) -> PatternReport:
    """Compare copies of ``G_tau`` in ``G_sigma`` with ``Lambda^tau(sigma)``."""
    occ = occurrences(tau, sigma)
    maps = enumerate_copies(build_pattern_digraph(tau), build_pattern_digraph(sigma), cap)
    bad: list[str] = []
    monotone = all(all(a < b for a, b in zip(f, f[1:])) for f in maps)
    if not monotone:
        bad.append("a copy's vertex map is not increasing")
    per_set: dict[tuple[int, ...], int] = {}
    for f in maps:
        key = tuple(sorted(f))
        per_set[key] = per_set.get(key, 0) + 1
    rigid = all(c == 1 for c in per_set.values())
    if not rigid:
        bad.append("some vertex set carries more than one copy")
    bijective = len(maps) == len(occ) and set(per_set) == set(occ)
    if not bijective:
        bad.append(f"{len(maps)} copies vs {len(occ)} occurrences")
    return PatternReport(tau, sigma, len(maps), len(occ), bijective, monotone, rigid, bad)


def census(t_max: int = 3, n_max: int = 7, cap: int = DEFAULT_CAP) -> dict:
    """Copies vs occurrences for every ``tau`` of length ``<= t_max`` and ``sigma`` of length ``t..n_max``."""
    pairs = agree = 0
    failures = []
    for t in range(1, t_max + 1):
        taus = list(Permutation.all(t))
        for n in range(t, n_max + 1):
            for sigma in Permutation.all(n):
                for tau in taus:
                    rep = copies_match_occurrences(tau, sigma, cap)
                    pairs += 1
                    if rep.ok:
                        agree += 1
                    elif len(failures) < 20:
                        failures.append(rep.to_json())
    return {"pairs": pairs, "agree": agree, "ok": pairs == agree, "failures": failures}


def greedy_pair_deletion(tau: Permutation, sigma: Permutation, cap: int = DEFAULT_CAP) -> dict:
    """Heuristic demo: index pairs whose deletion destroys every copy of ``tau``.

    Greedy hitting set over the copies; no bound of the form ``eps n^2`` is
    computed or claimed. The result is re-checked by searching again.
    """
    H, K = build_pattern_digraph(tau), build_pattern_digraph(sigma)
    cover = greedy_edge_cover(H, K, cap)
    left = enumerate_copies(H, K.without(cover), cap)
    n = len(sigma)
    return {
        "pairs": [sorted(v) for _, v in cover],
        "size": len(cover),
        "fraction_of_pairs": len(cover) / comb(n, 2) if n > 1 else 0.0,
        "destroyed": not left,
        "heuristic": True,
    }
