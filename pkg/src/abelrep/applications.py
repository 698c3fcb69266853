"""Corner (multidimensional Szemeredi) systems and homothetic configurations.

Elements of ``P = G^m`` are flat coordinate tuples of length ``m * rank(G)``:
component ``j`` of ``P`` occupies coordinates ``j*r .. j*r + r - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DEFAULT_CAP, InvalidInputError
from .groups import FiniteAbelianGroup, is_subgroup
from .homsystem import HomSystem, _flatten_tuple, enumerate_solutions, subgroup_to_system
from .intmatrix import IntMatrix, as_matrix

__all__ = [
    "build_corner_system",
    "corner_group",
    "ConfigurationCensus",
    "count_corners",
    "random_subset",
    "build_homothetic_system",
    "homothetic_checks",
    "rectangle_system",
    "corner_as_homothetic",
]


def corner_group(G: FiniteAbelianGroup, m: int) -> FiniteAbelianGroup:
    return FiniteAbelianGroup(tuple(G.orders) * m)


def build_corner_system(G: FiniteAbelianGroup, m: int) -> HomSystem:
    """Block system over ``P = G^m`` whose solutions are ``(x, x + a e_1, ..., x + a e_m)``.

    Variables ``x_1 .. x_{m+1}`` in ``P``; in component ``j`` of ``P`` the
    equations are ``x_{1,j} = x_{i,j}`` for ``i != j+1`` and, for ``j >= 2``,
    ``x_{1,1} - x_{2,1} = x_{1,j} - x_{j+1,j}``. Component 1 has one equation
    fewer, so it gets a ``0 = 0`` row to fill ``m`` block equations.
    """
    if m < 1:
        raise InvalidInputError("m must be at least 1")
    r = G.rank
    P = corner_group(G, m)
    T = P.rank  # m * r
    nvars = m + 1
    k = max(m, 1)
    rows = [[0] * (nvars * T) for _ in range(k * T)]

    def put(row_block: int, comp: int, terms: Sequence[tuple[int, int, int]]) -> None:
        # terms: (coefficient, variable 0-based, component 0-based), one per G coordinate
        for c in range(r):
            row = rows[row_block * T + comp * r + c]
            for coef, var, vc in terms:
                row[var * T + vc * r + c] += coef

    for j in range(m):
        eqs = [[(1, 0, j), (-1, i, j)] for i in range(1, nvars) if i != j + 1]
        if j >= 1:
            eqs.append([(1, 0, 0), (-1, 1, 0), (-1, 0, j), (1, j + 1, j)])
        for rb, terms in enumerate(eqs):
            put(rb, j, terms)
    return HomSystem(IntMatrix(rows, nvars * T), P).with_notes(f"corner system, m={m}")


def _flat(x, width: int) -> tuple[int, ...]:
    flat = tuple(_flatten_tuple(x.coords if hasattr(x, "coords") else x, 1))
    if len(flat) != width:
        raise InvalidInputError(f"point {x} does not have {width} coordinates")
    return flat


@dataclass
class ConfigurationCensus:
    system: HomSystem
    subset: list[tuple[int, ...]]
    hits: int  # (x, a) configurations inside S, by direct scan
    total: int  # |S(A, P)|
    hits_enumerated: int  # same count via restricted solution enumeration

    @property
    def agree(self) -> bool:
        return self.hits == self.hits_enumerated and self.hits <= self.total

    def to_json(self) -> dict:
        return {
            "subset_size": len(self.subset),
            "hits": self.hits,
            "hits_enumerated": self.hits_enumerated,
            "total": self.total,
            "agree": self.agree,
        }


def count_corners(sys: HomSystem, S, G: FiniteAbelianGroup | None = None, cap: int = DEFAULT_CAP) -> ConfigurationCensus:
    """Corners ``{x, x + a e_1, ..., x + a e_m}`` inside ``S``, counted two ways."""
    P = sys.group
    m = sys.m - 1
    if G is None:
        if P.rank % m:
            raise InvalidInputError("cannot infer G from the corner system")
        G = FiniteAbelianGroup(P.orders[: P.rank // m])
    r = G.rank
    pts = sorted({P.reduce(_flat(x, P.rank)) for x in S})
    members = set(pts)
    elems = [tuple(int(v) for v in row) for row in np.asarray(G.all_coords()).reshape(G.order, r)]
    hits = 0
    for x in pts:
        for a in elems:
            ok = True
            for j in range(m):
                y = list(x)
                for c in range(r):
                    y[j * r + c] = (y[j * r + c] + a[c]) % G.orders[c]
                if tuple(y) not in members:
                    ok = False
                    break
            hits += ok
    total = enumerate_solutions(sys, cap=cap).count
    restricted = enumerate_solutions(sys, X=[pts] * sys.m, cap=cap).count if pts else 0
    return ConfigurationCensus(sys, pts, hits, total, restricted)


def random_subset(P: FiniteAbelianGroup, density: float, seed: int = 0) -> list[tuple[int, ...]]:
    """Each element of ``P`` kept independently with probability ``density``."""
    rng = np.random.default_rng(seed)
    coords = np.asarray(P.all_coords()).reshape(P.order, P.rank)
    keep = rng.random(P.order) < density
    return [tuple(int(v) for v in row) for row in coords[keep]]


# ---------------------------------------------------------------------- homothetic configurations


def _check_hom_on_subgroup(phi: np.ndarray, G: FiniteAbelianGroup, sub: list[tuple[int, ...]], slot: int, s: int) -> bool:
    """``Phi`` restricted to slot ``slot`` is additive on the subgroup ``sub``."""
    r = G.rank
    mods = np.array(G.orders, dtype=np.int64)

    def ev(g) -> tuple[int, ...]:
        v = np.zeros(s * r, dtype=np.int64)
        v[slot * r : (slot + 1) * r] = g
        return tuple(int(c) for c in (phi @ v) % mods)

    vals = {g: ev(g) for g in sub}
    for a in sub:
        for b in sub:
            c = G.reduce(tuple(x + y for x, y in zip(a, b)))
            lhs = vals.get(c)
            rhs = tuple((x + y) % n for x, y, n in zip(vals[a], vals[b], G.orders))
            if lhs is None or lhs != rhs:
                return False
    return True


def _span(G: FiniteAbelianGroup, gens: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    elems = {G.reduce((0,) * G.rank)}
    frontier = list(elems)
    gens = [G.reduce(tuple(g)) for g in gens]
    while frontier:
        nxt = []
        for e in frontier:
            for g in gens:
                y = G.reduce(tuple(a + b for a, b in zip(e, g)))
                if y not in elems:
                    elems.add(y)
                    nxt.append(y)
        frontier = nxt
    return sorted(elems)


def build_homothetic_system(
    G: FiniteAbelianGroup,
    subgroups: Sequence[Sequence[Sequence[int]]],
    phis: Sequence,
) -> HomSystem:
    """System whose solutions are ``(x + Phi_1(u), ..., x + Phi_t(u))``, ``x in G``, ``u in prod G_j``.

    ``subgroups[j]`` lists generators of ``G_j <= G``; each ``Phi_i`` is an
    integer ``rank(G) x (s * rank(G))`` matrix acting on the concatenated
    coordinates of ``u``, and must be additive on ``prod G_j``.
    """
    r, s = G.rank, len(subgroups)
    mats = [np.array(as_matrix(p).entries, dtype=np.int64).reshape(r, s * r) if s else np.zeros((r, 0), np.int64) for p in phis]
    if not mats:
        raise InvalidInputError("need at least one homomorphism")
    subs = [_span(G, gens) for gens in subgroups]
    for i, phi in enumerate(mats):
        for j, sub in enumerate(subs):
            if not _check_hom_on_subgroup(phi, G, sub, j, s):
                raise InvalidInputError(f"Phi_{i + 1} is not a homomorphism on G_{j + 1}")
    t = len(mats)
    mods = np.array(G.orders, dtype=np.int64)
    gens: list[list[tuple[int, ...]]] = []
    for c in range(r):  # the diagonal x
        e = tuple(int(c == d) for d in range(r))
        gens.append([e] * t)
    for j, sub_gens in enumerate(subgroups):
        for g in sub_gens:
            u = np.zeros(s * r, dtype=np.int64)
            u[j * r : (j + 1) * r] = G.reduce(tuple(g))
            gens.append([tuple(int(v) for v in (phi @ u) % mods) for phi in mats])
    return subgroup_to_system(gens, group=G).with_notes("homothetic configuration system")


def homothetic_checks(sys: HomSystem, cap: int = DEFAULT_CAP) -> dict:
    """Diagonal inside ``S``, projections of the diagonal equal to ``S_i``, subgroup closure."""
    G = sys.group
    sol = enumerate_solutions(sys, cap=cap)
    elems = np.asarray(G.all_coords()).reshape(G.order, G.rank)
    diag = np.tile(elems, (1, sys.m))
    diag_inside = bool(sys.satisfied(diag).all())
    full = all(np.unique(sol.var_ids(i)).size == G.order for i in range(sys.m))
    closed = True
    if sol.count <= 4096:
        Gm = FiniteAbelianGroup(tuple(G.orders) * sys.m)
        closed = is_subgroup([Gm.element(row) for row in sol.data.tolist()])
    return {"count": sol.count, "diagonal_inside": diag_inside, "projections_full": full, "subgroup": closed}


def rectangle_system(G: FiniteAbelianGroup, G1_gens, G2_gens) -> HomSystem:
    """``(x, x + x_1, x + x_2, x + x_1 + x_2)`` with ``x_1 in G_1``, ``x_2 in G_2``."""
    r = G.rank
    I = np.eye(r, dtype=np.int64)
    Z = np.zeros((r, r), dtype=np.int64)
    phis = [np.hstack([Z, Z]), np.hstack([I, Z]), np.hstack([Z, I]), np.hstack([I, I])]
    return build_homothetic_system(G, [G1_gens, G2_gens], [IntMatrix(p.tolist(), 2 * r) for p in phis])


def corner_as_homothetic(G: FiniteAbelianGroup, m: int) -> HomSystem:
    """The corner configuration over ``P = G^m`` via coordinate homomorphisms.

    One subgroup ``G_1 = G x 0 x ... x 0`` carries ``a``; ``Phi_1 = 0`` and
    ``Phi_{j+1}`` moves component 1 to component ``j``.
    """
    r = G.rank
    P = corner_group(G, m)
    T = P.rank
    gens = [tuple(int(c == d) for d in range(T)) for c in range(r)]
    phis = [np.zeros((T, T), dtype=np.int64)]
    for j in range(m):
        M = np.zeros((T, T), dtype=np.int64)
        for c in range(r):
            M[j * r + c, c] = 1
        phis.append(M)
    return build_homothetic_system(P, [gens], [IntMatrix(p.tolist(), T) for p in phis])
