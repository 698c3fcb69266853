"""Chains of mu-equivalent systems, from an arbitrary ``((A, b), G)`` to a joined circular system.

Every stage returns a new system together with an :class:`EquivalenceMap`
from the *new* solution set onto the *previous* one. A map is coordinatewise:
variable ``i`` of the old system is ``phi_i(y_{sigma(i)})`` with ``phi_i`` affine.
:func:`verify_equivalence` certifies a map by enumerating both solution sets
(or by sampling when they are too large, which is then recorded as such).

Stages of :func:`run_full_pipeline`::

    pad            m < k + 2: two extra variables with coefficient |G|   (mu = |G|^2)
    dehomogenize   shift by the least particular solution                 (mu = 1)
    lift           Z_N^t cover of G, coordinates reduced                  (mu = beta^m)
    eliminate      k > m: drop zero rows after integer elimination        (mu = 1)
    row-reduce     A1 = U A with row gcds d_j equal to the Smith diagonal (mu = 1)
    simulate       A3 = (A1 / d | Y), Y = diag(n / gcd(n, d_j))           (mu = prod n / gcd)
    to-identity    square completion, A5 = (I | B)                         (mu = 1)
    block-reduce   per-block Smith row reduction of B                      (mu = 1)
    join           split into J_kappa, circularize, interleave            (mu = prod g^(t R) / n^(t m))
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd, prod
from typing import Sequence

import numpy as np

from .errors import DEFAULT_CAP, CapExceededError, DegenerateSystemError, InvalidInputError, PreconditionError
from .groups import FiniteAbelianGroup, index_grid, quotient_lift
from .homsystem import (
    HomSystem,
    count_solutions,
    drop_redundant_equations,
    enumerate_solutions,
    iter_solution_columns,
    mat_mod,
    pad_variables,
    parameterized_form,
    repair_degenerate,
    sample_solutions,
)
from .intmatrix import (
    IntMatrix,
    circular_extension,
    determinantal_divisor,
    extend_to_det,
    inverse_unimodular,
    is_block_n_circular,
    smith_normal_form,
)

KINDS = ("1-auto", "mu-auto", "mu-equiv-1", "mu-equiv-2", "equivalent-rowreduce", "split", "join")
SAMPLE_SIZE = 10_000


# ============================================================================ maps


@dataclass(frozen=True)
class AffineMap:
    """``y -> M y + c`` from ``source`` to ``target`` (coordinates reduced in the target)."""

    matrix: IntMatrix
    const: tuple[int, ...]

    def apply(self, y: np.ndarray, target_orders: Sequence[int]) -> np.ndarray:
        mods = np.array(target_orders, dtype=np.int64)
        M = np.array(
            [[int(a) % int(mods[r]) for a in row] for r, row in enumerate(self.matrix.entries)], dtype=np.int64
        ).reshape(self.matrix.shape)
        out = mat_mod(y, M.T, mods)
        return (out + np.array(self.const, dtype=np.int64)) % mods

    def to_json(self) -> dict:
        return {"matrix": self.matrix.to_json(), "const": list(self.const)}

    @classmethod
    def from_json(cls, doc: dict) -> "AffineMap":
        return cls(IntMatrix.from_json(doc["matrix"]), tuple(int(c) for c in doc["const"]))


@dataclass(frozen=True)
class EquivalenceMap:
    """Coordinatewise affine map ``S(sys2) -> S(sys1)``; ``sigma`` is 0-based."""

    sigma: tuple[int, ...]
    affines: tuple[AffineMap, ...]
    mu: int
    kind: str
    source: FiniteAbelianGroup  # group of sys2
    target: FiniteAbelianGroup  # group of sys1

    def __post_init__(self) -> None:
        if len(self.sigma) != len(self.affines):
            raise InvalidInputError("sigma and affines differ in length")
        if len(set(self.sigma)) != len(self.sigma):
            raise InvalidInputError("sigma must be injective")
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown map kind {self.kind!r}")
        for a in self.affines:
            if a.matrix.shape != (self.target.rank, self.source.rank):
                raise InvalidInputError(f"affine matrix {a.matrix.shape} does not map {self.source} -> {self.target}")

    @property
    def m1(self) -> int:
        return len(self.sigma)

    def apply(self, data2: np.ndarray) -> np.ndarray:
        """Image rows (``(N, m1 * t1)``) of solution rows of the source system."""
        t2 = self.source.rank
        data2 = np.asarray(data2, dtype=np.int64)
        parts = [a.apply(data2[:, s * t2 : (s + 1) * t2], self.target.orders) for s, a in zip(self.sigma, self.affines)]
        return np.concatenate(parts, axis=1) if parts else np.zeros((data2.shape[0], 0), np.int64)

    def apply_columns(self, cols: np.ndarray) -> np.ndarray:
        """Like :meth:`apply` when ``cols`` already holds ``y_{sigma(0)}, y_{sigma(1)}, ...``."""
        t2 = self.source.rank
        parts = [a.apply(cols[:, i * t2 : (i + 1) * t2], self.target.orders) for i, a in enumerate(self.affines)]
        return np.concatenate(parts, axis=1) if parts else np.zeros((cols.shape[0], 0), np.int64)

    def compose(self, inner: "EquivalenceMap") -> "EquivalenceMap":
        """``self o inner``: ``S(inner's source) -> S(self's target)``."""
        if inner.target != self.source:
            raise InvalidInputError("maps do not compose: group mismatch")
        sigma, affines = [], []
        for s, a in zip(self.sigma, self.affines):
            b = inner.affines[s]
            const = [
                (sum(x * y for x, y in zip(row, b.const)) + c) % n
                for row, c, n in zip(a.matrix.entries, a.const, self.target.orders)
            ]
            sigma.append(inner.sigma[s])
            affines.append(AffineMap(a.matrix @ b.matrix, tuple(const)))
        kind = self.kind if inner.kind == "1-auto" else inner.kind if self.kind == "1-auto" else "mu-equiv-2"
        return EquivalenceMap(tuple(sigma), tuple(affines), self.mu * inner.mu, kind, inner.source, self.target)

    def to_json(self) -> dict:
        return {
            "sigma": list(self.sigma),
            "affines": [a.to_json() for a in self.affines],
            "mu": self.mu,
            "kind": self.kind,
            "source": self.source.to_json(),
            "target": self.target.to_json(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EquivalenceMap":
        return cls(
            tuple(int(s) for s in doc["sigma"]),
            tuple(AffineMap.from_json(a) for a in doc["affines"]),
            int(doc["mu"]),
            doc["kind"],
            FiniteAbelianGroup.from_json(doc["source"]),
            FiniteAbelianGroup.from_json(doc["target"]),
        )

    # ----------------------------------------------------------- common shapes
    @classmethod
    def projection(cls, sigma: Sequence[int], G: FiniteAbelianGroup, mu: int, kind: str, H: FiniteAbelianGroup | None = None) -> "EquivalenceMap":
        H = G if H is None else H
        I = AffineMap(IntMatrix.identity(G.rank), (0,) * G.rank)
        return cls(tuple(sigma), tuple(I for _ in sigma), mu, kind, H, G)

    @classmethod
    def identity(cls, m: int, G: FiniteAbelianGroup, kind: str = "1-auto") -> "EquivalenceMap":
        return cls.projection(range(m), G, 1, kind)


# ============================================================================ certification


@dataclass
class EquivalenceReport:
    mode: str  # "exhaustive" | "sampled"
    landed: bool
    surjective: bool | None
    uniform: bool | None
    mu_declared: int
    mu_observed: int | None
    count1: int
    count2: int
    fiber_histogram: dict[int, int] = field(default_factory=dict)
    coordinate_constant: list[bool | None] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def counts_ok(self) -> bool:
        return self.mu_declared * self.count1 == self.count2

    @property
    def ok(self) -> bool:
        if self.mode == "exhaustive":
            return bool(self.landed and self.surjective and self.uniform and self.mu_observed == self.mu_declared and self.counts_ok)
        return bool(self.landed and self.counts_ok)

    @property
    def constancy_ok(self) -> bool:
        return all(c is True for c in self.coordinate_constant)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "ok": self.ok,
            "landed": self.landed,
            "surjective": self.surjective,
            "uniform": self.uniform,
            "mu_declared": self.mu_declared,
            "mu_observed": self.mu_observed,
            "count1": self.count1,
            "count2": self.count2,
            "fiber_histogram": {str(k): v for k, v in sorted(self.fiber_histogram.items())},
            "coordinate_constant": self.coordinate_constant,
            "violations": self.violations,
        }


def solution_count(sys: HomSystem, cap: int = DEFAULT_CAP) -> int:
    """Exact ``|S|`` by the cheapest available route."""
    if parameterized_form(sys):
        return sys.group.order ** (sys.m - sys.k)
    if sys.group.is_homocyclic:
        return count_solutions(sys)
    return enumerate_solutions(sys, cap=cap).count


def _fits_int64(n: int) -> bool:
    return n < (1 << 62)


def _ids(data: np.ndarray, orders: Sequence[int]) -> np.ndarray:
    """Mixed-radix ids of rows whose columns live in ``orders``."""
    ids = np.zeros(data.shape[0], dtype=np.int64)
    for c, n in enumerate(orders):
        ids = ids * int(n) + data[:, c]
    return ids


def verify_equivalence(
    emap: EquivalenceMap,
    sys1: HomSystem,
    sys2: HomSystem,
    cap: int = DEFAULT_CAP,
    constancy: bool = True,
    seed: int = 0,
) -> EquivalenceReport:
    """Certify that ``emap`` is a ``mu``-to-1 surjection ``S(sys2) -> S(sys1)``.

    Exhaustive when both solution sets fit under ``cap``; otherwise checks
    ``SAMPLE_SIZE`` random solutions of ``sys2`` land in ``S(sys1)`` plus the exact
    count identity, and marks the report ``"sampled"``.

    ``coordinate_constant[i]`` records whether, for every ``x`` in ``S(sys1)``, the
    number of preimages with ``y_{sigma(i)} = u`` is the same for all ``u``
    compatible with ``x_i``.
    """
    if emap.source != sys2.group or emap.target != sys1.group:
        raise InvalidInputError("map groups do not match the systems")
    if emap.m1 != sys1.m or (emap.sigma and max(emap.sigma) >= sys2.m):
        raise InvalidInputError("map shape does not match the systems")
    c1 = solution_count(sys1, cap=max(cap, 1 << 22)) if sys1.group.is_homocyclic or parameterized_form(sys1) else None
    c2 = solution_count(sys2, cap=max(cap, 1 << 22)) if sys2.group.is_homocyclic or parameterized_form(sys2) else None
    G1, G2 = sys1.group, sys2.group
    t1, t2 = G1.rank, G2.rank
    orders1 = G1.orders * sys1.m
    exhaustive = (
        (c1 is None or c1 <= cap)
        and (c2 is None or c2 <= cap)
        and _fits_int64(prod(orders1))
        and _fits_int64(G2.order)
    )
    if exhaustive:
        try:
            return _verify_exhaustive(emap, sys1, sys2, cap, constancy)
        except CapExceededError:
            pass
    c1 = solution_count(sys1, cap=1 << 40) if c1 is None else c1
    c2 = solution_count(sys2, cap=1 << 40) if c2 is None else c2
    rng = np.random.default_rng(seed)
    sample = sample_solutions(sys2, SAMPLE_SIZE, rng)
    landed = bool(sys1.satisfied(emap.apply(sample)).all()) if sample.shape[0] else c1 == 0
    rep = EquivalenceReport("sampled", landed, None, None, emap.mu, None, c1, c2)
    if not landed:
        rep.violations.append("a sampled image is not a solution of the target system")
    if not rep.counts_ok:
        rep.violations.append(f"count identity fails: {emap.mu} * {c1} != {c2}")
    rep.coordinate_constant = [None] * sys1.m
    return rep


def _verify_exhaustive(emap, sys1, sys2, cap, constancy) -> EquivalenceReport:
    G1, G2 = sys1.group, sys2.group
    m1, t1 = sys1.m, G1.rank
    orders1 = G1.orders * m1
    S1 = enumerate_solutions(sys1, cap=cap).data
    s1_ids = np.sort(_ids(S1, orders1))
    img_chunks, u_chunks = [], []
    sigma = list(emap.sigma)
    for cols in iter_solution_columns(sys2, sigma, cap=cap):
        img_chunks.append(_ids(emap.apply_columns(cols), orders1))
        if constancy:
            u_chunks.append(np.stack([_ids(cols[:, i * G2.rank : (i + 1) * G2.rank], G2.orders) for i in range(m1)], axis=1) if m1 else np.zeros((cols.shape[0], 0), np.int64))
    img = np.concatenate(img_chunks) if img_chunks else np.zeros(0, np.int64)
    N1, N2 = s1_ids.size, img.size
    pos = np.searchsorted(s1_ids, img)
    pos_c = np.minimum(pos, max(N1 - 1, 0))
    hit = (pos < N1) & (s1_ids[pos_c] == img) if N1 else np.zeros(N2, bool)
    landed = bool(hit.all())
    rep = EquivalenceReport("exhaustive", landed, None, None, emap.mu, None, N1, N2)
    if not landed:
        bad = int(np.flatnonzero(~hit)[0])
        rep.violations.append(f"image of source solution #{bad} is not a target solution")
    fiber = np.bincount(pos_c[hit], minlength=N1) if N1 else np.zeros(0, np.int64)
    rep.surjective = bool((fiber > 0).all())
    if not rep.surjective:
        rep.violations.append(f"{int((fiber == 0).sum())} target solutions have no preimage")
    sizes, counts = np.unique(fiber, return_counts=True)
    rep.fiber_histogram = {int(s): int(c) for s, c in zip(sizes, counts)}
    rep.uniform = landed and len(rep.fiber_histogram) == 1
    rep.mu_observed = int(sizes[0]) if rep.uniform else None
    if rep.uniform and rep.mu_observed != emap.mu:
        rep.violations.append(f"fibers have size {rep.mu_observed}, declared {emap.mu}")
    if not rep.counts_ok:
        rep.violations.append(f"count identity fails: {emap.mu} * {N1} != {N2}")
    if not constancy or not landed or N1 == 0:
        rep.coordinate_constant = [None] * m1
        return rep
    U = np.concatenate(u_chunks)
    G2c = G2.all_coords() if G2.order <= (1 << 22) else None
    for i in range(m1):
        uvals, urank = np.unique(U[:, i], return_inverse=True)
        # phi_i on every value taken by y_{sigma(i)}
        coords = G2c[uvals] if G2c is not None else _decode(uvals, G2.orders)
        phi_ids = _ids(emap.affines[i].apply(coords, G1.orders), G1.orders)
        xi_ids = _ids(S1[:, i * t1 : (i + 1) * t1], G1.orders)  # S1 is sorted like s1_ids
        pv, pc = np.unique(phi_ids, return_counts=True)
        where = np.searchsorted(pv, xi_ids)
        where_c = np.minimum(where, len(pv) - 1)
        ncand = np.where(pv[where_c] == xi_ids, pc[where_c], 0)
        key = pos_c * len(uvals) + urank
        pk, pcount = np.unique(key, return_counts=True)
        px = pk // len(uvals)
        npairs = np.bincount(px, minlength=N1)
        expect = fiber[px] // np.maximum(ncand[px], 1)
        ok = bool((npairs == ncand).all() and (pcount == expect).all() and (fiber[px] == expect * ncand[px]).all())
        rep.coordinate_constant.append(ok)
    return rep


def _decode(ids: np.ndarray, orders: Sequence[int]) -> np.ndarray:
    out = np.empty((ids.size, len(orders)), dtype=np.int64)
    rest = ids.copy()
    for j in range(len(orders) - 1, -1, -1):
        rest, out[:, j] = np.divmod(rest, orders[j])
    return out


# ============================================================================ stages


@dataclass
class Stage:
    label: str
    system: HomSystem
    map: EquivalenceMap
    notes: list[str] = field(default_factory=list)
    report: EquivalenceReport | None = None

    @property
    def certified(self) -> str:
        return "pending" if self.report is None else self.report.mode

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "system": self.system.to_json(),
            "map": self.map.to_json(),
            "mu": self.map.mu,
            "certified": self.certified,
            "ok": None if self.report is None else self.report.ok,
            "notes": list(self.notes),
        }


def dehomogenize(sys: HomSystem, cap: int = DEFAULT_CAP) -> tuple[HomSystem, EquivalenceMap | None]:
    """``(A, 0)`` and the shift by the lexicographically least solution; ``None`` if ``S`` is empty."""
    h = sys.homogeneous()
    if sys.is_homogeneous():
        return h, EquivalenceMap.identity(sys.m, sys.group)
    sol = enumerate_solutions(sys, cap=cap)
    if sol.count == 0:
        return h, None
    y = sol.data[0]
    t = sys.block
    I = IntMatrix.identity(t)
    aff = tuple(AffineMap(I, tuple(int(c) for c in y[i * t : (i + 1) * t])) for i in range(sys.m))
    return h, EquivalenceMap(tuple(range(sys.m)), aff, 1, "1-auto", sys.group, sys.group)


def lift_to_homocyclic(sys: HomSystem) -> tuple[HomSystem, EquivalenceMap]:
    """Same system over ``Z_N^t``; row ``i`` (an equation mod ``n_i``) is scaled by ``N / n_i``.

    Then ``x' in S(A')`` iff its coordinatewise reduction lies in ``S(A)``,
    so reduction is a ``beta^m``-to-1 surjection.
    """
    G = sys.group
    Gp, _, beta = quotient_lift(G)
    N = Gp.orders[0] if Gp.rank else 1
    t = G.rank
    scale = [N // G.orders[r % t] for r in range(sys.matrix.rows)]
    A = IntMatrix([[a * s for a in row] for row, s in zip(sys.matrix.entries, scale)], sys.matrix.cols)
    rhs = tuple(Gp.element([c * (N // n) for c, n in zip(e.coords, G.orders)]) for e in sys.rhs)
    new = HomSystem(A, Gp, rhs, sys.notes)
    return new, EquivalenceMap.projection(range(sys.m), G, beta**sys.m, "mu-equiv-1", Gp)


def row_reduce(sys: HomSystem) -> tuple[HomSystem, EquivalenceMap, list[int]]:
    """``A1 = U A`` (``U`` from the Smith form) and the row gcds ``d_j`` (the Smith diagonal)."""
    G = sys.group
    n = G.orders[0]
    snf = smith_normal_form(sys.matrix)
    A1 = snf.U @ sys.matrix
    b = sys.rhs_vector().tolist()
    b1 = [sum(u * x for u, x in zip(row, b)) % n for row in snf.U.entries]
    t = sys.block
    rhs = tuple(G.element(b1[r * t : (r + 1) * t]) for r in range(sys.k))
    diag = [snf.diag[i] if i < len(snf.diag) else 0 for i in range(A1.rows)]
    return HomSystem(A1, G, rhs), EquivalenceMap.identity(sys.m, G, "equivalent-rowreduce"), diag


def simulate_independent_vectors(sys: HomSystem, d: Sequence[int] | None = None) -> tuple[HomSystem, EquivalenceMap, IntMatrix]:
    """``(A1 / d | Y)`` with ``Y = diag(n / gcd(n, d_j))``; the map forgets the ``y`` variables.

    ``x`` solves ``A1`` iff ``(A1 x / d)_j`` is killed by ``d_j``, i.e. lies in
    ``(n / gcd) Z_n``; each such value has ``n / gcd`` preimages ``y_j``.
    Returns the new system, the map and ``A2 = A1 / d``.
    """
    G = sys.group
    if not G.is_homocyclic:
        raise PreconditionError("simulation needs a homocyclic group")
    if not sys.is_homogeneous():
        raise PreconditionError("simulation needs a homogeneous system")
    n = G.orders[0]
    A1 = sys.matrix
    if d is None:
        d = [gcd(*row) if any(row) else 0 for row in A1.entries]
    if any(x == 0 for x in d):
        raise DegenerateSystemError("zero row reached the simulation stage; repair the system first")
    A2 = IntMatrix([[a // dj for a in row] for row, dj in zip(A1.entries, d)], A1.cols)
    kt = A1.rows
    Y = IntMatrix([[n // gcd(n, d[i]) if i == j else 0 for j in range(kt)] for i in range(kt)], kt)
    new = HomSystem(IntMatrix.hstack(A2, Y), G)
    mu = prod(n // gcd(n, x) for x in d)
    return new, EquivalenceMap.projection(range(sys.m), G, mu, "mu-auto"), A2


def determinantal_to_identity(sys: HomSystem, simulated: int = 0) -> tuple[HomSystem, EquivalenceMap]:
    """``(A2 | Y)`` with ``D_kt(A2) = 1`` becomes ``(I_tm | B)``; ``simulated`` trailing block columns are ``Y``.

    ``N = extend_to_det(A2)`` is unimodular. ``A4 = [[A2, 0, Y], [M, I, 0]]``
    (variables ``x, z, y``) forces ``z = -M x``; multiplying by ``N^{-1}``
    gives ``(I | B)``. The map keeps ``x`` and ``y`` and drops ``z``.
    """
    G = sys.group
    t, k, mtot = sys.block, sys.k, sys.m
    m = mtot - simulated
    A = sys.matrix
    A2 = A.submatrix(None, range(m * t))
    Y = A.submatrix(None, range(m * t, mtot * t))
    if determinantal_divisor(A2, A2.rows) != 1:
        raise PreconditionError("D_kt of the leading part must be 1")
    if parameterized_form(sys) and simulated == 0:
        return sys, EquivalenceMap.identity(mtot, G)
    Nm = extend_to_det(A2)
    M = Nm.submatrix(range(A2.rows, Nm.rows))
    extra = M.rows
    top = IntMatrix.hstack(A2, IntMatrix.zeros(A2.rows, extra), Y)
    bottom = IntMatrix.hstack(M, IntMatrix.identity(extra), IntMatrix.zeros(extra, Y.cols))
    A4 = IntMatrix.vstack(top, bottom)
    A5 = inverse_unimodular(Nm) @ A4
    nz = extra // t
    sigma = list(range(m)) + [m + nz + j for j in range(simulated)]
    return HomSystem(A5, G), EquivalenceMap.projection(sigma, G, 1, "1-auto")


def block_row_reduce(sys: HomSystem) -> tuple[HomSystem, EquivalenceMap, list[list[int]]]:
    """Smith row-reduce each ``t``-row block of ``B`` in ``(I | B)``.

    Block ``i`` becomes ``U_i B_i`` whose row gcds are its Smith diagonal
    ``d_{i,1..t}``; the identity part becomes ``U_i``, undone by the
    automorphism ``x_i -> U_i^{-1} x_i``. A block of rank ``< t`` first gets
    ``n^e`` added on its leading diagonal (invisible mod ``n``).
    """
    G = sys.group
    if not parameterized_form(sys):
        raise PreconditionError("block_row_reduce needs a system shaped (I | B)")
    n = G.orders[0]
    t, k = sys.block, sys.k
    kt = k * t
    rows = sys.matrix.tolist()
    divisors, affines, notes = [], [], []
    I_t = IntMatrix.identity(t)
    for i in range(k):
        Bi = [r[kt:] for r in rows[i * t : (i + 1) * t]]
        Bm = IntMatrix(Bi, len(Bi[0]))
        if determinantal_divisor(Bm, t) == 0:
            e = 1
            while determinantal_divisor(IntMatrix([[x + (n**e if c == j else 0) for c, x in enumerate(r)] for j, r in enumerate(Bi)], Bm.cols), t) == 0:
                e += 1
            Bi = [[x + (n**e if c == j else 0) for c, x in enumerate(r)] for j, r in enumerate(Bi)]
            Bm = IntMatrix(Bi, len(Bi[0]))
            notes.append(f"block {i}: added {n}^{e} to its leading diagonal")
        snf = smith_normal_form(Bm)
        B1 = snf.U @ Bm
        for j in range(t):
            rows[i * t + j] = [0] * kt
            rows[i * t + j][i * t : (i + 1) * t] = snf.U.entries[j]
            rows[i * t + j] += list(B1.entries[j])
        # row (i, j) of B1 has gcd equal to the j-th Smith entry
        divisors.append([snf.diag[j] for j in range(t)])
        affines.append(AffineMap(snf.U_inv, (0,) * t))
    # The identity part is now block-diagonal U_i; restore I by renaming x_i := U_i x_i.
    for i in range(k):
        for j in range(t):
            rows[i * t + j][:kt] = [1 if c == i * t + j else 0 for c in range(kt)]
    I = AffineMap(I_t, (0,) * t)
    affines += [I] * (sys.m - k)
    new = HomSystem(IntMatrix(rows, sys.matrix.cols), G, (), tuple(notes))
    return new, EquivalenceMap(tuple(range(sys.m)), tuple(affines), 1, "1-auto", G, G), divisors


# ---------------------------------------------------------------------------- split / circularize / join


@dataclass
class SplitSystem:
    kappa: tuple[int, int]  # (1, 0) or 1-based (i, j)
    system: HomSystem  # J_kappa over Z_g^t
    order: int  # g = |G_kappa|
    divisor: int  # d_{i,j} (n for the base system)
    f_map: EquivalenceMap  # S(J_kappa) -> S(A6 over Z_g^t)
    circular: HomSystem | None = None
    circ_map: EquivalenceMap | None = None
    reports: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kappa": list(self.kappa),
            "order": self.order,
            "divisor": self.divisor,
            "reports": {k: v if isinstance(v, bool) else v.to_json() for k, v in self.reports.items()},
        }


def split_to_J_systems(sys: HomSystem, divisors: Sequence[Sequence[int]]) -> list[SplitSystem]:
    """The systems ``J_kappa`` over ``G_kappa = P_{d_{i,j}}(Z_n) ~ Z_gcd(d, n)``.

    With ``B2`` the rows of ``B1`` divided by their gcds, variables are
    ``x`` (``k`` blocks), ``u``, ``w`` (the ``R`` free blocks) and ``v``.
    The base system reads ``x + B2 w = 0, u + v = 0``; for ``kappa = (i, j)``
    scalar row ``(i, j)`` is replaced by ``x_(i,j) + B1_(i,j) w - v_1 = 0``.
    """
    G = sys.group
    n = G.orders[0]
    t, k, m6 = sys.block, sys.k, sys.m
    kt, R = k * t, m6 - k
    Rt = R * t
    rows = sys.matrix.tolist()
    B1 = [r[kt:] for r in rows[:kt]]
    dflat = [d for blk in divisors for d in blk]
    B2 = [[x // d for x in r] for r, d in zip(B1, dflat)]
    width = kt + t + Rt + t

    def assemble(special: int | None) -> IntMatrix:
        out = []
        for r in range(kt):
            row = [0] * width
            row[r] = 1
            row[kt + t : kt + t + Rt] = B1[r] if r == special else B2[r]
            if r == special:
                row[kt + t + Rt] = -1
            out.append(row)
        for j in range(t):
            row = [0] * width
            row[kt + j] = 1
            row[kt + t + Rt + j] = 1
            out.append(row)
        return IntMatrix(out, width)

    kappas = [((1, 0), None, n)] + [((i + 1, j + 1), i * t + j, dflat[i * t + j]) for i in range(k) for j in range(t)]
    out = []
    for kappa, special, d in kappas:
        g = n if special is None else gcd(d, n)
        Gk = FiniteAbelianGroup((g,) * t)
        J = HomSystem(assemble(special), Gk)
        aff = []
        for i in range(k):
            D = IntMatrix([[dflat[i * t + a] if a == b else 0 for b in range(t)] for a in range(t)], t)
            aff.append(AffineMap(D, (0,) * t))
        I = AffineMap(IntMatrix.identity(t), (0,) * t)
        aff += [I] * R
        sigma = list(range(k)) + [k + 1 + f for f in range(R)]
        fmap = EquivalenceMap(tuple(sigma), tuple(aff), g**t, "split", Gk, Gk)
        out.append(SplitSystem(kappa, J, g, d, fmap))
    return out


def circularize(J: HomSystem, n: int) -> tuple[HomSystem, EquivalenceMap]:
    """Block-``n``-circular system ``(I | B9)`` whose solutions project bijectively onto ``S(J)``.

    For each ``t``-row block ``B_i`` of ``J = (I | B)``: complete it to a square
    ``E_i`` with ``det = D_t(B_i)`` (coprime to ``n``) and stack
    ``B9 = [I; S_1; E_1; T_1; I; ...; S_K; E_K; T_K; I]`` using the
    circular extension of each ``E_i``. Old variable ``x_i`` is the first
    block-variable of ``E_i``'s rows.
    """
    if not parameterized_form(J):
        raise PreconditionError("circularize needs a system shaped (I | B)")
    t, K = J.block, J.k
    R = J.m - K
    r = R * t
    rows = J.matrix.tolist()
    stack = [IntMatrix.identity(r)]
    for i in range(K):
        Bi = IntMatrix([row[K * t :] for row in rows[i * t : (i + 1) * t]], r)
        if gcd(determinantal_divisor(Bi, t), n) != 1:
            raise PreconditionError(f"block {i}: determinantal divisor not coprime with {n}")
        E = extend_to_det(Bi)
        ext = circular_extension(E, n)
        stack.append(ext.submatrix(range(r, 5 * r)))
    B9 = IntMatrix.vstack(*stack)
    A9 = IntMatrix.hstack(IntMatrix.identity(B9.rows), B9)
    new = HomSystem(A9, J.group)
    sigma = [R * (4 * i + 2) for i in range(K)] + [(4 * K + 1) * R + f for f in range(R)]
    return new, EquivalenceMap.projection(sigma, J.group, 1, "1-auto")


def join_systems(parts: Sequence[SplitSystem], n: int, divisors: Sequence[Sequence[int]], k6: int) -> tuple[HomSystem, EquivalenceMap]:
    """Interleave the circular systems into one system over ``prod_kappa G_kappa^t``.

    Scalar row/column ``l`` of ``Jbar_kappa`` becomes ``l * |U| + index(kappa)``;
    coordinate ``(j, kappa)`` of the product group has order ``g_kappa``. The map
    onto ``S(A6, Z_n^t)`` embeds ``Z_g -> Z_n`` by ``n / g`` and sums over
    ``kappa``, scaling the first ``k6`` variables by ``d_{i,j}``.
    """
    if not parts:
        raise InvalidInputError("nothing to join")
    shapes = {p.circular.matrix.shape for p in parts}
    if len(shapes) != 1:
        raise InvalidInputError("circular systems differ in shape")
    U = len(parts)
    t = parts[0].system.block
    rows0, cols0 = parts[0].circular.matrix.shape
    mats = [p.circular.matrix.entries for p in parts]
    A = [[0] * (cols0 * U) for _ in range(rows0 * U)]
    for kk, M in enumerate(mats):
        for l, row in enumerate(M):
            target = A[l * U + kk]
            for c, a in enumerate(row):
                if a:
                    target[c * U + kk] = a
    orders = tuple(p.order for j in range(t) for p in parts)
    Gj = FiniteAbelianGroup(orders)
    A7 = HomSystem(IntMatrix(A, cols0 * U), Gj)
    base_sigma = parts[0].circ_map.sigma  # identical across kappa
    fs = parts[0].f_map.sigma
    m6 = len(fs)
    sigma, affines = [], []
    for i in range(m6):
        sigma.append(base_sigma[fs[i]])
        M = [[0] * (t * U) for _ in range(t)]
        for j in range(t):
            for kk, p in enumerate(parts):
                mult = divisors[i][j] if i < k6 else 1
                M[j][j * U + kk] = mult * (n // p.order)
        affines.append(AffineMap(IntMatrix(M, t * U), (0,) * t))
    Gn = FiniteAbelianGroup((n,) * t)
    R = parts[0].system.m - parts[0].system.k
    mu_num = prod(p.order ** (t * R) for p in parts)
    mu = mu_num // (n ** (t * (m6 - k6)))
    return A7, EquivalenceMap(tuple(sigma), tuple(affines), mu, "join", Gj, Gn)


def is_interleaved(A7: HomSystem, U: int) -> bool:
    """Every nonzero entry couples a row and a column of the same ``kappa`` (index mod ``U``)."""
    for r, row in enumerate(A7.matrix.entries):
        kr = r % U
        for c, a in enumerate(row):
            if a and c % U != kr:
                return False
    return True


# Primes just below 2^31: products of two residues stay inside int64.
CRT_PRIMES = (2147483647, 2147483629, 2147483587, 2147483579, 2147483563, 2147483549, 2147483543, 2147483497)
PRODUCT_WORK = 4 * 10**8
FACTOR_CAP = 1 << 25


def _closure(S: np.ndarray, g: tuple, axes: tuple) -> np.ndarray:
    """Smallest superset of ``S`` closed under adding ``g`` (boolean indicator arrays)."""
    while True:
        nxt = S | np.roll(S, g, axis=axes)
        if (nxt == S).all():
            return S
        S = nxt


def _subgroup_convolution(hists, shape, axes):
    """Convolve pushforwards that are each ``c * 1_H`` for a subgroup ``H``.

    Uses ``1_H1 * 1_H2 = |H1 & H2| 1_(H1 + H2)``. Returns ``(c, indicator)`` of the
    result, or ``None`` if some pushforward is not of that form.
    """
    c_total, cur = 1, None
    for h in hists:
        h = h.reshape(shape)
        supp = h > 0
        vals = np.unique(h[supp])
        if vals.size != 1:
            return None
        # generators of the subgroup spanned by the support, and a closure check
        gens, span = [], np.zeros(shape, bool)
        span.flat[0] = True
        for flat in np.flatnonzero(supp):
            if not span.flat[flat]:
                g = np.unravel_index(flat, shape)
                gens.append(g)
                span = _closure(span, g, axes)
        if not np.array_equal(span, supp):
            return None
        c = int(vals[0])
        if cur is None:
            c_total, cur = c, supp
            continue
        inter = int((cur & supp).sum())
        for g in gens:
            cur = _closure(cur, g, axes)
        c_total = c_total * c * inter
    if cur is None:
        cur = np.zeros(shape, bool)
        cur.flat[0] = True
    return c_total, cur.reshape(-1)


def verify_join_product(
    parts: Sequence[SplitSystem], jmap: EquivalenceMap, A6: HomSystem, A7: HomSystem, cap: int = DEFAULT_CAP
) -> EquivalenceReport:
    """Exhaustive certificate of the join map through the product structure of ``S(A7)``.

    ``S(A7)`` is the product of the ``S(Jbar_kappa)`` (checked structurally), and
    ``phi`` is a sum of per-``kappa`` maps ``psi_kappa``. Each factor is
    enumerated completely; fiber sizes of ``phi`` are the convolution of the
    pushforward counts over the free coordinates of ``S(A6)``. The convolution is
    carried out modulo primes whose product exceeds ``|S(A7)|``; as every true
    fiber size lies in ``[0, |S(A7)|]``, agreement with ``mu`` modulo all of them
    proves equality. Nothing is sampled; per-coordinate constancy is not covered.
    """
    U = len(parts)
    n = A6.group.orders[0]
    t, k6, m6 = A6.block, A6.k, A6.m
    free_dims = t * (m6 - k6)
    count1 = n**free_dims
    count2 = prod(p.order ** (t * (p.circular.m - p.circular.k)) for p in parts)
    rep = EquivalenceReport("exhaustive", True, None, None, jmap.mu, None, count1, count2)
    rep.coordinate_constant = [None] * m6
    if not is_interleaved(A7, U) or not parameterized_form(A6):
        rep.landed = False
        rep.violations.append("joined system is not an interleave of its parts")
        return rep
    if count1 > cap:
        raise CapExceededError("product certificate too large")
    primes, P = [], 1
    for q in CRT_PRIMES:
        if P > count2:
            break
        primes.append(q)
        P *= q
    if P <= count2:
        raise CapExceededError("fiber sizes too large for the modular certificate")
    shape = (n,) * free_dims
    sigma = list(parts[0].circ_map.sigma[s] for s in parts[0].f_map.sigma)
    hists = []
    for kk, p in enumerate(parts):
        if p.order == 1:
            continue  # S(Jbar) = {0}, contributes the zero element
        # psi_kappa: coordinate (i, j) -> mult * (n / g) * y
        mult = np.array(
            [[jmap.affines[i].matrix.entries[j][j * U + kk] % n for j in range(t)] for i in range(m6)], dtype=np.int64
        ).reshape(-1)
        h = np.zeros(count1, dtype=np.int64)
        for cols in iter_solution_columns(p.circular, sigma, cap=max(cap, FACTOR_CAP)):
            img = (cols * mult) % n
            if not A6.satisfied(img).all():
                rep.landed = False
                rep.violations.append(f"kappa {p.kappa}: image outside S(A6)")
                return rep
            ids = np.zeros(img.shape[0], dtype=np.int64)
            for c in range(k6 * t, m6 * t):
                ids = ids * n + img[:, c]
            h += np.bincount(ids, minlength=count1)
        hists.append(h)
    axes = tuple(range(free_dims))
    structured = _subgroup_convolution(hists, shape, axes)
    if structured is not None:
        c, support = structured
        rep.surjective = bool(support.all())
        rep.uniform = rep.surjective
        rep.mu_observed = c if rep.surjective else None
        covered = int(support.sum())
        rep.fiber_histogram = {c: covered} if rep.surjective else {c: covered, 0: count1 - covered}
        if not rep.surjective:
            rep.violations.append("some solutions of A6 have no preimage")
        elif c != jmap.mu:
            rep.violations.append(f"fibers have size {c}, declared {jmap.mu}")
        if not rep.counts_ok:
            rep.violations.append(f"count identity fails: {jmap.mu} * {count1} != {count2}")
        return rep
    work = sum(int(np.count_nonzero(h)) for h in hists[1:]) * count1 * len(primes)
    if work > PRODUCT_WORK:
        raise CapExceededError("product convolution too expensive")
    ok_mod = True
    H_exact = None
    for q in primes:
        if not hists:
            H = np.zeros(shape, np.int64)
            H.flat[0] = 1
        else:
            H = (hists[0] % q).reshape(shape)
            for h in hists[1:]:
                out = np.zeros_like(H)
                for flat in np.flatnonzero(h):
                    shift = np.unravel_index(flat, shape)
                    out = (out + (int(h[flat]) % q) * np.roll(H, shift, axis=axes)) % q
                H = out
        H = H.reshape(-1)
        if len(primes) == 1:
            H_exact = H  # a single prime already exceeds |S(A7)|: residues are the counts
        ok_mod &= bool((H == jmap.mu % q).all())
        if not ok_mod:
            break
    rep.surjective = ok_mod or (H_exact is not None and bool((H_exact > 0).all()))
    rep.uniform = ok_mod or (H_exact is not None and len(np.unique(H_exact)) == 1)
    if ok_mod:
        rep.mu_observed = jmap.mu
        rep.fiber_histogram = {jmap.mu: count1}
    elif H_exact is not None:
        sizes, counts = np.unique(H_exact, return_counts=True)
        rep.fiber_histogram = {int(a): int(b) for a, b in zip(sizes, counts)}
        rep.mu_observed = int(sizes[0]) if rep.uniform else None
        rep.violations.append(f"fiber sizes {sorted(rep.fiber_histogram)} differ from declared {jmap.mu}")
    else:
        rep.violations.append(f"some fiber size differs from {jmap.mu} (modular certificate)")
    if not rep.counts_ok:
        rep.violations.append(f"count identity fails: {jmap.mu} * {count1} != {count2}")
    return rep


# ============================================================================ driver


@dataclass
class PipelineTrace:
    initial: HomSystem
    stages: list[Stage] = field(default_factory=list)
    upsilon: list[SplitSystem] = field(default_factory=list)
    divisors: list[list[int]] = field(default_factory=list)
    final_is_circular: bool = False
    empty: bool = False
    composite_report: EquivalenceReport | None = None

    @property
    def final(self) -> HomSystem:
        return self.stages[-1].system if self.stages else self.initial

    @property
    def mu(self) -> int:
        return prod(s.map.mu for s in self.stages)

    def composite(self) -> EquivalenceMap:
        out = None
        for s in self.stages:
            out = s.map if out is None else out.compose(s.map)
        return out

    @property
    def ok(self) -> bool:
        return not self.empty and all(s.report is not None and s.report.ok for s in self.stages) and self.final_is_circular

    @property
    def exhaustive(self) -> bool:
        return all(s.certified == "exhaustive" for s in self.stages)

    def to_json(self) -> dict:
        return {
            "initial": self.initial.to_json(),
            "ok": self.ok,
            "exhaustive": self.exhaustive,
            "empty": self.empty,
            "stages": [s.to_json() for s in self.stages],
            "mu": self.mu,
            "final_is_circular": self.final_is_circular,
            "divisors": self.divisors,
            "upsilon": [u.to_json() for u in self.upsilon],
            "composite": None if self.composite_report is None else self.composite_report.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def _certify(stage: Stage, prev: HomSystem, cap: int, constancy: bool = False) -> Stage:
    stage.report = verify_equivalence(stage.map, prev, stage.system, cap=cap, constancy=constancy)
    return stage


def run_full_pipeline(sys: HomSystem, cap: int = DEFAULT_CAP, certify: bool = True, certify_composite: bool = False) -> PipelineTrace:
    """Run and (optionally) certify every stage; see the module docstring for the stage list."""
    trace = PipelineTrace(sys)
    cur = sys

    def push(label: str, new: HomSystem, emap: EquivalenceMap, notes=(), constancy: bool = False) -> None:
        nonlocal cur
        st = Stage(label, new, emap, list(notes) + list(new.notes))
        if certify:
            _certify(st, cur, cap, constancy)
        trace.stages.append(st)
        cur = new

    G = sys.group
    if sys.k <= sys.m and sys.m < sys.k + 2:
        push("pad", pad_variables(sys), EquivalenceMap.projection(range(sys.m), G, G.order**2, "mu-auto"))
    h, shift = dehomogenize(cur, cap=cap)
    if shift is None:
        trace.empty = True
        return trace
    push("dehomogenize", h, shift)
    lifted, lmap = lift_to_homocyclic(cur)
    push("lift", lifted, lmap)
    Gn = cur.group
    n = Gn.orders[0]
    if cur.k > cur.m:
        push("eliminate", drop_redundant_equations(cur), EquivalenceMap.identity(cur.m, Gn, "equivalent-rowreduce"))
        if cur.m < cur.k + 2:
            push("pad", pad_variables(cur), EquivalenceMap.projection(range(cur.m), Gn, Gn.order**2, "mu-auto"))
    repaired = repair_degenerate(cur)
    A1, rmap, d = row_reduce(repaired)
    push("row-reduce", A1, rmap, repaired.notes[len(cur.notes):])
    A3, smap, _ = simulate_independent_vectors(A1, d)
    push("simulate", A3, smap, [f"row gcds {d}"])
    A5, imap = determinantal_to_identity(A3, simulated=A1.k)
    push("to-identity", A5, imap)
    A6, bmap, divisors = block_row_reduce(A5)
    push("block-reduce", A6, bmap)
    trace.divisors = divisors
    parts = split_to_J_systems(A6, divisors)
    for p in parts:
        p.circular, p.circ_map = circularize(p.system, n)
        if certify:
            A6g = HomSystem(A6.matrix, p.system.group)
            p.reports["split"] = verify_equivalence(p.f_map, A6g, p.system, cap=cap, constancy=False)
            p.reports["circularize"] = verify_equivalence(p.circ_map, p.system, p.circular, cap=cap, constancy=False)
            p.reports["circular"] = is_block_n_circular(p.circular.matrix, 1, n)
    trace.upsilon = parts
    A7, jmap = join_systems(parts, n, divisors, A6.k)
    notes = [f"|Upsilon| = {len(parts)}", f"G_kappa orders {[p.order for p in parts]}"]
    st = Stage("join", A7, jmap, notes)
    if certify:
        st.report = verify_equivalence(jmap, A6, A7, cap=cap, constancy=True)
        if st.report.mode == "sampled":
            try:
                st.report = verify_join_product(parts, jmap, A6, A7, cap=cap)
                st.notes.append("certified through the product of the split systems")
            except CapExceededError:
                pass
    trace.stages.append(st)
    trace.final_is_circular = is_block_n_circular(A7.matrix, A7.block, n)
    if certify and certify_composite:
        trace.composite_report = verify_equivalence(trace.composite(), sys, A7, cap=cap, constancy=False)
    return trace


def trace_from_json(doc: dict) -> tuple[HomSystem, list[Stage]]:
    initial = HomSystem.from_json(doc["initial"])
    stages = [Stage(s["label"], HomSystem.from_json(s["system"]), EquivalenceMap.from_json(s["map"]), list(s.get("notes", []))) for s in doc["stages"]]
    return initial, stages


def reverify_trace(doc: dict, cap: int = DEFAULT_CAP) -> list[EquivalenceReport]:
    """Re-certify every stage of a serialized trace from scratch."""
    prev, stages = trace_from_json(doc)
    out = []
    for st in stages:
        out.append(verify_equivalence(st.map, prev, st.system, cap=cap, constancy=False))
        prev = st.system
    return out


BATCH_GRID = 1 << 20


@lru_cache(maxsize=8)
def _grid(orders: tuple[int, ...]) -> np.ndarray:
    g = index_grid(orders)
    g.setflags(write=False)
    return g


def obs_partition_check(sys: HomSystem, cap: int = DEFAULT_CAP) -> bool:
    """``S(A) = disjoint union over b in prod P_{d_j} of S(A2, b)`` over ``Z_n^t``.

    ``A`` is row-reduced to ``A1`` with row gcds ``d_j`` and ``A2 = A1 / d``;
    checked by enumerating every piece.
    """
    G = sys.group
    if not G.is_homocyclic:
        raise PreconditionError("partition check needs a homocyclic group")
    n = G.orders[0]
    A1, _, d = row_reduce(repair_degenerate(sys.homogeneous()))
    d = [x if x else n for x in d]  # a zero row of A1 is n times a zero row
    A2 = IntMatrix([[a // x for a in row] for row, x in zip(A1.matrix.entries, d)], A1.matrix.cols)
    t = sys.block
    axes = [np.arange(0, n, n // gcd(x, n), dtype=np.int64) for x in d]
    if n ** (t * sys.m) <= min(cap, BATCH_GRID):
        # every S(A2, b) at once: bucket the grid by the value of A2 x, so the
        # pieces are disjoint by construction; A x = 0 is evaluated separately
        grid = _grid(G.orders * sys.m)
        lhs = sys.homogeneous().satisfied(grid)
        steps = np.array([n // gcd(x, n) for x in d], dtype=np.int64)
        rhs = ~(HomSystem(A2, G).residuals(grid) % steps).any(axis=1)
        return bool(np.array_equal(lhs, rhs))
    whole = enumerate_solutions(sys.homogeneous(), cap=cap).data
    import itertools

    pieces = []
    for b in itertools.product(*axes):
        rhs = tuple(G.element(b[r * t : (r + 1) * t]) for r in range(len(b) // t))
        pieces.append(enumerate_solutions(HomSystem(A2, G, rhs), cap=cap).data)
    allp = np.concatenate(pieces) if pieces else np.zeros((0, whole.shape[1]), np.int64)
    if allp.shape[0] != whole.shape[0]:
        return False  # overlaps or gaps
    return np.array_equal(np.unique(allp, axis=0), whole)


__all__ = [
    "AffineMap",
    "EquivalenceMap",
    "EquivalenceReport",
    "PipelineTrace",
    "SplitSystem",
    "Stage",
    "block_row_reduce",
    "circularize",
    "dehomogenize",
    "determinantal_to_identity",
    "is_interleaved",
    "join_systems",
    "verify_join_product",
    "lift_to_homocyclic",
    "obs_partition_check",
    "reverify_trace",
    "row_reduce",
    "run_full_pipeline",
    "simulate_independent_vectors",
    "solution_count",
    "split_to_J_systems",
    "verify_equivalence",
]
