"""Linear configuration systems ``A x = b`` over a finite abelian group.

A :class:`HomSystem` over ``G = prod Z_{n_i}`` (rank ``t``) is a ``tk x tm``
integer matrix read in ``t x t`` blocks: block ``(r, c)`` is the homomorphism
``G -> G`` applied to variable ``c`` in equation ``r``. Scalar row ``r*t + i``
is an equation in ``Z_{n_i}``; scalar column ``c*t + j`` is coordinate ``j`` of
variable ``c``. A block is well defined on ``G`` iff ``n_i | a_ij * n_j``.

Solutions are stored as an ``(count, m*t)`` int64 array, rows sorted
lexicographically. Three enumerators are provided and tested against each
other:

``brute``     scan of all ``|G|^m`` tuples (the reference oracle);
``param``     free-variable parameterization for systems shaped ``(I | B)``;
``lattice``   Smith-form parameterization of the solution coset, used for
              anything else (lifts to ``Z_N`` with ``N`` the exponent).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import gcd, prod
from typing import Iterable, Sequence

import numpy as np

from .errors import DEFAULT_CAP, CapExceededError, InvalidInputError, PreconditionError
from .groups import FiniteAbelianGroup, GroupElement, index_grid, is_coset, is_subgroup
from .intmatrix import IntMatrix, as_matrix, det_is_unit_mod, determinantal_divisor, smith_normal_form

CHUNK = 1 << 16


@dataclass(frozen=True)
class HomSystem:
    matrix: IntMatrix
    group: FiniteAbelianGroup
    rhs: tuple[GroupElement, ...] = ()
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        A, G = as_matrix(self.matrix), self.group
        object.__setattr__(self, "matrix", A)
        t = G.rank
        if t == 0 or A.rows % t or A.cols % t:
            raise InvalidInputError(f"matrix {A.shape} is not made of {t}x{t} blocks")
        k = A.rows // t
        rhs = tuple(self.rhs) if self.rhs else tuple(G.zero() for _ in range(k))
        rhs = tuple(r if isinstance(r, GroupElement) else G.element(r) for r in rhs)
        if len(rhs) != k:
            raise InvalidInputError(f"rhs has {len(rhs)} entries, expected {k}")
        if any(r.orders != G.orders for r in rhs):
            raise InvalidInputError("rhs elements must live in the system's group")
        object.__setattr__(self, "rhs", rhs)
        orders = G.orders
        for r, row in enumerate(A.entries):
            ni = orders[r % t]
            for c, a in enumerate(row):
                if a and (a * orders[c % t]) % ni:
                    raise InvalidInputError(
                        f"entry {a} at ({r},{c}) is not a homomorphism Z_{orders[c % t]} -> Z_{ni}"
                    )

    # ------------------------------------------------------------------ shape
    @property
    def block(self) -> int:
        return self.group.rank

    @property
    def k(self) -> int:
        return self.matrix.rows // self.block

    @property
    def m(self) -> int:
        return self.matrix.cols // self.block

    @property
    def row_moduli(self) -> np.ndarray:
        t = self.block
        return np.array([self.group.orders[r % t] for r in range(self.matrix.rows)], dtype=np.int64)

    @property
    def col_moduli(self) -> np.ndarray:
        t = self.block
        return np.array([self.group.orders[c % t] for c in range(self.matrix.cols)], dtype=np.int64)

    def reduced_matrix(self) -> np.ndarray:
        cached = self.__dict__.get("_reduced")
        if cached is not None:
            return cached
        out = self._compute_reduced()
        out.setflags(write=False)
        object.__setattr__(self, "_reduced", out)
        return out

    def _compute_reduced(self) -> np.ndarray:
        t, orders = self.block, self.group.orders
        return np.array(
            [[a % orders[r % t] for a in row] for r, row in enumerate(self.matrix.entries)], dtype=np.int64
        ).reshape(self.matrix.rows, self.matrix.cols)

    def rhs_vector(self) -> np.ndarray:
        return np.array([c for e in self.rhs for c in e.coords], dtype=np.int64)

    def is_homogeneous(self) -> bool:
        return all(e.is_zero() for e in self.rhs)

    def with_rhs(self, rhs) -> "HomSystem":
        return HomSystem(self.matrix, self.group, tuple(rhs), self.notes)

    def with_notes(self, *notes: str) -> "HomSystem":
        return HomSystem(self.matrix, self.group, self.rhs, self.notes + tuple(notes))

    def homogeneous(self) -> "HomSystem":
        return self.with_rhs(())

    # ------------------------------------------------------------------ evaluation
    def residuals(self, data: np.ndarray) -> np.ndarray:
        """``A x - b`` reduced per row, for each row of ``data`` (``(N, m*t)``)."""
        data = np.asarray(data, dtype=np.int64).reshape(-1, self.matrix.cols)
        Am = self.reduced_matrix()
        mods = self.row_moduli
        out = mat_mod(data, Am.T, mods)
        return (out - self.rhs_vector()) % mods

    def satisfied(self, data: np.ndarray) -> np.ndarray:
        return ~self.residuals(data).any(axis=1)

    def is_solution(self, x: Sequence) -> bool:
        flat = _flatten_tuple(x, self.block)
        return bool(self.satisfied(np.array([flat]))[0])

    # ------------------------------------------------------------------ constructors
    @classmethod
    def scalar(cls, coeffs, G: FiniteAbelianGroup, rhs=None) -> "HomSystem":
        """Integer ``k x m`` coefficients acting diagonally on every coordinate of ``G``."""
        coeffs = as_matrix(coeffs)
        t = G.rank
        rows = []
        for r in coeffs.entries:
            for i in range(t):
                rows.append([a if i == j else 0 for a in r for j in range(t)])
        return cls(IntMatrix(rows, coeffs.cols * t), G, tuple(rhs) if rhs else ())

    def to_json(self) -> dict:
        return {
            "matrix": self.matrix.to_json(),
            "block": self.block,
            "group": self.group.to_json(),
            "rhs": [list(e.coords) for e in self.rhs],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "HomSystem":
        G = FiniteAbelianGroup.from_json(doc["group"])
        if "block" in doc and int(doc["block"]) != G.rank:
            raise InvalidInputError("block size must equal the group rank")
        A = IntMatrix.from_json(doc["matrix"])
        rhs = tuple(G.element(r) for r in doc.get("rhs") or [])
        return cls(A, G, rhs)

    def __str__(self) -> str:
        return f"HomSystem(k={self.k}, m={self.m}, t={self.block}, G={self.group})"


def _flatten_tuple(x: Sequence, t: int) -> list[int]:
    out = []
    for e in x:
        coords = e.coords if isinstance(e, GroupElement) else (tuple(e) if isinstance(e, (tuple, list)) else (e,))
        if len(coords) != t:
            raise InvalidInputError("element of the wrong rank")
        out.extend(int(c) for c in coords)
    return out


# ---------------------------------------------------------------------- assembly and repair


def repair_degenerate(sys: HomSystem) -> HomSystem:
    """Replace zero columns by multiples of ``n`` and make the leading square block non-singular.

    Both edits add multiples of ``n`` (the group is homocyclic ``Z_n^t``), so the
    solution set is unchanged. The leading ``kt x kt`` block receives
    ``n^e I`` with the least ``e >= 1`` giving a non-zero determinant.
    """
    G = sys.group
    if not G.is_homocyclic:
        raise PreconditionError("repair needs a homocyclic group")
    n = G.orders[0]
    A = sys.matrix.tolist()
    notes = []
    rows, cols = len(A), len(A[0]) if A else 0
    for c in range(cols):
        if all(A[r][c] == 0 for r in range(rows)):
            for r in range(rows):
                A[r][c] = n
            notes.append(f"zero column {c} replaced by multiples of {n}")
    kt = rows
    if kt <= cols and kt:
        lead = IntMatrix([r[:kt] for r in A], kt)
        if lead.det() == 0:
            e = 1
            while IntMatrix([[x + (n**e if i == j else 0) for j, x in enumerate(r[:kt])] for i, r in enumerate(A)], kt).det() == 0:
                e += 1
            for i in range(kt):
                A[i][i] += n**e
            notes.append(f"added {n}^{e} to the leading diagonal")
    if not notes:
        return sys
    return HomSystem(IntMatrix(A, cols), G, sys.rhs, sys.notes + tuple(notes))


def from_blocks(blocks, G: FiniteAbelianGroup, b=None, repair: bool = True) -> HomSystem:
    """Assemble a system from a ``k x m`` grid of ``t x t`` integer blocks."""
    t = G.rank
    grid = [[as_matrix(B) for B in row] for row in blocks]
    if not grid or any(len(row) != len(grid[0]) for row in grid):
        raise InvalidInputError("ragged block grid")
    for row in grid:
        for B in row:
            if B.shape != (t, t):
                raise InvalidInputError(f"block of shape {B.shape}, expected {(t, t)}")
    A = IntMatrix.vstack(*(IntMatrix.hstack(*row) for row in grid))
    sys = HomSystem(A, G, tuple(b) if b else ())
    if repair and G.is_homocyclic:
        sys = repair_degenerate(sys)
    return sys


def pad_variables(sys: HomSystem) -> HomSystem:
    """Append two block variables whose coefficients all equal ``|G|`` (acting as 0)."""
    A, t, g = sys.matrix, sys.block, sys.group.order
    pad = IntMatrix([[g] * (2 * t) for _ in range(A.rows)], 2 * t)
    return HomSystem(IntMatrix.hstack(A, pad), sys.group, sys.rhs, sys.notes + ("padded with two |G| columns",))


def drop_redundant_equations(sys: HomSystem) -> HomSystem:
    """For ``k > m`` over ``Z_n^t``: row-reduce and keep the first ``mt`` rows.

    ``U A`` has zero rows beyond the rank (``<= mt``); those equations are
    ``0 = (U b)_i`` and are dropped when their right-hand side vanishes.
    """
    if sys.k <= sys.m:
        return sys
    G = sys.group
    if not G.is_homocyclic:
        raise PreconditionError("equation elimination needs a homocyclic group")
    n = G.orders[0]
    snf = smith_normal_form(sys.matrix)
    A1 = snf.U @ sys.matrix
    b = sys.rhs_vector().tolist()
    b1 = [sum(u * x for u, x in zip(row, b)) % n for row in snf.U.entries]
    keep = sys.m * sys.block
    if any(b1[keep:]):
        raise PreconditionError("inconsistent system: a dropped equation reads 0 = b != 0")
    t = sys.block
    rhs = tuple(G.element(b1[r * t : (r + 1) * t]) for r in range(sys.m))
    return HomSystem(A1.submatrix(range(keep)), G, rhs, sys.notes + (f"dropped {sys.k - sys.m} redundant equations",))


# ---------------------------------------------------------------------- solution sets


@dataclass
class SolutionSet:
    system: HomSystem
    data: np.ndarray
    restricted_to: tuple | None = None

    @property
    def count(self) -> int:
        return int(self.data.shape[0])

    def __len__(self) -> int:
        return self.count

    @property
    def m(self) -> int:
        return self.system.m

    def var_coords(self, i: int) -> np.ndarray:
        """Coordinates of variable ``i`` (0-based) as an ``(N, t)`` array."""
        t = self.system.block
        return self.data[:, i * t : (i + 1) * t]

    def var_ids(self, i: int) -> np.ndarray:
        return self.var_coords(i) @ np.array(self.system.group.strides(), dtype=np.int64)

    def ids(self) -> np.ndarray:
        return np.stack([self.var_ids(i) for i in range(self.m)], axis=1) if self.count else np.zeros((0, self.m), np.int64)

    def tuples(self) -> list[tuple[tuple[int, ...], ...]]:
        t = self.system.block
        return [tuple(tuple(int(v) for v in row[i * t : (i + 1) * t]) for i in range(self.m)) for row in self.data]

    @property
    def solutions(self) -> list[tuple[GroupElement, ...]]:
        orders = self.system.group.orders
        return [tuple(GroupElement(c, orders) for c in tup) for tup in self.tuples()]

    def __iter__(self):
        return iter(self.solutions)


def _sort_rows(data: np.ndarray) -> np.ndarray:
    if data.shape[0] <= 1:
        return data
    order = np.lexsort(data.T[::-1])
    return data[order]


def _unique_rows(data: np.ndarray) -> np.ndarray:
    if data.shape[0] == 0:
        return data
    return np.unique(data, axis=0)


def _domain_ids(G: FiniteAbelianGroup, X_i) -> np.ndarray:
    vals = []
    for e in X_i:
        coords = e.coords if isinstance(e, GroupElement) else (tuple(e) if isinstance(e, (tuple, list)) else (e,))
        vals.append(G.index(G.reduce(coords)))
    return np.array(sorted(set(vals)), dtype=np.int64)


def _restrict(sys: HomSystem, data: np.ndarray, X) -> np.ndarray:
    if X is None:
        return data
    if len(X) != sys.m:
        raise InvalidInputError(f"{len(X)} domains given for {sys.m} variables")
    t = sys.block
    strides = np.array(sys.group.strides(), dtype=np.int64)
    keep = np.ones(data.shape[0], dtype=bool)
    for i, X_i in enumerate(X):
        if X_i is None:
            continue
        ids = data[:, i * t : (i + 1) * t] @ strides
        keep &= np.isin(ids, _domain_ids(sys.group, X_i))
    return data[keep]


def parameterized_form(sys: HomSystem) -> bool:
    """True when the first ``kt`` columns are the identity (modulo the row moduli)."""
    kt = sys.k * sys.block
    if kt > sys.matrix.cols:
        return False
    lead = sys.reduced_matrix()[:, :kt]
    return bool(np.array_equal(lead, np.eye(kt, dtype=np.int64) % sys.row_moduli[:, None]))


def _enumerate_brute(sys: HomSystem, cap: int) -> np.ndarray:
    orders = sys.group.orders * sys.m
    total = prod(orders)
    if total > cap:
        raise CapExceededError(f"|G|^m = {total} exceeds cap {cap}")
    found = []
    for start in range(0, total, CHUNK):
        block = index_grid(orders, start, start + CHUNK)
        found.append(block[sys.satisfied(block)])
    return np.concatenate(found) if found else np.zeros((0, len(orders)), np.int64)


def _enumerate_param(sys: HomSystem, cap: int) -> np.ndarray:
    t, k, m = sys.block, sys.k, sys.m
    free_orders = sys.group.orders * (m - k)
    total = prod(free_orders)
    if total > cap:
        raise CapExceededError(f"free-variable space {total} exceeds cap {cap}")
    out = []
    for start in range(0, total, CHUNK):
        free = index_grid(free_orders, start, start + CHUNK)
        out.append(np.concatenate([_param_dependent(sys, free), free], axis=1))
    return _sort_rows(np.concatenate(out)) if out else np.zeros((0, m * t), np.int64)


def _lattice_setup(sys: HomSystem):
    """Smith-form description of the lifted solution coset over ``Z_N``.

    Row ``i`` (an equation mod ``n_i``) is scaled by ``N / n_i`` and every
    variable coordinate is lifted freely to ``Z_N``; the lifted solutions are
    ``z = V w`` with ``w_i`` ranging over ``choices[i]``. Returns ``None`` when
    the system has no solution.
    """
    G = sys.group
    N = G.exponent
    mods = sys.row_moduli.tolist()
    A = sys.matrix
    R, C = A.shape
    Ascaled = IntMatrix([[a * (N // mods[r]) for a in row] for r, row in enumerate(A.entries)], C)
    bvec = [int(x) * (N // mods[r]) for r, x in enumerate(sys.rhs_vector().tolist())]
    if R == 0:
        return [np.arange(N, dtype=np.int64) for _ in range(C)], np.eye(C, dtype=np.int64), N
    snf = smith_normal_form(Ascaled)
    c = [sum(u * x for u, x in zip(row, bvec)) % N for row in snf.U.entries]
    choices = []
    for i in range(C):
        if i >= R:
            choices.append(np.arange(N, dtype=np.int64))
            continue
        s = snf.diag[i] if i < len(snf.diag) else 0
        g = gcd(s, N)
        if c[i] % g:
            return None
        step = N // g
        w0 = 0 if step == 1 else (c[i] // g) * pow((s // g) % step, -1, step) % step
        choices.append(np.arange(w0, N, step, dtype=np.int64))
    if any(c[i] % N for i in range(C, R)):
        return None
    return choices, snf.V.mod(N), N


def _lattice_points(choices, V, N, idx: np.ndarray) -> np.ndarray:
    C = len(choices)
    z = np.zeros((idx.shape[0], C), dtype=np.int64)
    for i in range(C):
        w = choices[i][idx[:, i]]
        z = (z + np.outer(w, V[:, i])) % N
    return z


def _enumerate_lattice(sys: HomSystem, cap: int) -> np.ndarray:
    C = sys.matrix.cols
    setup = _lattice_setup(sys)
    if setup is None:
        return np.zeros((0, C), np.int64)
    choices, V, N = setup
    sizes = [len(ch) for ch in choices]
    total = prod(sizes)
    colmods = sys.col_moduli
    lift = prod(N // int(n) for n in colmods)
    if total > cap * lift:
        raise CapExceededError(f"lattice enumeration of {total // lift} solutions exceeds cap {cap}")
    out = []
    for start in range(0, total, CHUNK):
        out.append(_lattice_points(choices, V, N, index_grid(sizes, start, start + CHUNK)) % colmods)
    data = np.concatenate(out) if out else np.zeros((0, C), np.int64)
    return _unique_rows(data) if lift > 1 else _sort_rows(data)


def sample_solutions(sys: HomSystem, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent uniform solutions (rows), or an empty array if none exist."""
    C = sys.matrix.cols
    if parameterized_form(sys):
        t, k, m = sys.block, sys.k, sys.m
        kt = k * t
        free_orders = np.array(sys.group.orders * (m - k), dtype=np.int64)
        free = rng.integers(0, free_orders, size=(size, free_orders.size)) if free_orders.size else np.zeros((size, 0), np.int64)
        return np.concatenate([_param_dependent(sys, free), free], axis=1)
    setup = _lattice_setup(sys)
    if setup is None:
        return np.zeros((0, C), np.int64)
    choices, V, N = setup
    idx = np.stack([rng.integers(0, len(ch), size=size) for ch in choices], axis=1) if C else np.zeros((size, 0), np.int64)
    return _lattice_points(choices, V, N, idx) % sys.col_moduli


def _param_dependent(sys: HomSystem, free: np.ndarray, rows: Sequence[int] | None = None) -> np.ndarray:
    """Dependent coordinates ``b - B f`` (optionally only the scalar ``rows``)."""
    kt = sys.k * sys.block
    Am = sys.reduced_matrix()
    rows = list(range(kt)) if rows is None else list(rows)
    B = Am[rows, kt:]
    mods = sys.row_moduli[rows]
    return (sys.rhs_vector()[rows] - mat_mod(free, B.T, mods)) % mods


def mat_mod(X: np.ndarray, M: np.ndarray, mods: np.ndarray) -> np.ndarray:
    """``X @ M`` reduced columnwise by ``mods``, avoiding int64 overflow."""
    if X.shape[1] == 0 or M.size == 0:
        return np.zeros((X.shape[0], M.shape[1]), dtype=np.int64)
    bound = int(X.max(initial=0)) * int(M.max(initial=0)) * X.shape[1]
    if bound < (1 << 52):
        # BLAS float product is exact while every partial sum stays below 2**53
        return (X.astype(np.float64) @ M.astype(np.float64)).astype(np.int64) % mods
    if bound < (1 << 62):
        return (X @ M) % mods
    out = np.zeros((X.shape[0], M.shape[1]), dtype=np.int64)
    for c in range(M.shape[0]):
        row = M[c]
        if row.any():
            out = (out + np.outer(X[:, c], row)) % mods
    return out


def iter_solution_columns(sys: HomSystem, variables: Sequence[int], cap: int = DEFAULT_CAP):
    """Yield chunks of the selected variables' coordinates over all solutions.

    Each solution appears exactly once across the chunks (order unspecified).
    For ``(I | B)`` systems only the requested dependent rows are computed, so
    very wide systems can be scanned without materializing whole solutions.
    """
    t = sys.block
    cols = [v * t + j for v in variables for j in range(t)]
    if parameterized_form(sys):
        k, m = sys.k, sys.m
        kt = k * t
        free_orders = sys.group.orders * (m - k)
        total = prod(free_orders)
        if total > cap:
            raise CapExceededError(f"free-variable space {total} exceeds cap {cap}")
        dep_rows = [c for c in cols if c < kt]
        for start in range(0, total, CHUNK):
            free = index_grid(free_orders, start, start + CHUNK)
            dep = _param_dependent(sys, free, dep_rows)
            where = {c: i for i, c in enumerate(dep_rows)}
            yield np.stack([dep[:, where[c]] if c < kt else free[:, c - kt] for c in cols], axis=1) if cols else np.zeros((free.shape[0], 0), np.int64)
        return
    data = enumerate_solutions(sys, cap=cap).data
    for start in range(0, max(1, data.shape[0]), CHUNK):
        chunk = data[start : start + CHUNK]
        if chunk.shape[0]:
            yield chunk[:, cols]


def solution_count_param(sys: HomSystem) -> int:
    return sys.group.order ** (sys.m - sys.k)


def enumerate_solutions(sys: HomSystem, X=None, strategy: str = "auto", cap: int = DEFAULT_CAP) -> SolutionSet:
    """The exact solution set ``S((A, b), G, X)`` in lexicographic order."""
    if strategy == "auto":
        strategy = "param" if parameterized_form(sys) else "lattice"
    if strategy == "brute":
        data = _enumerate_brute(sys, cap)
    elif strategy == "param":
        if not parameterized_form(sys):
            raise PreconditionError("system is not of the form (I | B)")
        data = _enumerate_param(sys, cap)
    elif strategy == "lattice":
        data = _enumerate_lattice(sys, cap)
    else:
        raise InvalidInputError(f"unknown strategy {strategy!r}")
    data = _restrict(sys, data, X)
    return SolutionSet(sys, data, None if X is None else tuple(None if x is None else tuple(x) for x in X))


def count_solutions(sys: HomSystem) -> int:
    """``|S((A, b), G)|`` from the Smith form, without enumerating (homocyclic groups).

    For ``A`` over ``Z_n`` with diagonal ``s_i``: ``prod gcd(s_i, n)`` times
    ``n`` per column beyond the rows, provided the system is solvable.
    """
    G = sys.group
    if not G.is_homocyclic:
        raise PreconditionError("closed-form count needs a homocyclic group")
    n = G.orders[0]
    A = sys.matrix
    R, C = A.shape
    if R == 0:
        return n**C
    snf = smith_normal_form(A)
    b = sys.rhs_vector().tolist()
    c = [sum(u * x for u, x in zip(row, b)) % n for row in snf.U.entries]
    total = 1
    for i in range(max(R, C)):
        s = snf.diag[i] if i < len(snf.diag) else 0
        if i < R:
            g = gcd(s, n)
            if c[i] % g:
                return 0
            if i < C:
                total *= g
        else:
            total *= n
    return total


def project_solutions(sol: SolutionSet, i: int, check: bool = True) -> list[GroupElement]:
    """``S_i``: the distinct values of variable ``i`` (1-based), sorted."""
    if not 1 <= i <= sol.m:
        raise InvalidInputError(f"variable index {i} out of range 1..{sol.m}")
    G = sol.system.group
    ids = np.unique(sol.var_ids(i - 1)) if sol.count else np.zeros(0, np.int64)
    out = [G.from_index(int(x)) for x in ids]
    if check and out and len(out) <= 4096:
        ok = is_subgroup(out) if sol.system.is_homogeneous() else is_coset(out)
        if not ok:
            raise AssertionError("projection is not a subgroup/coset")
    return out


# ---------------------------------------------------------------------- subgroups as systems


def subgroup_to_system(generators: Sequence[Sequence], shift=None, group: FiniteAbelianGroup | None = None) -> HomSystem:
    """A system whose solution set is ``shift + <generators>`` inside ``G^m``.

    The equations are the characters annihilating the subgroup: ``a`` with
    ``sum_j a_j g_j (N / n_j) = 0 mod N`` for every generator ``g``. By duality
    of finite abelian groups their common kernel is exactly the subgroup. Each
    character becomes one block equation living in a coordinate of order ``N``.
    """
    gens = [list(g) for g in generators]
    if group is None:
        probe = gens[0][0] if gens else (shift[0] if shift else None)
        if not isinstance(probe, GroupElement):
            raise InvalidInputError("group must be given when generators are plain tuples")
        group = probe.group
    G = group
    t = G.rank
    m = len(gens[0]) if gens else len(shift)
    N = G.exponent
    colmods = list(G.orders) * m
    W = [[c * (N // colmods[j]) for j, c in enumerate(_flatten_tuple(g, t))] for g in gens]
    C = m * t
    if W:
        snf = smith_normal_form(IntMatrix(W, C))
        chars = []
        for i in range(C):
            s = snf.diag[i] if i < len(snf.diag) else 0
            mult = N // gcd(s, N)
            chars.append([(mult * snf.V.entries[r][i]) % N for r in range(C)])
    else:
        chars = [[int(r == i) for r in range(C)] for i in range(C)]
    top = G.orders.index(N)
    rows = []
    for a in chars:
        eq = [(a[j] * (N // colmods[j])) % N for j in range(C)]
        if not any(eq):
            continue
        for i in range(t):
            rows.append(eq if i == top else [0] * C)
    if not rows:
        rows = [[0] * C for _ in range(t)]
    A = IntMatrix(rows, C)
    sys = HomSystem(A, G)
    if shift is not None:
        s = np.array([_flatten_tuple(shift, t)], dtype=np.int64)
        b = sys.with_rhs(()).residuals(s)[0]  # A s (the rhs is zero here)
        rhs = tuple(G.element(b[r * t : (r + 1) * t].tolist()) for r in range(sys.k))
        sys = sys.with_rhs(rhs)
    return sys


def extension_count_check(sys: HomSystem, cap: int = DEFAULT_CAP) -> bool:
    """Every assignment of the first ``k`` variables extends in exactly ``n^{(m-k)t-kt}`` ways.

    ``sys`` is ``(A' | B)`` over ``Z_n^t`` with ``A'`` the leading ``kt`` columns.
    """
    G = sys.group
    if not G.is_homocyclic:
        raise PreconditionError("extension count needs a homocyclic group")
    n = G.orders[0]
    t, k = sys.block, sys.k
    kt = k * t
    B = sys.matrix.submatrix(None, range(kt, sys.matrix.cols))
    if B.cols < kt:
        raise PreconditionError("B needs at least kt columns")
    if gcd(determinantal_divisor(B, kt), n) != 1:
        raise PreconditionError("gcd(D_k(B), n) != 1")
    sol = enumerate_solutions(sys, strategy="lattice", cap=cap)
    expected = n ** (B.cols - kt)
    prefix_ids = sol.data[:, :kt] @ np.array([n**j for j in range(kt - 1, -1, -1)], dtype=np.int64)
    counts = np.bincount(prefix_ids, minlength=n**kt)
    return bool((counts == expected).all())


def lead_block_unit(sys: HomSystem) -> bool:
    G = sys.group
    n = G.exponent
    kt = sys.k * sys.block
    return det_is_unit_mod(sys.matrix.submatrix(None, range(kt)), n)


def rows_gcd(row: Iterable[int]) -> int:
    return reduce(gcd, row, 0)


__all__ = [
    "sample_solutions",
    "mat_mod",
    "iter_solution_columns",
    "solution_count_param",
    "HomSystem",
    "SolutionSet",
    "count_solutions",
    "drop_redundant_equations",
    "enumerate_solutions",
    "extension_count_check",
    "from_blocks",
    "pad_variables",
    "parameterized_form",
    "project_solutions",
    "repair_degenerate",
    "subgroup_to_system",
]

