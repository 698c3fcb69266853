"""Exact integer matrices.

Everything here works on Python integers, never on machine words: the
intermediate entries of Smith reductions and of the circular extension grow
well past 64 bits even for tiny inputs.

Conventions
-----------
* Smith normal form is ``U @ A @ V == S`` with ``U``, ``V`` unimodular and a
  non-negative diagonal ``d_1 | d_2 | ...``. The inverses of ``U`` and ``V``
  are tracked alongside, since the reductions need them.
* A matrix is *block n-circular* when every ``k`` cyclically consecutive
  column blocks form a square matrix whose determinant is a unit mod ``n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateSystemError, InvalidInputError, PreconditionError


@dataclass(frozen=True)
class IntMatrix:
    entries: tuple[tuple[int, ...], ...]
    ncols: int = -1

    def __init__(self, entries: Iterable[Iterable[int]], ncols: int | None = None):
        rows = tuple(tuple(int(x) for x in r) for r in entries)
        width = len(rows[0]) if rows else (ncols or 0)
        if ncols is not None and rows and width != ncols:
            raise InvalidInputError("declared column count does not match entries")
        if any(len(r) != width for r in rows):
            raise InvalidInputError("ragged matrix")
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "ncols", width)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return self.ncols

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij):
        if isinstance(ij, tuple):
            i, j = ij
            return self.entries[i][j]
        return self.entries[ij]

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    @property
    def T(self) -> "IntMatrix":
        return IntMatrix(zip(*self.entries), ncols=self.rows) if self.rows else IntMatrix([], 0)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise InvalidInputError(f"cannot multiply {self.shape} by {other.shape}")
        oc = list(zip(*other.entries)) if other.rows else [()] * other.cols
        return IntMatrix(([sum(a * b for a, b in zip(r, c)) for c in oc] for r in self.entries), other.cols)

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        if self.shape != other.shape:
            raise InvalidInputError("shape mismatch")
        return IntMatrix(([a + b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)), self.cols)

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(([-a for a in r] for r in self.entries), self.cols)

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return self + (-other)

    def scale(self, c: int) -> "IntMatrix":
        return IntMatrix(([c * a for a in r] for r in self.entries), self.cols)

    def submatrix(self, rows: Sequence[int] | None = None, cols: Sequence[int] | None = None) -> "IntMatrix":
        rows = range(self.rows) if rows is None else rows
        cols = range(self.cols) if cols is None else cols
        return IntMatrix(([self.entries[i][j] for j in cols] for i in rows), len(cols))

    def is_zero(self) -> bool:
        return not any(any(r) for r in self.entries)

    def det(self) -> int:
        return bareiss_det(self.tolist())

    def mod(self, n: int) -> np.ndarray:
        return np.array([[x % n for x in r] for r in self.entries], dtype=np.int64).reshape(self.rows, self.cols)

    @staticmethod
    def identity(n: int) -> "IntMatrix":
        return IntMatrix(([int(i == j) for j in range(n)] for i in range(n)), n)

    @staticmethod
    def zeros(r: int, c: int) -> "IntMatrix":
        return IntMatrix(([0] * c for _ in range(r)), c)

    @staticmethod
    def hstack(*ms: "IntMatrix") -> "IntMatrix":
        ms = [m for m in ms if m.cols]
        if not ms:
            return IntMatrix([], 0)
        if len({m.rows for m in ms}) != 1:
            raise InvalidInputError("hstack row mismatch")
        return IntMatrix((sum((m.entries[i] for m in ms), ()) for i in range(ms[0].rows)), sum(m.cols for m in ms))

    @staticmethod
    def vstack(*ms: "IntMatrix") -> "IntMatrix":
        ms = [m for m in ms if m.rows]
        if not ms:
            return IntMatrix([], 0)
        if len({m.cols for m in ms}) != 1:
            raise InvalidInputError("vstack column mismatch")
        return IntMatrix(itertools.chain.from_iterable(m.entries for m in ms), ms[0].cols)

    @staticmethod
    def block_diag(*ms: "IntMatrix") -> "IntMatrix":
        total = sum(m.cols for m in ms)
        out, off = [], 0
        for m in ms:
            for r in m.entries:
                out.append([0] * off + list(r) + [0] * (total - off - m.cols))
            off += m.cols
        return IntMatrix(out, total)

    def to_json(self) -> dict:
        def enc(x: int):
            return x if abs(x) < 2**53 else str(x)

        return {"rows": self.rows, "cols": self.cols, "entries": [[enc(x) for x in r] for r in self.entries]}

    @classmethod
    def from_json(cls, doc) -> "IntMatrix":
        if isinstance(doc, list):
            return cls([[int(x) for x in r] for r in doc])
        m = cls([[int(x) for x in r] for r in doc["entries"]], ncols=int(doc.get("cols", -1)) if not doc["entries"] else None)
        if m.rows != int(doc.get("rows", m.rows)):
            raise InvalidInputError("declared row count does not match entries")
        return m

    def __repr__(self) -> str:
        return f"IntMatrix({self.tolist()})"


def as_matrix(A) -> IntMatrix:
    return A if isinstance(A, IntMatrix) else IntMatrix(A)


def bareiss_det(M: list[list[int]]) -> int:
    """Fraction-free Gaussian elimination; exact for any integer matrix."""
    n = len(M)
    if n == 0:
        return 1
    if any(len(r) != n for r in M):
        raise InvalidInputError("determinant of a non-square matrix")
    A = [list(r) for r in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            row_i, row_k = A[i], A[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * A[-1][-1]


# --------------------------------------------------------------------------- SNF


@dataclass(frozen=True)
class SmithDecomposition:
    U: IntMatrix
    S: IntMatrix
    V: IntMatrix
    diag: tuple[int, ...]
    U_inv: IntMatrix
    V_inv: IntMatrix

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diag if d)

    def to_json(self) -> dict:
        return {
            "U": self.U.to_json(),
            "S": self.S.to_json(),
            "V": self.V.to_json(),
            "diag": [d if d < 2**53 else str(d) for d in self.diag],
        }


def smith_normal_form(A) -> SmithDecomposition:
    A = as_matrix(A)
    k, m = A.shape
    S = A.tolist()
    U = [[int(i == j) for j in range(k)] for i in range(k)]
    Ui = [r[:] for r in U]
    V = [[int(i == j) for j in range(m)] for i in range(m)]
    Vi = [r[:] for r in V]

    def swap_rows(i, j):
        S[i], S[j] = S[j], S[i]
        U[i], U[j] = U[j], U[i]
        for r in Ui:
            r[i], r[j] = r[j], r[i]

    def swap_cols(i, j):
        for r in S:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        Vi[i], Vi[j] = Vi[j], Vi[i]

    def add_row(dst, src, q):  # row_dst += q * row_src
        if q == 0:
            return
        S[dst] = [a + q * b for a, b in zip(S[dst], S[src])]
        U[dst] = [a + q * b for a, b in zip(U[dst], U[src])]
        for r in Ui:  # inverse: col_src -= q * col_dst
            r[src] -= q * r[dst]

    def add_col(dst, src, q):  # col_dst += q * col_src
        if q == 0:
            return
        for r in S:
            r[dst] += q * r[src]
        for r in V:
            r[dst] += q * r[src]
        Vi[src] = [a - q * b for a, b in zip(Vi[src], Vi[dst])]

    for t in range(min(k, m)):
        while True:
            best = None
            for i in range(t, k):
                for j in range(t, m):
                    v = S[i][j]
                    if v and (best is None or abs(v) < best[0]):
                        best = (abs(v), i, j)
            if best is None:
                break
            _, i, j = best
            if i != t:
                swap_rows(t, i)
            if j != t:
                swap_cols(t, j)
            p = S[t][t]
            clean = True
            for i in range(t + 1, k):
                if S[i][t]:
                    add_row(i, t, -(S[i][t] // p))
                    clean &= S[i][t] == 0
            for j in range(t + 1, m):
                if S[t][j]:
                    add_col(j, t, -(S[t][j] // p))
                    clean &= S[t][j] == 0
            if not clean:
                continue
            bad = next(((i, j) for i in range(t + 1, k) for j in range(t + 1, m) if S[i][j] % p), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if S[t][t] < 0:
            S[t] = [-a for a in S[t]]
            U[t] = [-a for a in U[t]]
            for r in Ui:
                r[t] = -r[t]
    diag = tuple(S[i][i] for i in range(min(k, m)))
    return SmithDecomposition(
        IntMatrix(U, k), IntMatrix(S, m), IntMatrix(V, m), diag, IntMatrix(Ui, k), IntMatrix(Vi, m)
    )


def determinantal_divisor(A, i: int) -> int:
    A = as_matrix(A)
    if not 1 <= i <= min(A.shape):
        raise InvalidInputError(f"minor size {i} out of range for {A.shape}")
    d = smith_normal_form(A).diag
    out = 1
    for x in d[:i]:
        out *= x
    return out


def minors_gcd(A, i: int) -> int:
    """Brute-force ``D_i``: gcd of every ``i x i`` minor (the test oracle)."""
    A = as_matrix(A)
    g = 0
    for rs in itertools.combinations(range(A.rows), i):
        for cs in itertools.combinations(range(A.cols), i):
            g = gcd(g, bareiss_det([[A.entries[r][c] for c in cs] for r in rs]))
    return g


def row_reduce_to_gcd_rows(A) -> tuple[IntMatrix, IntMatrix]:
    """``A1 = U A`` whose ``j``-th row has gcd ``d_j`` (``A1 = S V^{-1}``)."""
    A = as_matrix(A)
    if A.rows > A.cols:
        raise PreconditionError("row reduction needs rows <= cols")
    snf = smith_normal_form(A)
    return snf.U @ A, snf.U


def row_gcd(row: Sequence[int]) -> int:
    return reduce(gcd, row, 0)


def divide_rows_by_gcd(A1, diag: Sequence[int]) -> IntMatrix:
    A1 = as_matrix(A1)
    out = []
    for r, d in zip(A1.entries, diag):
        if d == 0:
            raise DegenerateSystemError("zero divisor: the system must be repaired before dividing")
        if any(x % d for x in r):
            raise PreconditionError(f"row {r} is not divisible by {d}")
        out.append([x // d for x in r])
    return IntMatrix(out, A1.cols)


def extend_to_det(A) -> IntMatrix:
    """Square completion ``N`` with ``N[:k] = A`` and ``det N = D_k(A)``.

    With ``U A V = (D | 0)`` the extra rows are the last ``m - k`` rows of
    ``V^{-1}``; the sign of the last row is fixed to make ``det N`` positive.
    For square ``A`` no rows are added and ``det N = det A = +-D_k(A)``.
    """
    A = as_matrix(A)
    k, m = A.shape
    if k > m:
        raise PreconditionError("extend_to_det needs rows <= cols")
    snf = smith_normal_form(A)
    Dk = 1
    for d in snf.diag:
        Dk *= d
    if Dk == 0:
        raise DegenerateSystemError("rank deficient: D_k(A) = 0")
    if k == m:
        return A
    extra = [list(r) for r in snf.V_inv.entries[k:]]
    N = IntMatrix(A.tolist() + extra, m)
    if N.det() < 0:
        extra[-1] = [-x for x in extra[-1]]
        N = IntMatrix(A.tolist() + extra, m)
    return N


def inverse_unimodular(M) -> IntMatrix:
    M = as_matrix(M)
    inv = rational_inverse(M)
    if any(x.denominator != 1 for r in inv for x in r):
        raise PreconditionError("matrix is not unimodular")
    return IntMatrix([[int(x) for x in r] for r in inv], M.cols)


def rational_inverse(M) -> list[list[Fraction]]:
    M = as_matrix(M)
    n = M.rows
    return solve_rational(M, IntMatrix.identity(n))


def solve_rational(M, R) -> list[list[Fraction]]:
    """Solve ``M X = R`` over the rationals (``M`` square, non-singular)."""
    M, R = as_matrix(M), as_matrix(R)
    n = M.rows
    if M.cols != n:
        raise InvalidInputError("solve_rational needs a square matrix")
    aug = [[Fraction(x) for x in M.entries[i]] + [Fraction(x) for x in R.entries[i]] for i in range(n)]
    w = n + R.cols
    for c in range(n):
        p = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if p is None:
            raise PreconditionError("singular matrix")
        aug[c], aug[p] = aug[p], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[c])]
    return [row[n:w] for row in aug]


# --------------------------------------------------------------------------- modular determinants


def prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _det_nonzero_mod_p(M: np.ndarray, p: int) -> bool:
    A = M.copy() % p
    n = A.shape[0]
    for c in range(n):
        nz = np.nonzero(A[c:, c])[0]
        if nz.size == 0:
            return False
        r = c + nz[0]
        if r != c:
            A[[c, r]] = A[[r, c]]
        inv = pow(int(A[c, c]), -1, p)
        A[c] = (A[c] * inv) % p
        below = A[c + 1 :, c].copy()
        if below.any():
            A[c + 1 :] = (A[c + 1 :] - np.outer(below, A[c])) % p
    return True


def det_is_unit_mod(M, n: int) -> bool:
    """Whether ``gcd(det M, n) = 1``, decided prime by prime over GF(p)."""
    M = as_matrix(M)
    if M.rows != M.cols:
        raise InvalidInputError("square matrix required")
    if M.rows == 0:
        return True
    for p in prime_factors(n):
        if not _det_nonzero_mod_p(M.mod(p), p):
            return False
    return True


# --------------------------------------------------------------------------- circular constructions


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def bezout(values: Sequence[int]) -> tuple[int, list[int]]:
    """``g = gcd(values)`` and integer coefficients with ``sum(c_i v_i) = g``."""
    g, coeffs = 0, [0] * len(values)
    for i, v in enumerate(values):
        ng, x, y = _ext_gcd(g, v)
        coeffs = [c * x for c in coeffs]
        coeffs[i] = y
        g = ng
    return g, coeffs


def _unit_leading_combination(col: Sequence[int], n: int) -> tuple[int, list[int]]:
    """``lam`` with ``sum(lam_j col_j) = gcd(col)`` and ``gcd(lam_0, n) = 1``.

    ``lam_0`` is the smallest-magnitude admissible value (ties: positive
    first); the remaining coefficients come from an extended gcd.
    """
    a, rest = col[0], list(col[1:])
    d = row_gcd(col)
    if d == 0:
        return 0, [1] + [0] * len(rest)
    g_rest, rest_coeffs = bezout(rest)
    if g_rest == 0:
        return d, [d // a] + [0] * len(rest)
    h = g_rest // d
    lam0 = pow((a // d) % h, -1, h) if h > 1 else 0
    s = 0
    while True:
        for cand in (s, -s) if s else (0,):
            if (cand - lam0) % h == 0 and gcd(cand, n) == 1:
                q = (d - cand * a) // g_rest
                return d, [cand] + [q * c for c in rest_coeffs]
        s += 1


def _upper_completion(M: list[list[int]], n: int) -> list[list[int]]:
    """Rows ``T_1..T_r`` with ``T_i = (0..0, d_i, *)`` such that ``stack(M, T, I)``
    has every ``r`` consecutive rows of determinant coprime to ``n``."""
    r = len(M)
    cur = [row[:] for row in M]
    T = []
    for i in range(r):
        col = [row[i] for row in cur]
        d, lam = _unit_leading_combination(col, n)
        if d == 0:
            raise PreconditionError("determinant not coprime with n")
        Ti = [sum(l * row[c] for l, row in zip(lam, cur)) for c in range(r)]
        T.append(Ti)
        cur = [[x - (row[i] // d) * y for x, y in zip(row, Ti)] for row in cur[1:]]
    return T


def circular_extension(M, n: int) -> IntMatrix:
    """``stack(I, S, M, T, I)`` (``5r x r``) whose ``r``-row windows are units mod ``n``."""
    M = as_matrix(M)
    r = M.rows
    if M.cols != r or n < 2:
        raise InvalidInputError("circular_extension needs a square matrix and n >= 2")
    if gcd(M.det(), n) != 1:
        raise PreconditionError("det(M) is not coprime with n")
    rows = M.tolist()
    T = _upper_completion(rows, n)
    # S is the same construction run on M with rows and columns reversed.
    rev = [row[::-1] for row in rows[::-1]]
    S = [row[::-1] for row in _upper_completion(rev, n)[::-1]]
    I = IntMatrix.identity(r)
    return IntMatrix.vstack(I, IntMatrix(S, r), M, IntMatrix(T, r), I)


def window_columns(m: int, k: int, start: int, block: int) -> list[int]:
    return [((start + w) % m) * block + c for w in range(k) for c in range(block)]


def _identity_prefix(A: IntMatrix) -> bool:
    k = A.rows
    if k > A.cols:
        return False
    for i, row in enumerate(A.entries):
        if row[i] != 1 or any(row[:i]) or any(row[i + 1 : k]):
            return False
    return True


def window_is_unit(A, cols: Sequence[int], n: int, identity_prefix: bool | None = None) -> bool:
    """Is ``det A[:, cols]`` a unit mod ``n``?

    For ``A = (I | B)`` the window determinant equals, up to sign, the minor of
    ``B`` on the identity columns left out of the window and the ``B`` columns
    kept in it, which is far smaller than the full window.
    """
    A = as_matrix(A)
    k = A.rows
    if identity_prefix is None:
        identity_prefix = _identity_prefix(A)
    if identity_prefix:
        inside = set(cols)
        rows = [i for i in range(k) if i not in inside]
        bcols = sorted(c for c in inside if c >= k)
        if len(rows) != len(bcols):
            return False
        if not rows:
            return True
        return det_is_unit_mod(A.submatrix(rows, bcols), n)
    return det_is_unit_mod(A.submatrix(None, list(cols)), n)


def is_block_n_circular(A, block: int, n: int) -> bool:
    A = as_matrix(A)
    if A.rows % block or A.cols % block:
        raise InvalidInputError("dimensions not divisible by block")
    k, m = A.rows // block, A.cols // block
    if k > m:
        return False
    prefix = _identity_prefix(A)
    return all(window_is_unit(A, window_columns(m, k, s, block), n, prefix) for s in range(m))


def build_band_annihilator(A, block: int, n: int) -> IntMatrix:
    """Integer ``C`` with ``A C = 0``, block band shape and unit diagonal blocks.

    Column block ``q`` of ``C`` holds ``c`` on its diagonal and ``-c b`` in the
    ``k`` blocks preceding ``q`` cyclically, where ``b`` solves
    ``A_window b = A_q`` and ``c`` is the least common denominator (a divisor of
    the window determinant, hence coprime to ``n``).
    """
    A = as_matrix(A)
    t = block
    if not is_block_n_circular(A, t, n):
        raise PreconditionError("matrix is not block n-circular")
    k, m = A.rows // t, A.cols // t
    if m <= k:
        raise PreconditionError("band annihilator needs m > k")
    C = [[0] * (m * t) for _ in range(m * t)]
    for q in range(m):
        wcols = window_columns(m, k, q - k, t)
        sol = solve_rational(A.submatrix(None, wcols), A.submatrix(None, range(q * t, (q + 1) * t)))
        for j in range(t):
            b = [sol[w][j] for w in range(k * t)]
            c = reduce(lcm, (x.denominator for x in b), 1)
            col = q * t + j
            C[col][col] = c
            for w, rr in enumerate(wcols):
                C[rr][col] = -int(b[w] * c)
    return IntMatrix(C, m * t)


def band_shape_ok(C, block: int, k: int) -> bool:
    C = as_matrix(C)
    t = block
    m = C.rows // t
    for i in range(m):
        allowed = {(i + s) % m for s in range(k + 1)}
        for j in range(m):
            if j in allowed:
                continue
            if any(C.entries[i * t + a][j * t + b] for a in range(t) for b in range(t)):
                return False
    return True


def block(C, i: int, j: int, t: int) -> IntMatrix:
    C = as_matrix(C)
    return C.submatrix(range(i * t, (i + 1) * t), range(j * t, (j + 1) * t))
