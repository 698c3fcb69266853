"""Finite abelian groups as products of cyclic groups.

A group is stored as the ordered tuple of its cyclic orders ``(n_1, ..., n_t)``.
:func:`normalize_group` produces the invariant-factor form (``n_{i+1} | n_i``);
other orderings are allowed because some constructions (the product group of
the joined system, ``G^m`` for non-cyclic ``G``) are naturally indexed that way.
Orders of 1 are accepted only for internal trivial factors.

>>> G = normalize_group([4, 6])
>>> G.orders
(12, 2)
>>> G.element([11, 1]) + G.element([1, 1])
GroupElement(coords=(0, 0), orders=(12, 2))
>>> [e.coords for e in kernel_of_mult(2, normalize_group([6]))]
[(0,), (3,)]
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from math import gcd, lcm, prod
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DEFAULT_CAP, CapExceededError, GroupMismatchError, InvalidGroupError


@dataclass(frozen=True)
class FiniteAbelianGroup:
    orders: tuple[int, ...]

    def __post_init__(self) -> None:
        orders = tuple(int(n) for n in self.orders)
        for n in orders:
            if n < 1:
                raise InvalidGroupError(f"cyclic order must be positive, got {n}")
        object.__setattr__(self, "orders", orders)

    @property
    def rank(self) -> int:
        return len(self.orders)

    t = rank

    @property
    def order(self) -> int:
        return prod(self.orders)

    @property
    def exponent(self) -> int:
        return reduce(lcm, self.orders, 1)

    @property
    def is_canonical(self) -> bool:
        return all(n >= 2 for n in self.orders) and all(
            self.orders[i] % self.orders[i + 1] == 0 for i in range(self.rank - 1)
        )

    @property
    def is_homocyclic(self) -> bool:
        return len(set(self.orders)) <= 1

    def element(self, coords: Iterable[int]) -> "GroupElement":
        coords = tuple(coords)
        if len(coords) != self.rank:
            raise GroupMismatchError(f"expected {self.rank} coordinates, got {len(coords)}")
        return GroupElement(tuple(int(c) % n for c, n in zip(coords, self.orders)), self.orders)

    def zero(self) -> "GroupElement":
        return GroupElement((0,) * self.rank, self.orders)

    def reduce(self, coords: Sequence[int]) -> tuple[int, ...]:
        return tuple(int(c) % n for c, n in zip(coords, self.orders))

    def strides(self) -> tuple[int, ...]:
        """Mixed-radix weights: ``index(x) = sum(x_i * strides_i)`` is lexicographic."""
        out, w = [], 1
        for n in reversed(self.orders):
            out.append(w)
            w *= n
        return tuple(reversed(out))

    def index(self, coords: Sequence[int]) -> int:
        return sum(int(c) * w for c, w in zip(coords, self.strides()))

    def from_index(self, idx: int) -> "GroupElement":
        coords = []
        for n in reversed(self.orders):
            idx, r = divmod(idx, n)
            coords.append(r)
        return GroupElement(tuple(reversed(coords)), self.orders)

    def all_coords(self) -> np.ndarray:
        """Every element as a row of an ``(|G|, t)`` array, lexicographic."""
        return index_grid(self.orders)

    def power(self, m: int) -> "FiniteAbelianGroup":
        return FiniteAbelianGroup(self.orders * m)

    def to_json(self) -> dict:
        return {"orders": list(self.orders)}

    @classmethod
    def from_json(cls, doc: dict) -> "FiniteAbelianGroup":
        return cls(tuple(int(n) for n in doc["orders"]))

    def __str__(self) -> str:
        if not self.orders:
            return "0"
        return "x".join(f"Z{n}" for n in self.orders)


@dataclass(frozen=True)
class GroupElement:
    coords: tuple[int, ...]
    orders: tuple[int, ...]

    @property
    def group(self) -> FiniteAbelianGroup:
        return FiniteAbelianGroup(self.orders)

    def _check(self, other: "GroupElement") -> None:
        if self.orders != other.orders:
            raise GroupMismatchError(f"elements of {self.orders} and {other.orders}")

    def __add__(self, other: "GroupElement") -> "GroupElement":
        return add(self, other)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return add(self, neg(other))

    def __neg__(self) -> "GroupElement":
        return neg(self)

    def __rmul__(self, c: int) -> "GroupElement":
        return scalar_mul(c, self)

    def is_zero(self) -> bool:
        return not any(self.coords)

    def to_json(self) -> dict:
        return {"coords": list(self.coords)}


def add(a: GroupElement, b: GroupElement) -> GroupElement:
    a._check(b)
    return GroupElement(tuple((x + y) % n for x, y, n in zip(a.coords, b.coords, a.orders)), a.orders)


def neg(a: GroupElement) -> GroupElement:
    return GroupElement(tuple((-x) % n for x, n in zip(a.coords, a.orders)), a.orders)


def scalar_mul(c: int, a: GroupElement) -> GroupElement:
    return GroupElement(tuple((c * x) % n for x, n in zip(a.coords, a.orders)), a.orders)


def normalize_group(orders: Sequence[int]) -> FiniteAbelianGroup:
    """Invariant-factor form via repeated gcd/lcm merging.

    Replacing a pair ``(a, b)`` by ``(lcm, gcd)`` preserves the isomorphism type
    (``Z_a x Z_b ~ Z_lcm x Z_gcd``); doing it for every pair sorts the orders
    into a divisibility chain. Trivial factors produced by the merge are dropped.
    """
    vals = []
    for n in orders:
        if isinstance(n, bool) or int(n) != n or int(n) < 2:
            raise InvalidGroupError(f"cyclic orders must be integers >= 2, got {n!r}")
        vals.append(int(n))
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            a, b = vals[i], vals[j]
            vals[i], vals[j] = lcm(a, b), gcd(a, b)
    return FiniteAbelianGroup(tuple(v for v in vals if v > 1))


def cyclic(n: int) -> FiniteAbelianGroup:
    return normalize_group([n])


def kernel_of_mult(d: int, G: FiniteAbelianGroup) -> list[GroupElement]:
    """``P_d(G) = {x : d x = 0}``, lexicographically sorted."""
    if d < 0:
        raise ValueError("d must be non-negative")
    axes = []
    for n in G.orders:
        g = gcd(d, n)  # gcd(0, n) = n: everything is killed by 0
        step = n // g
        axes.append(range(0, n, step))
    return [GroupElement(c, G.orders) for c in itertools.product(*axes)]


@dataclass(frozen=True)
class CoordinateReduction:
    """The surjection ``Z_N^t -> prod Z_{n_i}`` reducing coordinate ``i`` mod ``n_i``."""

    source: FiniteAbelianGroup
    target: FiniteAbelianGroup

    def __call__(self, a: GroupElement) -> GroupElement:
        return self.target.element(a.coords)

    def fiber(self, x: GroupElement) -> list[GroupElement]:
        axes = [range(c, N, n) for c, N, n in zip(x.coords, self.source.orders, self.target.orders)]
        return [GroupElement(c, self.source.orders) for c in itertools.product(*axes)]


def quotient_lift(G: FiniteAbelianGroup) -> tuple[FiniteAbelianGroup, CoordinateReduction, int]:
    """Homocyclic cover ``G' = Z_N^t`` of ``G`` with ``N`` its exponent.

    ``tau`` reduces coordinates; every fiber has ``beta = |G'| / |G|`` elements.
    """
    N = G.exponent
    Gp = FiniteAbelianGroup((N,) * G.rank)
    return Gp, CoordinateReduction(Gp, G), Gp.order // G.order


def enumerate_elements(G: FiniteAbelianGroup, cap: int = DEFAULT_CAP) -> Iterator[GroupElement]:
    if G.order > cap:
        raise CapExceededError(f"|G| = {G.order} exceeds cap {cap}")
    for c in itertools.product(*(range(n) for n in G.orders)):
        yield GroupElement(c, G.orders)


def element_order(x: GroupElement) -> int:
    return reduce(lcm, (n // gcd(c, n) for c, n in zip(x.coords, x.orders)), 1)


def order_census(G: FiniteAbelianGroup) -> dict[int, int]:
    """Number of elements of each order; an isomorphism invariant (complete for abelian groups)."""
    out: dict[int, int] = {}
    for x in enumerate_elements(G):
        o = element_order(x)
        out[o] = out.get(o, 0) + 1
    return out


def index_grid(orders: Sequence[int], start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start..stop`` of the lexicographic listing of ``prod Z_{n_i}`` as an int64 array."""
    total = prod(orders)
    stop = total if stop is None else min(stop, total)
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, len(orders)), dtype=np.int64)
    for j in range(len(orders) - 1, -1, -1):
        idx, out[:, j] = np.divmod(idx, orders[j])
    return out


def is_subgroup(elems: Sequence[GroupElement]) -> bool:
    s = set(elems)
    if not s:
        return False
    if next(iter(s)).group.zero() not in s:
        return False
    return all((a - b) in s for a in s for b in s)


def is_coset(elems: Sequence[GroupElement]) -> bool:
    elems = list(elems)
    if not elems:
        return False
    base = elems[0]
    return is_subgroup([e - base for e in elems])
