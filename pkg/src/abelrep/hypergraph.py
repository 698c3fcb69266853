"""Colored hypergraph representations of configuration systems.

A representation of a system ``(A, G)`` is a pair ``(K, H)`` of ``s``-uniform,
``m``-colored hypergraphs whose colored copies of ``H`` inside ``K`` encode
solutions: the labels of a copy's edges, read in color order, form a solution,
and every ``(solution, q)`` class is hit by the same number of copies
(properties RP1--RP4, checked exhaustively by :func:`verify_rp_properties`).

Copies are vertex maps ``f: V(H) -> V(K)`` (tuples indexed by the vertices of
``H``). Edge keys are ``(color, verts)`` with ``verts`` sorted unless the
hypergraph is directed, so they survive taking sub-hypergraphs.

The ``r_q`` part of a certificate is a rule, not a table of copies: every
transferred certificate keeps its parent and a small step description
(``same``, ``fiber`` index, ``quotient`` class), and ``r_q(f)`` is evaluated by
walking the chain on the same vertex map.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import prod
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import DEFAULT_CAP, CapExceededError, InvalidInputError, PreconditionError
from .groups import FiniteAbelianGroup
from .homsystem import HomSystem, enumerate_solutions, parameterized_form
from .intmatrix import IntMatrix, as_matrix, build_band_annihilator

__all__ = [
    "Edge",
    "ColoredHypergraph",
    "build_cycle_template_H",
    "build_K_from_circular",
    "enumerate_copies",
    "HomDomain",
    "CopyDomain",
    "RepresentationCertificate",
    "RPReport",
    "verify_rp_properties",
    "identity_representation",
    "transfer_1_auto",
    "transfer_mu_auto",
    "transfer_mu_equiv_1",
    "transfer_mu_equiv_2",
    "restrict_to_domains",
    "greedy_edge_cover",
    "RemovalResult",
    "removal_deletion",
    "certificate_from_json",
]


def _freeze(x):
    """JSON lists back to (nested) tuples so labels stay hashable."""
    if isinstance(x, (list, tuple)):
        return tuple(_freeze(v) for v in x)
    return x


def _thaw(x):
    if isinstance(x, tuple):
        return [_thaw(v) for v in x]
    return x


# ============================================================================ hypergraphs


@dataclass(frozen=True)
class Edge:
    color: int  # 1-based
    verts: tuple[int, ...]
    label: Any = None


class ColoredHypergraph:
    """An ``s``-uniform hypergraph with colored (optionally labeled, directed) edges.

    ``clusters`` partitions the vertex ids ``0..V-1``; partite copy search
    sends vertex ``v`` of ``H`` into cluster ``v`` of ``K``. At most one edge
    per ``(color, vertex set)`` is allowed.
    """

    def __init__(
        self,
        clusters: Sequence[Sequence[int]],
        uniformity: int,
        edges: Iterable[Edge],
        directed: bool = False,
    ) -> None:
        self.clusters = tuple(tuple(int(v) for v in c) for c in clusters)
        flat = [v for c in self.clusters for v in c]
        if sorted(flat) != list(range(len(flat))):
            raise InvalidInputError("clusters must partition 0..V-1")
        self.n_vertices = len(flat)
        self.uniformity = int(uniformity)
        self.directed = bool(directed)
        self.edges = tuple(edges)
        self._index: dict[tuple, int] = {}
        for i, e in enumerate(self.edges):
            if e.color < 1:
                raise InvalidInputError(f"edge color {e.color} must be >= 1")
            if len(e.verts) != self.uniformity or len(set(e.verts)) != len(e.verts):
                raise InvalidInputError(f"edge {e.verts} is not a set of {self.uniformity} vertices")
            if not all(0 <= v < self.n_vertices for v in e.verts):
                raise InvalidInputError(f"edge {e.verts} leaves the vertex set")
            key = self.edge_key(e)
            if key in self._index:
                raise InvalidInputError(f"duplicate edge {key}")
            self._index[key] = i
        self._nbr: dict[tuple[int, int], frozenset[int]] | None = None

    # ------------------------------------------------------------------ keys and lookups
    def key(self, verts: Sequence[int]) -> tuple[int, ...]:
        return tuple(verts) if self.directed else tuple(sorted(verts))

    def edge_key(self, e: Edge) -> tuple:
        return (e.color, self.key(e.verts))

    @property
    def colors(self) -> tuple[int, ...]:
        return tuple(sorted({e.color for e in self.edges}))

    def has_edge(self, color: int, verts: Sequence[int]) -> bool:
        return (color, self.key(verts)) in self._index

    def find(self, color: int, verts: Sequence[int]) -> Edge | None:
        i = self._index.get((color, self.key(verts)))
        return None if i is None else self.edges[i]

    def label(self, color: int, verts: Sequence[int]):
        i = self._index.get((color, self.key(verts)))
        if i is None:
            raise KeyError((color, tuple(verts)))
        return self.edges[i].label

    def edges_of_color(self, color: int) -> list[Edge]:
        return [e for e in self.edges if e.color == color]

    def neighbours(self, color: int, v: int) -> frozenset[int]:
        """Vertices sharing a ``color`` edge with ``v`` (either orientation)."""
        if self._nbr is None:
            acc: dict[tuple[int, int], set[int]] = defaultdict(set)
            for e in self.edges:
                for v0 in e.verts:
                    acc[(e.color, v0)].update(e.verts)
            self._nbr = {k: frozenset(s) for k, s in acc.items()}
        return self._nbr.get((color, v), frozenset())

    # ------------------------------------------------------------------ derived graphs
    def with_edges(self, edges: Iterable[Edge]) -> "ColoredHypergraph":
        return ColoredHypergraph(self.clusters, self.uniformity, edges, self.directed)

    def subgraph(self, keep) -> "ColoredHypergraph":
        """Same vertices, only the edges ``e`` with ``keep(e)`` true."""
        return self.with_edges(e for e in self.edges if keep(e))

    def without(self, keys: Iterable[tuple]) -> "ColoredHypergraph":
        drop = {(c, self.key(v)) for c, v in keys}
        return self.subgraph(lambda e: self.edge_key(e) not in drop)

    # ------------------------------------------------------------------ serialization
    def to_json(self) -> dict:
        doc = {
            "clusters": [list(c) for c in self.clusters],
            "uniformity": self.uniformity,
            "edges": [
                {"color": e.color, "verts": list(e.verts), "label": _thaw(e.label)} for e in self.edges
            ],
        }
        if self.directed:
            doc["directed"] = True
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ColoredHypergraph":
        edges = [Edge(int(e["color"]), tuple(int(v) for v in e["verts"]), _freeze(e.get("label"))) for e in doc["edges"]]
        return cls(doc["clusters"], int(doc["uniformity"]), edges, bool(doc.get("directed", False)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ColoredHypergraph):
            return NotImplemented
        return (
            self.clusters == other.clusters
            and self.uniformity == other.uniformity
            and self.directed == other.directed
            and sorted(self._index) == sorted(other._index)
            and all(self.edges[i].label == other.edges[other._index[k]].label for k, i in self._index.items())
        )

    def __repr__(self) -> str:
        return f"ColoredHypergraph(V={self.n_vertices}, s={self.uniformity}, E={len(self.edges)}, colors={self.colors})"


def build_cycle_template_H(m: int, k: int) -> ColoredHypergraph:
    """``m`` vertices, edge ``e_i = {i, ..., i+k}`` (cyclic) colored ``i+1``."""
    if k < 1 or m < k + 2:
        raise InvalidInputError(f"cycle template needs m >= k+2 (got m={m}, k={k})")
    edges = [Edge(i + 1, tuple((i + j) % m for j in range(k + 1))) for i in range(m)]
    return ColoredHypergraph([[v] for v in range(m)], k + 1, edges)


# ============================================================================ copy search


def _search_order(H: ColoredHypergraph) -> list[int]:
    """Vertex 0 first, then greedily the vertex with most edges into the placed set."""
    h = H.n_vertices
    adj: dict[int, Counter] = {v: Counter() for v in range(h)}
    for e in H.edges:
        for a in e.verts:
            for b in e.verts:
                if a != b:
                    adj[a][b] += 1
    order, placed = [], set()
    while len(order) < h:
        rest = [v for v in range(h) if v not in placed]
        v = max(rest, key=lambda u: (sum(adj[u][w] for w in placed), -u)) if placed else 0
        order.append(v)
        placed.add(v)
    return order


def enumerate_copies(
    H: ColoredHypergraph, K: ColoredHypergraph, cap: int = DEFAULT_CAP, partite: bool = False
) -> list[tuple[int, ...]]:
    """All color- (and orientation-) preserving injective homomorphisms ``H -> K``.

    With ``partite`` the vertex ``v`` of ``H`` may only go to ``K.clusters[v]``.

    Backtracking over ``H``'s vertices; a vertex with an already-placed
    neighbour only tries vertices adjacent (in the same color) to that
    neighbour's image, and every ``H`` edge is checked as soon as its last
    vertex is placed. Output is sorted lexicographically.
    """
    if H.uniformity != K.uniformity or H.directed != K.directed:
        raise InvalidInputError("H and K must have the same uniformity and orientation")
    h = H.n_vertices
    if h > K.n_vertices:
        return []
    order = _search_order(H)
    pos = {v: i for i, v in enumerate(order)}
    closing: list[list[Edge]] = [[] for _ in range(h)]
    anchors: list[list[tuple[int, int]]] = [[] for _ in range(h)]
    for e in H.edges:
        last = max(pos[v] for v in e.verts)
        closing[last].append(e)
        for v in e.verts:
            for u in e.verts:
                if pos[u] < pos[v] and (e.color, u) not in anchors[pos[v]]:
                    anchors[pos[v]].append((e.color, u))
    everything = range(K.n_vertices)
    if partite:
        if len(K.clusters) != h:
            raise InvalidInputError(f"partite search needs {h} clusters in K, found {len(K.clusters)}")
        allowed = [frozenset(c) for c in K.clusters]
    f = [-1] * h
    used: set[int] = set()
    out: list[tuple[int, ...]] = []

    def rec(i: int) -> None:
        if i == h:
            out.append(tuple(f))
            if len(out) > cap:
                raise CapExceededError(f"more than {cap} copies")
            return
        v = order[i]
        if anchors[i]:
            sets = [K.neighbours(c, f[u]) for c, u in anchors[i]]
            cands = sorted(frozenset.intersection(*sets))
        else:
            cands = everything
        if partite:
            cands = [w for w in cands if w in allowed[v]]
        for w in cands:
            if w in used:
                continue
            f[v] = w
            if all(K.has_edge(e.color, [f[x] for x in e.verts]) for e in closing[i]):
                used.add(w)
                rec(i + 1)
                used.discard(w)
        f[v] = -1

    rec(0)
    out.sort()
    return out


# ============================================================================ represented systems


class HomDomain:
    """Solutions of a :class:`HomSystem`; labels are coordinate tuples in ``G``."""

    kind = "hom"

    def __init__(self, system: HomSystem) -> None:
        self.system = system

    @property
    def m(self) -> int:
        return self.system.m

    @property
    def group_order(self) -> int:
        return self.system.group.order

    def solutions(self, X=None, cap: int = DEFAULT_CAP) -> list[tuple]:
        return enumerate_solutions(self.system, X=X, cap=cap).tuples()

    def valid_label(self, lab) -> bool:
        orders = self.system.group.orders
        return isinstance(lab, tuple) and len(lab) == len(orders) and all(
            isinstance(c, int) and 0 <= c < n for c, n in zip(lab, orders)
        )

    def to_json(self) -> dict:
        return {"kind": self.kind, "system": self.system.to_json()}


class CopyDomain:
    """The system "edge tuples forming a copy of ``H0`` in ``K0``".

    Labels are edge keys of ``K0``. The ground set ``G`` is taken to have
    ``|V(K0)|^s`` elements, which makes ``c = lambda = 1``.
    """

    kind = "copies"

    def __init__(self, H0: ColoredHypergraph, K0: ColoredHypergraph) -> None:
        self.H0, self.K0 = H0, K0

    @property
    def m(self) -> int:
        return len(self.H0.edges)

    @property
    def group_order(self) -> int:
        return self.K0.n_vertices**self.K0.uniformity

    def edge_tuple(self, f: Sequence[int]) -> tuple:
        return tuple((e.color, self.K0.key([f[v] for v in e.verts])) for e in self.H0.edges)

    def solutions(self, X=None, cap: int = DEFAULT_CAP) -> list[tuple]:
        sols = {self.edge_tuple(f) for f in enumerate_copies(self.H0, self.K0, cap)}
        if X is not None:
            Xs = [None if x is None else {_freeze(v) for v in x} for x in X]
            sols = {s for s in sols if all(d is None or l in d for l, d in zip(s, Xs))}
        return sorted(sols)

    def valid_label(self, lab) -> bool:
        return isinstance(lab, tuple) and len(lab) == 2 and self.K0.has_edge(lab[0], lab[1])

    def to_json(self) -> dict:
        return {"kind": self.kind, "H0": self.H0.to_json(), "K0": self.K0.to_json()}


def _domain_from_json(doc: dict):
    if doc["kind"] == "hom":
        return HomDomain(HomSystem.from_json(doc["system"]))
    if doc["kind"] == "copies":
        return CopyDomain(ColoredHypergraph.from_json(doc["H0"]), ColoredHypergraph.from_json(doc["K0"]))
    raise InvalidInputError(f"unknown domain kind {doc['kind']!r}")


# ============================================================================ certificates


@dataclass(frozen=True)
class RepresentationCertificate:
    """The data ``(K, H, gamma, l, r, Q, p, c, chi1, chi2)`` of a representation.

    ``H.edges[i]`` carries color ``i + 1``; labels live on ``K``'s edges.
    ``rule`` says how ``r_q`` is computed from ``parent`` (see module docs).
    ``lam`` is derived, never stored.
    """

    K: ColoredHypergraph
    H: ColoredHypergraph
    domain: Any
    gamma: tuple[Fraction, ...]
    Q: tuple
    p: Fraction
    c: Fraction
    chi1: int
    chi2: Fraction
    rule: tuple = ("base",)
    parent: "RepresentationCertificate | None" = None
    strong: bool = True
    partite: bool = False
    notes: tuple[str, ...] = ()
    report: "RPReport | None" = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma", tuple(Fraction(g) for g in self.gamma))
        object.__setattr__(self, "p", Fraction(self.p))
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "chi2", Fraction(self.chi2))
        object.__setattr__(self, "Q", tuple(_freeze(q) for q in self.Q))

    @property
    def m(self) -> int:
        return len(self.H.edges)

    @property
    def s(self) -> int:
        return self.H.uniformity

    @property
    def lam(self) -> Fraction:
        return self.c * Fraction(self.K.n_vertices**self.s, self.domain.group_order)

    @property
    def class_size(self) -> Fraction:
        return self.p * self.lam * prod(self.gamma, start=Fraction(1))

    def through_edge(self, i: int) -> Fraction:
        """Copies of one class through a color-``i+1`` edge (RP3)."""
        return self.p * prod(self.gamma, start=Fraction(1)) / self.gamma[i]

    # ------------------------------------------------------------------ r
    def r0(self, f: Sequence[int]) -> tuple:
        return tuple(self.K.label(e.color, [f[v] for v in e.verts]) for e in self.H.edges)

    def rq(self, f: Sequence[int]):
        kind = self.rule[0]
        if kind == "base":
            return ()
        q = self.parent.rq(f)
        if kind == "same":
            return q
        y = self.parent.r0(f)
        if kind == "fiber":
            return (q, self.rule[1][y])
        if kind == "quotient":
            rank, beta = self.rule[1], self.rule[2]
            return (q, tuple((rank[v] - rank[y[0]]) % beta for v in y[1:]))
        raise InvalidInputError(f"unknown r rule {kind!r}")

    def r(self, f: Sequence[int]) -> tuple:
        return self.r0(f), self.rq(f)

    # ------------------------------------------------------------------ serialization
    def to_json(self) -> dict:
        rule: list = [self.rule[0]]
        if self.rule[0] == "fiber":
            rule.append([[_thaw(y), i] for y, i in sorted(self.rule[1].items())])
        elif self.rule[0] == "quotient":
            rule.append([[_thaw(y), i] for y, i in sorted(self.rule[1].items())])
            rule.append(self.rule[2])
        return {
            "K": self.K.to_json(),
            "H": self.H.to_json(),
            "domain": self.domain.to_json(),
            "gamma": [str(g) for g in self.gamma],
            "Q": [_thaw(q) for q in self.Q],
            "p": str(self.p),
            "c": str(self.c),
            "lambda": str(self.lam),
            "chi1": self.chi1,
            "chi2": str(self.chi2),
            "rule": rule,
            "strong": self.strong,
            "partite": self.partite,
            "notes": list(self.notes),
            "parent": None if self.parent is None else self.parent.to_json(),
        }


def certificate_from_json(doc: dict) -> RepresentationCertificate:
    rule = doc.get("rule") or ["base"]
    if rule[0] in ("fiber", "quotient"):
        table = {_freeze(y): int(i) for y, i in rule[1]}
        rule_t = (rule[0], table) + ((int(rule[2]),) if rule[0] == "quotient" else ())
    else:
        rule_t = (rule[0],)
    parent = doc.get("parent")
    return RepresentationCertificate(
        K=ColoredHypergraph.from_json(doc["K"]),
        H=ColoredHypergraph.from_json(doc["H"]),
        domain=_domain_from_json(doc["domain"]),
        gamma=tuple(Fraction(g) for g in doc["gamma"]),
        Q=tuple(_freeze(q) for q in doc["Q"]),
        p=Fraction(doc["p"]),
        c=Fraction(doc["c"]),
        chi1=int(doc["chi1"]),
        chi2=Fraction(doc["chi2"]),
        rule=rule_t,
        parent=None if parent is None else certificate_from_json(parent),
        strong=bool(doc.get("strong", True)),
        partite=bool(doc.get("partite", False)),
        notes=tuple(doc.get("notes", ())),
    )


def _ordered_template(H: ColoredHypergraph) -> ColoredHypergraph:
    """``H`` with edges sorted by color, so that ``edges[i]`` is colored ``i+1``."""
    return H.with_edges(sorted(H.edges, key=lambda e: e.color))


# ============================================================================ construction from circular systems


def build_K_from_circular(
    sys: HomSystem, C: IntMatrix | None = None, cap: int = DEFAULT_CAP
) -> tuple[ColoredHypergraph, RepresentationCertificate]:
    """The strong 1-representation of a homogeneous block-circular ``(I | B)`` system.

    ``V(K) = [0, m) x G`` (vertex ``i |G| + index(g)``); for each ``i`` and
    ``g_i, ..., g_{i+k}`` there is one edge colored ``i+1`` on those vertices,
    labeled ``sum_j C_{ij} g_j``. The copies of the cycle template are the
    tuples ``(g_0, ..., g_{m-1})``, and ``r_0`` maps them to ``C g``.
    """
    G = sys.group
    if not G.is_homocyclic:
        raise PreconditionError("the circular construction needs a homocyclic group Z_n^t")
    if not sys.is_homogeneous():
        raise PreconditionError("the circular construction needs a homogeneous system")
    if not parameterized_form(sys):
        raise PreconditionError("system is not of the form (I | B)")
    n, t, k, m = G.orders[0], G.rank, sys.k, sys.m
    if m < k + 2:
        raise PreconditionError(f"the cycle template needs m >= k+2 (m={m}, k={k}); pad the system first")
    A = sys.matrix
    C = build_band_annihilator(A, t, n) if C is None else as_matrix(C)
    if C.shape != (m * t, m * t):
        raise InvalidInputError(f"annihilator has shape {C.shape}, expected {(m * t, m * t)}")
    if not (A @ C).is_zero():
        raise PreconditionError("A C != 0")
    H = build_cycle_template_H(m, k)
    order = G.order
    if m * order ** (k + 1) > cap:
        raise CapExceededError(f"K would have {m * order ** (k + 1)} edges (cap {cap})")
    coords = np.array(G.all_coords(), dtype=np.int64).reshape(order, t)
    Cm = np.array(C.entries, dtype=np.int64) % n
    tuples = np.array(list(itertools.product(range(order), repeat=k + 1)), dtype=np.int64)
    edges = []
    for i in range(m):
        cols = [(i + j) % m for j in range(k + 1)]
        lab = np.zeros((tuples.shape[0], t), dtype=np.int64)
        for j, q in enumerate(cols):
            blk = Cm[i * t : (i + 1) * t, q * t : (q + 1) * t]
            lab = (lab + coords[tuples[:, j]] @ blk.T) % n
        for row, l in zip(tuples, lab):
            verts = tuple(q * order + int(g) for q, g in zip(cols, row))
            edges.append(Edge(i + 1, verts, tuple(int(v) for v in l)))
    clusters = [list(range(i * order, (i + 1) * order)) for i in range(m)]
    K = ColoredHypergraph(clusters, k + 1, edges)
    c = Fraction(1, m ** (k + 1))
    cert = RepresentationCertificate(
        K=K,
        H=H,
        domain=HomDomain(sys),
        gamma=(Fraction(1),) * m,
        Q=((),),
        p=Fraction(1),
        c=c,
        chi1=m,
        chi2=c,
        partite=True,
        notes=("circular construction",),
    )
    return K, cert


def identity_representation(H0: ColoredHypergraph, K0: ColoredHypergraph) -> RepresentationCertificate:
    """``(K0, H0)`` representing "copies of ``H0`` in ``K0``" by itself.

    Each edge is labeled by its own key. ``p`` is the number of vertex maps
    giving the same edge tuple (automorphisms of ``H0`` fixing every edge).
    """
    cols = [e.color for e in H0.edges]
    if sorted(cols) != list(range(1, len(cols) + 1)):
        raise InvalidInputError("H0 must have exactly one edge of each color 1..m")
    H = _ordered_template(H0)
    K = K0.with_edges(Edge(e.color, e.verts, K0.edge_key(e)) for e in K0.edges)
    keys = [H.edge_key(e) for e in H.edges]
    p = sum(
        1
        for f in enumerate_copies(H, H)
        if all(H.edge_key(Edge(e.color, tuple(f[v] for v in e.verts))) == kk for e, kk in zip(H.edges, keys))
    )
    m = len(H.edges)
    return RepresentationCertificate(
        K=K,
        H=H,
        domain=CopyDomain(H, K0),
        gamma=(Fraction(1),) * m,
        Q=((),),
        p=Fraction(p),
        c=Fraction(1),
        chi1=H.n_vertices,
        chi2=Fraction(1),
        notes=("identity representation",),
    )


# ============================================================================ verification


@dataclass
class RPReport:
    rp1: bool
    rp2: bool
    rp3: bool
    rp4: bool | None
    copies: int
    classes: int
    expected_classes: int
    class_size_declared: Fraction
    class_sizes: dict = field(default_factory=dict)  # measured size -> number of classes
    lambda_declared: Fraction = Fraction(0)
    lambda_measured: Fraction | None = None
    through_edge: dict = field(default_factory=dict)  # color -> sorted measured counts
    counterexamples: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.rp1 and self.rp2 and self.rp3 and self.rp4 is not False

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "RP1": self.rp1,
            "RP2": self.rp2,
            "RP3": self.rp3,
            "RP4": self.rp4,
            "copies": self.copies,
            "classes": self.classes,
            "expected_classes": self.expected_classes,
            "class_size_declared": str(self.class_size_declared),
            "class_sizes": {str(k): v for k, v in sorted(self.class_sizes.items())},
            "lambda_declared": str(self.lambda_declared),
            "lambda_measured": None if self.lambda_measured is None else str(self.lambda_measured),
            "through_edge": {str(c): v for c, v in sorted(self.through_edge.items())},
            "counterexamples": self.counterexamples[:20],
        }


def _check_rp1(cert: RepresentationCertificate, bad: list[str]) -> bool:
    K, H, m, s = cert.K, cert.H, cert.m, cert.s
    ok = True
    if K.uniformity != s or s < 2:
        bad.append(f"RP1: uniformity K={K.uniformity}, H={s} (need equal and >= 2)")
        ok = False
    if [e.color for e in H.edges] != list(range(1, m + 1)):
        bad.append("RP1: H must have one edge colored i for each i in 1..m")
        ok = False
    if len({H.edge_key(e)[1] for e in H.edges}) != m:
        bad.append("RP1: the edges of H are not distinct")
        ok = False
    if not cert.chi1 >= H.n_vertices > s:
        bad.append(f"RP1: need chi1 >= h > s, got chi1={cert.chi1}, h={H.n_vertices}, s={s}")
        ok = False
    if any(not 1 <= e.color <= m for e in K.edges):
        bad.append("RP1: K uses a color outside 1..m")
        ok = False
    wrong = [e for e in K.edges if e.label is None or not cert.domain.valid_label(e.label)]
    if wrong:
        bad.append(f"RP1: {len(wrong)} edges of K lack a valid label, e.g. {wrong[0]}")
        ok = False
    return ok


def verify_rp_properties(
    cert: RepresentationCertificate,
    strong: bool | None = None,
    cap: int = DEFAULT_CAP,
    per_class_c: bool = False,
) -> RPReport:
    """Exhaustive check of RP1--RP3 (and RP4 when ``strong``).

    ``per_class_c`` relaxes RP2's size equality to ``c_{x,q} >= chi2`` per class.
    """
    strong = cert.strong if strong is None else strong
    bad: list[str] = []
    rp1 = _check_rp1(cert, bad)
    m = cert.m
    sols = cert.domain.solutions(cap=cap)
    sol_set = set(sols)
    Q = set(cert.Q)
    copies = enumerate_copies(cert.H, cert.K, cap, partite=cert.partite)

    classes: dict[tuple, list] = defaultdict(list)
    domain_ok = True
    for f in copies:
        try:
            x, q = cert.r(f)
        except KeyError as exc:
            bad.append(f"RP2: copy {f} does not extend to the parent's template ({exc})")
            domain_ok = False
            continue
        if x not in sol_set:
            bad.append(f"RP2: copy {f} has labels {x}, not a solution")
            domain_ok = False
            continue
        if q not in Q:
            bad.append(f"RP2: copy {f} maps to q={q} outside Q")
            domain_ok = False
            continue
        classes[(x, q)].append(f)

    declared = cert.class_size
    sizes = Counter(len(v) for v in classes.values())
    expected = len(sol_set) * len(Q)
    surjective = len(classes) == expected
    if not surjective:
        bad.append(f"RP2: r hits {len(classes)} of {expected} classes")
    if per_class_c:
        base = cert.p * prod(cert.gamma, start=Fraction(1)) * Fraction(cert.K.n_vertices**cert.s, cert.domain.group_order)
        sizes_ok = all(Fraction(n) / base >= cert.chi2 for n in sizes)
    else:
        sizes_ok = set(sizes) <= {declared}
    if not sizes_ok:
        bad.append(f"RP2: class sizes {dict(sizes)} vs declared {declared}")
    p_ok = cert.p.denominator == 1 and cert.p > 0
    if not p_ok:
        bad.append(f"RP2: p={cert.p} is not a positive integer")
    rp2 = domain_ok and surjective and sizes_ok and p_ok

    # RP3 / RP4
    through: dict[int, set] = defaultdict(set)
    rp3 = True
    rp4 = True if strong else None
    label_count = Counter((e.color, e.label) for e in cert.K.edges)
    H_edges = cert.H.edges
    for (x, q), fs in classes.items():
        per_edge: Counter = Counter()
        for f in fs:
            for i, e in enumerate(H_edges):
                per_edge[(i, cert.K.key([f[v] for v in e.verts]))] += 1
        used = Counter(i for i, _ in per_edge)
        for (i, key), n in per_edge.items():
            through[i + 1].add(n)
            if n != cert.through_edge(i):
                if rp3:
                    bad.append(f"RP3: edge {(i + 1, key)} in class {(x, q)} lies in {n} copies, expected {cert.through_edge(i)}")
                rp3 = False
        if strong:
            for i in range(m):
                if used[i] != label_count[(i + 1, x[i])]:
                    if rp4:
                        bad.append(
                            f"RP4: class {(x, q)} uses {used[i]} of the {label_count[(i + 1, x[i])]} edges colored {i + 1} labeled {x[i]}"
                        )
                    rp4 = False
    lam_measured = None
    if len(sizes) == 1:
        (n,) = sizes
        lam_measured = Fraction(n) / (cert.p * prod(cert.gamma, start=Fraction(1)))
    return RPReport(
        rp1=rp1,
        rp2=rp2,
        rp3=rp3,
        rp4=rp4,
        copies=len(copies),
        classes=len(classes),
        expected_classes=expected,
        class_size_declared=declared,
        class_sizes=dict(sizes),
        lambda_declared=cert.lam,
        lambda_measured=lam_measured,
        through_edge={c: sorted(v) for c, v in through.items()},
        counterexamples=bad,
    )


# ============================================================================ transfers


def _hom_parent(cert: RepresentationCertificate, emap) -> HomSystem:
    if not isinstance(cert.domain, HomDomain):
        raise PreconditionError("transfers need a certificate for a homomorphism system")
    sys2 = cert.domain.system
    if emap.source != sys2.group:
        raise InvalidInputError("map source group differs from the certificate's group")
    if emap.sigma and max(emap.sigma) >= sys2.m:
        raise InvalidInputError("map refers to a variable the source system does not have")
    return sys2


def _repaint(cert: RepresentationCertificate, emap) -> tuple[ColoredHypergraph, ColoredHypergraph]:
    """Keep colors ``sigma(i)+1`` renamed ``i+1``; push labels through ``phi_i``."""
    Hs, edges = [], []
    for i, (s, aff) in enumerate(zip(emap.sigma, emap.affines)):
        he = cert.H.edges[s]
        Hs.append(Edge(i + 1, he.verts))
        old = cert.K.edges_of_color(s + 1)
        if not old:
            continue
        labs = aff.apply(np.array([e.label for e in old], dtype=np.int64), emap.target.orders)
        edges.extend(Edge(i + 1, e.verts, tuple(int(v) for v in l)) for e, l in zip(old, labs))
    covered = {v for e in Hs for v in e.verts}
    if covered != set(range(cert.H.n_vertices)):
        missing = sorted(set(range(cert.H.n_vertices)) - covered)
        raise PreconditionError(f"the kept edges of H do not cover vertices {missing}")
    return cert.K.with_edges(edges), cert.H.with_edges(Hs)


def _finish(cert: RepresentationCertificate, verify: bool, cap: int) -> RepresentationCertificate:
    if not verify:
        return cert
    return replace(cert, report=verify_rp_properties(cert, cap=cap))


def transfer_1_auto(cert, emap, sys1: HomSystem, verify: bool = True, cap: int = DEFAULT_CAP) -> RepresentationCertificate:
    """Representation of ``sys1`` from one of ``sys2`` along a 1-to-1 map."""
    sys2 = _hom_parent(cert, emap)
    if emap.mu != 1 or emap.m1 != sys2.m:
        raise PreconditionError("a 1-auto map is a bijection on all variables")
    K, H = _repaint(cert, emap)
    return _finish(
        RepresentationCertificate(
            K=K,
            H=H,
            domain=HomDomain(sys1),
            gamma=tuple(cert.gamma[s] for s in emap.sigma),
            Q=cert.Q,
            p=cert.p,
            c=cert.c,
            chi1=cert.chi1,
            chi2=cert.chi2,
            rule=("same",),
            parent=cert,
            strong=cert.strong,
            partite=cert.partite,
            notes=("1-auto transfer",),
        ),
        verify,
        cap,
    )


def _fiber_ranks(emap, sys1: HomSystem, sys2: HomSystem, cap: int) -> tuple[dict, Counter]:
    """Lexicographic rank of each solution of ``sys2`` inside its fiber."""
    sol = enumerate_solutions(sys2, cap=cap)
    img = emap.apply(sol.data)
    if img.shape[0] and not sys1.satisfied(img).all():
        raise PreconditionError("the map does not land in the target's solutions")
    seen: Counter = Counter()
    ranks = {}
    for y, x in zip(sol.tuples(), map(tuple, img.tolist())):
        ranks[y] = seen[x]
        seen[x] += 1
    return ranks, seen


def transfer_mu_auto(cert, emap, sys1: HomSystem, verify: bool = True, cap: int = DEFAULT_CAP) -> RepresentationCertificate:
    """Drop variables along a ``mu``-to-1 projection; ``Q`` gains the fiber index."""
    sys2 = _hom_parent(cert, emap)
    ranks, fibers = _fiber_ranks(emap, sys1, sys2, cap)
    n1 = len(enumerate_solutions(sys1, cap=cap))
    if len(fibers) != n1 or set(fibers.values()) != {emap.mu}:
        raise PreconditionError(f"fibers are not all of size mu={emap.mu}: {sorted(set(fibers.values()))}")
    K, H = _repaint(cert, emap)
    dropped = [j for j in range(sys2.m) if j not in emap.sigma]
    return _finish(
        RepresentationCertificate(
            K=K,
            H=H,
            domain=HomDomain(sys1),
            gamma=tuple(cert.gamma[s] for s in emap.sigma),
            Q=tuple((q, j) for q in cert.Q for j in range(emap.mu)),
            p=cert.p * prod((cert.gamma[j] for j in dropped), start=Fraction(1)),
            c=cert.c,
            chi1=cert.chi1,
            chi2=cert.chi2,
            rule=("fiber", ranks),
            parent=cert,
            strong=cert.strong,
            partite=cert.partite,
            notes=("mu-auto transfer",),
        ),
        verify,
        cap,
    )


def transfer_mu_equiv_1(cert, emap, sys1: HomSystem, verify: bool = True, cap: int = DEFAULT_CAP) -> RepresentationCertificate:
    """Push every label through one surjection ``phi_1: G2 -> G1`` with product fibers."""
    sys2 = _hom_parent(cert, emap)
    m = sys2.m
    if tuple(emap.sigma) != tuple(range(m)) or any(a != emap.affines[0] for a in emap.affines):
        raise PreconditionError("mu-equiv-1 needs sigma = id and one map phi_1 for every coordinate")
    G1, G2 = emap.target, emap.source
    elems = np.array(G2.all_coords(), dtype=np.int64).reshape(G2.order, G2.rank)
    img = emap.affines[0].apply(elems, G1.orders)
    seen: Counter = Counter()
    rank = {}
    for g, x in zip(map(tuple, elems.tolist()), map(tuple, img.tolist())):
        rank[g] = seen[x]
        seen[x] += 1
    beta = G2.order // G1.order
    if len(seen) != G1.order or set(seen.values()) != {beta}:
        raise PreconditionError("phi_1 is not an equipartitioning surjection")
    n1, n2 = len(enumerate_solutions(sys1, cap=cap)), len(enumerate_solutions(sys2, cap=cap))
    if n2 != n1 * beta**m:
        raise PreconditionError(f"fibers are not full products: |S2|={n2} != |S1| beta^m = {n1 * beta**m}")
    K, H = _repaint(cert, emap)
    return _finish(
        RepresentationCertificate(
            K=K,
            H=H,
            domain=HomDomain(sys1),
            gamma=cert.gamma,
            Q=tuple((q, cls) for q in cert.Q for cls in itertools.product(range(beta), repeat=m - 1)),
            p=cert.p,
            c=cert.c,
            chi1=cert.chi1,
            chi2=cert.chi2,
            rule=("quotient", rank, beta),
            parent=cert,
            strong=cert.strong,
            partite=cert.partite,
            notes=("mu-equiv-1 transfer",),
        ),
        verify,
        cap,
    )


def _projection_sizes(sys: HomSystem, cap: int) -> list[int]:
    sol = enumerate_solutions(sys, cap=cap)
    return [int(np.unique(sol.var_ids(i)).size) for i in range(sys.m)]


def transfer_mu_equiv_2(cert, emap, sys1: HomSystem, verify: bool = True, cap: int = DEFAULT_CAP) -> RepresentationCertificate:
    """General ``mu``-to-1 map with constant per-coordinate fibers.

    ``gamma_i = gamma'_{sigma(i)} |S_{sigma(i)}(sys2)| / |S_i(sys1)| * |G1| / |G2|`` and
    ``p = mu p' (|G2|/|G1|)^(m1-1) prod_{j not in sigma} gamma'_j prod_i |S_i(sys1)|/|S_{sigma(i)}(sys2)|``.
    """
    from .pipeline import verify_equivalence

    sys2 = _hom_parent(cert, emap)
    if not cert.strong:
        raise PreconditionError("mu-equiv-2 transfer needs a strong representation")
    rep = verify_equivalence(emap, sys1, sys2, cap=cap, constancy=True)
    if rep.mode != "exhaustive" or not rep.ok:
        raise PreconditionError(f"map is not a certified mu-to-1 surjection: {rep.violations}")
    if not rep.constancy_ok:
        i = next(i for i, c in enumerate(rep.coordinate_constant) if c is not True)
        raise PreconditionError(f"fiber counts are not constant along coordinate {i + 1}")
    s1, s2 = _projection_sizes(sys1, cap), _projection_sizes(sys2, cap)
    g1, g2 = emap.target.order, emap.source.order
    m1 = emap.m1
    gamma = tuple(cert.gamma[s] * Fraction(s2[s], s1[i]) * Fraction(g1, g2) for i, s in enumerate(emap.sigma))
    dropped = [j for j in range(sys2.m) if j not in emap.sigma]
    p = (
        emap.mu
        * cert.p
        * Fraction(g2, g1) ** (m1 - 1)
        * prod((cert.gamma[j] for j in dropped), start=Fraction(1))
        * prod((Fraction(s1[i], s2[s]) for i, s in enumerate(emap.sigma)), start=Fraction(1))
    )
    K, H = _repaint(cert, emap)
    return _finish(
        RepresentationCertificate(
            K=K,
            H=H,
            domain=HomDomain(sys1),
            gamma=gamma,
            Q=cert.Q,
            p=p,
            c=cert.c,
            chi1=cert.chi1,
            chi2=cert.chi2,
            rule=("same",),
            parent=cert,
            strong=True,
            partite=cert.partite,
            notes=("mu-equiv-2 transfer",),
        ),
        verify,
        cap,
    )


# ============================================================================ deletion


def _domain_sets(X, m: int) -> list[set | None]:
    if X is None:
        return [None] * m
    if len(X) != m:
        raise InvalidInputError(f"{len(X)} domains for {m} variables")
    return [None if x is None else {_freeze(v) if isinstance(v, (list, tuple)) else (v,) for v in x} for x in X]


def restrict_to_domains(K: ColoredHypergraph, X) -> ColoredHypergraph:
    """``K_X``: keep the edges colored ``i`` whose label lies in ``X_i``.

    The copies of ``H`` in ``K_X`` are exactly the copies whose labels form a
    solution inside ``X``.
    """
    m = max(K.colors, default=0)
    sets = _domain_sets(X, m) if X is not None else [None] * m
    return K.subgraph(lambda e: sets[e.color - 1] is None or e.label in sets[e.color - 1])


def greedy_edge_cover(
    H: ColoredHypergraph, K_X: ColoredHypergraph, cap: int = DEFAULT_CAP, partite: bool = False
) -> list[tuple]:
    """Edge keys hitting every copy of ``H`` in ``K_X`` (greedy; no optimality claim)."""
    copies = enumerate_copies(H, K_X, cap, partite)
    if copies and not H.edges:
        raise PreconditionError("H has no edges, so no edge set can destroy its copies")
    sets = [{(e.color, K_X.key([f[v] for v in e.verts])) for e in H.edges} for f in copies]
    alive = set(range(len(sets)))
    hits: dict[tuple, set[int]] = defaultdict(set)
    for i, s in enumerate(sets):
        for key in s:
            hits[key].add(i)
    chosen: list[tuple] = []
    while alive:
        key = min(hits, key=lambda kk: (-len(hits[kk] & alive), kk))
        chosen.append(key)
        alive -= hits.pop(key)
    return sorted(chosen)


@dataclass
class RemovalResult:
    Xprime: list[list]
    verified: bool
    thresholds: list[Fraction]
    remaining: int  # |S(A, G, X \ X')|

    def to_json(self) -> dict:
        return {
            "Xprime": [[_thaw(v) for v in xs] for xs in self.Xprime],
            "verified": self.verified,
            "thresholds": [str(t) for t in self.thresholds],
            "remaining": self.remaining,
        }


def removal_deletion(cert: RepresentationCertificate, X, Eprime: Iterable[tuple], cap: int = DEFAULT_CAP) -> RemovalResult:
    """The deletion rule: drop ``x`` from ``X_i`` when ``E'`` has at least
    ``lambda gamma_i / m`` edges colored ``i`` labeled ``x``; then re-enumerate.
    """
    m = cert.m
    sets = _domain_sets(X, m)
    KX = restrict_to_domains(cert.K, sets)
    Eprime = [(int(c), KX.key(v)) for c, v in Eprime]
    left = enumerate_copies(cert.H, KX.without(Eprime), cap, cert.partite)
    if left:
        raise PreconditionError(f"E' leaves {len(left)} copies of H in K_X, e.g. {left[0]}")
    labels = Counter()
    for c, v in Eprime:
        e = cert.K.find(c, v)
        if e is None:
            raise InvalidInputError(f"edge {(c, v)} is not in K")
        labels[(c, e.label)] += 1
    thresholds = [cert.lam * g / m for g in cert.gamma]
    Xp = [sorted(x for (c, x), n in labels.items() if c == i + 1 and n >= thresholds[i]) for i in range(m)]
    restricted = []
    for i in range(m):
        drop = set(Xp[i])
        if sets[i] is None:
            if not drop:
                restricted.append(None)
                continue
            base = {e.label for e in cert.K.edges} | {s[i] for s in cert.domain.solutions(cap=cap)}
        else:
            base = sets[i]
        restricted.append(sorted(base - drop))
    remaining = len(cert.domain.solutions(X=restricted, cap=cap))
    return RemovalResult(Xp, remaining == 0, thresholds, remaining)
