"""Simple directed graphs with initial vertices and partial sieve-defined maps.

A sieve is a vertex subset closed under outgoing edges.  A partial
sieve-defined homomorphism is a vertex map whose domain is a sieve, which
preserves edges, and which is defined on (and preserves) initial vertices.
These compose, with domain ``Def f ∩ f⁻¹(Def g)``.

Two representations are provided: an explicit finite graph on which sieve
and homomorphism checking is decidable, and an intensional one (predicates
plus a successor function) for state spaces too large to materialize.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Tuple, Union

from .core import Slot, Tx, UtxoSet, apply_tx, check_tx


class UnsupportedEnumerationError(Exception):
    """Raised when an operation needs to enumerate an infinite vertex set."""


@dataclass(frozen=True)
class SimpleGraph:
    """Finite simple directed graph with distinguished initial vertices.

    At most one edge per ordered vertex pair; self-loops allowed.
    """

    vertices: frozenset
    edges: frozenset
    initial: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        object.__setattr__(self, "edges", frozenset(self.edges))
        object.__setattr__(self, "initial", frozenset(self.initial))
        for a, b in self.edges:
            if a not in self.vertices or b not in self.vertices:
                raise ValueError("edge endpoint not a vertex: %r" % ((a, b),))
        if not self.initial <= self.vertices:
            raise ValueError("initial vertices must be vertices")

    def successors(self, v) -> frozenset:
        return frozenset(b for a, b in self.edges if a == v)

    def full_subgraph(self, subset: Iterable) -> "SimpleGraph":
        """Induced subgraph on ``subset``; keeps the initial vertices inside it."""
        sub = frozenset(subset)
        if not sub <= self.vertices:
            raise ValueError("subset must be contained in the vertex set")
        return SimpleGraph(
            vertices=sub,
            edges=frozenset(e for e in self.edges if e[0] in sub and e[1] in sub),
            initial=self.initial & sub,
        )


@dataclass(frozen=True)
class IntensionalGraph:
    """A possibly-infinite graph given by predicates and a successor function.

    ``initial_vertices`` must be a finite iterable when path enumeration is
    wanted; leave it None to mark the initial set as non-enumerable.
    """

    contains_vertex: Callable
    successors: Callable
    is_initial: Callable
    initial_vertices: Optional[Tuple] = None

    def __post_init__(self):
        if self.initial_vertices is not None:
            object.__setattr__(self, "initial_vertices", tuple(self.initial_vertices))


def is_sieve(graph: SimpleGraph, subset: Iterable) -> bool:
    """True iff every edge leaving ``subset`` ends inside it."""
    sub = frozenset(subset)
    if not sub <= graph.vertices:
        raise ValueError("subset must be contained in the vertex set")
    return all(b in sub for a, b in graph.edges if a in sub)


def intersect_sieves(graph: SimpleGraph, s1: Iterable, s2: Iterable) -> frozenset:
    """Intersection of two sieves; sieves are closed under intersection."""
    s1, s2 = frozenset(s1), frozenset(s2)
    if not is_sieve(graph, s1) or not is_sieve(graph, s2):
        raise ValueError("arguments must be sieves")
    return s1 & s2


@dataclass(frozen=True)
class PartialSieveHom:
    """Vertex map between simple graphs, defined on a sieve of the source.

    The stored mapping is restricted to the domain at construction, so two
    homs compare equal exactly when they agree extensionally.
    """

    source: SimpleGraph
    target: SimpleGraph
    domain: frozenset
    mapping: Mapping

    def __post_init__(self):
        object.__setattr__(self, "domain", frozenset(self.domain))
        if callable(self.mapping) and not isinstance(self.mapping, Mapping):
            restricted = {v: self.mapping(v) for v in self.domain}
        else:
            restricted = {v: self.mapping[v] for v in self.domain}
        object.__setattr__(self, "mapping", restricted)

    def __call__(self, v):
        return self.mapping[v]

    def defined_at(self, v) -> bool:
        return v in self.domain


def identity_hom(graph: SimpleGraph) -> PartialSieveHom:
    return PartialSieveHom(graph, graph, graph.vertices, lambda v: v)


@dataclass(frozen=True)
class HomCheck:
    """Verdict of check_hom with the violated clause and a witness."""

    ok: bool
    reason: Optional[str] = None
    witness: object = None

    def __bool__(self) -> bool:
        return self.ok


def check_hom(hom: PartialSieveHom) -> HomCheck:
    """Verify the three homomorphism invariants on explicit finite graphs."""
    src, tgt = hom.source, hom.target
    if not hom.domain <= src.vertices:
        return HomCheck(False, "domain-not-in-source", hom.domain - src.vertices)
    for a, b in src.edges:
        if a in hom.domain and b not in hom.domain:
            return HomCheck(False, "domain-not-a-sieve", (a, b))
    for v in hom.domain:
        if hom(v) not in tgt.vertices:
            return HomCheck(False, "image-not-in-target", v)
    for a, b in src.edges:
        if a in hom.domain and (hom(a), hom(b)) not in tgt.edges:
            return HomCheck(False, "edge-not-preserved", (a, b))
    for v in src.initial:
        if v not in hom.domain:
            return HomCheck(False, "initial-not-in-domain", v)
        if hom(v) not in tgt.initial:
            return HomCheck(False, "initial-not-preserved", v)
    return HomCheck(True)


def compose_homs(f: PartialSieveHom, g: PartialSieveHom) -> PartialSieveHom:
    """Composition g∘f with domain Def f ∩ f⁻¹(Def g)."""
    if f.target != g.source:
        raise ValueError("target of f must equal source of g")
    domain = frozenset(v for v in f.domain if g.defined_at(f(v)))
    return PartialSieveHom(f.source, g.target, domain, lambda v: g(f(v)))


def enumerate_paths(
    graph: Union[SimpleGraph, IntensionalGraph], depth: int
) -> frozenset:
    """All paths with ``depth`` vertices starting at an initial vertex."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if isinstance(graph, SimpleGraph):
        starts = graph.initial
        succ = graph.successors
    else:
        if graph.initial_vertices is None:
            raise UnsupportedEnumerationError(
                "intensional graph has no finite initial-vertex enumeration"
            )
        starts = graph.initial_vertices
        succ = graph.successors
    paths = [(v,) for v in starts]
    for _ in range(depth - 1):
        paths = [p + (w,) for p in paths for w in succ(p[-1])]
    return frozenset(paths)


# --- ledger transition graphs ----------------------------------------------

def build_ledger_graph(
    initial_utxos: Iterable[UtxoSet],
    initial_slots: Iterable[Slot],
    tx_universe: Iterable[Tx],
    slot_universe: Iterable[Slot],
    additional_checks=None,
) -> SimpleGraph:
    """Explicit transition graph over reachable (slot, utxo, tx) triples.

    Vertices satisfy check_tx; there is an edge (q,u,t) -> (q',u',t')
    exactly when u' = apply_tx(u,t), (q',u',t') is again checkable, and the
    slot does not decrease.
    """
    initial_utxos = list(initial_utxos)
    initial_slots = sorted(set(initial_slots))
    txs = list(tx_universe)
    slots = sorted(set(slot_universe))

    initial = frozenset(
        (q, u, t)
        for q in initial_slots
        for u in initial_utxos
        for t in txs
        if check_tx(q, u, t, additional_checks)
    )
    vertices = set(initial)
    edges = set()
    frontier = list(initial)
    while frontier:
        q, u, t = frontier.pop()
        u2 = apply_tx(u, t)
        for q2 in slots:
            if q2 < q:
                continue
            for t2 in txs:
                if not check_tx(q2, u2, t2, additional_checks):
                    continue
                w = (q2, u2, t2)
                edges.add(((q, u, t), w))
                if w not in vertices:
                    vertices.add(w)
                    frontier.append(w)
    return SimpleGraph(frozenset(vertices), frozenset(edges), initial)


def project_ledger_graph(
    lam: SimpleGraph,
) -> Tuple[SimpleGraph, PartialSieveHom]:
    """Collapse a ledger graph onto its UTxO component.

    Returns the projected graph (states, with an edge u -> u' whenever some
    vertex (q,u,t) steps to u') together with the everywhere-defined
    projection homomorphism.
    """
    states = frozenset(u for _, u, _ in lam.vertices)
    edges = set()
    for q, u, t in lam.vertices:
        u2 = apply_tx(u, t)
        if u2 in states:
            edges.add((u, u2))
    initial = frozenset(u for _, u, _ in lam.initial)
    lam_prime = SimpleGraph(states, frozenset(edges), initial)
    phi = PartialSieveHom(lam, lam_prime, lam.vertices, lambda v: v[1])
    return lam_prime, phi


def intensional_ledger_graph(
    initial_utxos: Iterable[UtxoSet],
    initial_slots: Iterable[Slot],
    tx_universe: Iterable[Tx],
    slot_universe: Iterable[Slot],
    additional_checks=None,
) -> IntensionalGraph:
    """Lazy variant of build_ledger_graph; successors computed on demand."""
    initial_utxos = list(initial_utxos)
    initial_slots = sorted(set(initial_slots))
    txs = list(tx_universe)
    slots = sorted(set(slot_universe))

    def contains(v):
        q, u, t = v
        return bool(check_tx(q, u, t, additional_checks))

    def successors(v):
        q, u, t = v
        u2 = apply_tx(u, t)
        return frozenset(
            (q2, u2, t2)
            for q2 in slots
            if q2 >= q
            for t2 in txs
            if check_tx(q2, u2, t2, additional_checks)
        )

    def initial(v):
        q, u, _ = v
        return q in initial_slots and u in initial_utxos and contains(v)

    starts = tuple(
        (q, u, t)
        for q in initial_slots
        for u in initial_utxos
        for t in txs
        if check_tx(q, u, t, additional_checks)
    )
    return IntensionalGraph(contains, successors, initial, starts)
