"""Structural machinery: moral graphs, elimination orderings, induced width, loop cutsets.

An :class:`Ordering` stores the ordered sequence ``d`` of the classic definition.
Nodes are *processed* (eliminated) from last to first, so the elimination order
is ``reversed(sequence)``.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import networkx as nx

from .errors import ParameterError
from .model import BayesNet


class UGraph:
    """Undirected simple graph over a subset of integer nodes."""

    __slots__ = ("adj",)

    def __init__(self, adj: dict[int, set[int]] | None = None):
        self.adj: dict[int, set[int]] = {} if adj is None else adj

    @classmethod
    def from_edges(cls, nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> "UGraph":
        g = cls({v: set() for v in nodes})
        for a, b in edges:
            g.add_edge(a, b)
        return g

    @property
    def n(self) -> int:
        return len(self.adj)

    def nodes(self) -> list[int]:
        return sorted(self.adj)

    def add_edge(self, a: int, b: int) -> None:
        if a == b:
            return
        self.adj.setdefault(a, set()).add(b)
        self.adj.setdefault(b, set()).add(a)

    def edges(self) -> set[frozenset[int]]:
        return {frozenset((a, b)) for a, nb in self.adj.items() for b in nb}

    def copy(self) -> "UGraph":
        return UGraph({v: set(nb) for v, nb in self.adj.items()})

    def subgraph(self, nodes: Iterable[int]) -> "UGraph":
        keep = set(nodes)
        return UGraph({v: self.adj[v] & keep for v in keep})

    def component(self, start: int) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for u in self.adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return seen

    def components(self) -> list[set[int]]:
        out, seen = [], set()
        for v in sorted(self.adj):
            if v not in seen:
                comp = self.component(v)
                seen |= comp
                out.append(comp)
        return out


@dataclass(frozen=True)
class Ordering:
    sequence: tuple[int, ...]
    width: int

    @property
    def elimination_order(self) -> tuple[int, ...]:
        return tuple(reversed(self.sequence))


def moralize(net: BayesNet, removed: Iterable[int] = ()) -> UGraph:
    """Moral graph of the whole net, with ``removed`` nodes deleted afterwards."""
    gone = set(removed)
    g = UGraph({v: set() for v in range(net.n) if v not in gone})
    for i in range(net.n):
        fam = [v for v in net.family(i) if v not in gone]
        for a in range(len(fam)):
            for b in range(a + 1, len(fam)):
                g.add_edge(fam[a], fam[b])
    return g


def induced_width(g: UGraph, o: Ordering | Iterable[int]) -> int:
    seq = o.sequence if isinstance(o, Ordering) else tuple(o)
    if sorted(seq) != g.nodes():
        raise ParameterError("ordering is not a permutation of the graph's nodes")
    pos = {v: k for k, v in enumerate(seq)}
    adj = {v: set(nb) for v, nb in g.adj.items()}
    width = 0
    for v in reversed(seq):
        earlier = [u for u in adj[v] if pos[u] < pos[v]]
        width = max(width, len(earlier))
        for a in earlier:
            adj[a].update(earlier)
            adj[a].discard(a)
    return width


def _fill(adj: dict[int, set[int]], v: int) -> int:
    nb = list(adj[v])
    missing = 0
    for k, a in enumerate(nb):
        na = adj[a]
        for b in nb[k + 1:]:
            if b not in na:
                missing += 1
    return missing


def min_fill_ordering(g: UGraph) -> Ordering:
    """Greedy min-fill; ties go to the smaller current degree, then the lower index."""
    adj = {v: set(nb) for v, nb in g.adj.items()}
    fill = {v: _fill(adj, v) for v in adj}
    elim: list[int] = []
    width = 0
    while adj:
        v = min(adj, key=lambda u: (fill[u], len(adj[u]), u))
        nbrs = adj.pop(v)
        del fill[v]
        elim.append(v)
        width = max(width, len(nbrs))
        for a in nbrs:
            adj[a].discard(v)
        affected = set(nbrs)
        for a in nbrs:
            new = nbrs - adj[a] - {a}
            if new:
                adj[a] |= new
                for b in new:
                    adj[b].add(a)
        for a in nbrs:
            affected |= adj[a]
        for a in affected:
            fill[a] = _fill(adj, a)
    return Ordering(tuple(reversed(elim)), width)


def adjusted_width(net: BayesNet, cutset: Iterable[int], evidence_vars: Iterable[int]) -> int:
    c, e = set(cutset), set(evidence_vars)
    if c & e:
        raise ParameterError("cutset and evidence overlap")
    return min_fill_ordering(moralize(net, c | e)).width


def skeleton(net: BayesNet, removed: Iterable[int] = ()) -> nx.Graph:
    gone = set(removed)
    sk = nx.Graph()
    sk.add_nodes_from(v for v in range(net.n) if v not in gone)
    sk.add_edges_from((p, c) for p, c in net.edges() if p not in gone and c not in gone)
    return sk


def _cycle_nodes(sk: nx.Graph) -> set[int]:
    bridges = {frozenset(e) for e in nx.bridges(sk)}
    return {v for a, b in sk.edges() if frozenset((a, b)) not in bridges for v in (a, b)}


def loop_cutset(net: BayesNet, removed: Iterable[int] = ()) -> set[int]:
    """Greedy loop cutset: drop the highest-degree node on a cycle until the skeleton is a forest.

    ``removed`` nodes (typically evidence) are deleted from the skeleton up front
    and never enter the cutset.
    """
    sk = skeleton(net, removed)
    cutset: set[int] = set()
    while True:
        on_cycle = _cycle_nodes(sk)
        if not on_cycle:
            return cutset
        v = min(on_cycle, key=lambda u: (-sk.degree(u), u))
        sk.remove_node(v)
        cutset.add(v)


def is_polytree(net: BayesNet, removed: Iterable[int] = ()) -> bool:
    return nx.is_forest(skeleton(net, removed))
