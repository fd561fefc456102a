"""Discrete Bayesian networks: representation, validation and elementary queries.

Variables are dense integer indices ``0..n-1``. Each CPT is stored as an array
of shape ``(*parent_cards, child_card)`` so that flattening in C order lists one
probability row per parent configuration with the last parent varying fastest.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from .errors import IncompleteAssignmentError, ModelError

NORMALIZATION_TOL = 1e-9

Evidence = dict[int, int]
Assignment = Union[Mapping[int, int], Sequence[int]]


@dataclass(frozen=True, eq=False)
class BayesNet:
    names: tuple[str, ...]
    cards: tuple[int, ...]
    parents: tuple[tuple[int, ...], ...]
    cpts: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "cards", tuple(int(c) for c in self.cards))
        object.__setattr__(self, "parents", tuple(tuple(int(p) for p in ps) for ps in self.parents))
        tables = []
        for t in self.cpts:
            arr = np.array(t, dtype=float)
            arr.setflags(write=False)
            tables.append(arr)
        object.__setattr__(self, "cpts", tuple(tables))
        n = len(self.names)
        if not (len(self.cards) == len(self.parents) == len(self.cpts) == n):
            raise ModelError("names, cards, parents and cpts must have equal length")
        for i, ps in enumerate(self.parents):
            for p in ps:
                if not 0 <= p < n or p == i:
                    raise ModelError(f"variable {self.names[i]!r} has invalid parent index {p}")

    @classmethod
    def from_rows(cls, names, cards, parents, rows) -> "BayesNet":
        """Build a net from flat probability rows (last parent varies fastest)."""
        cpts = []
        for i, r in enumerate(rows):
            arr = np.asarray(r, dtype=float)
            shape = tuple(cards[p] for p in parents[i]) + (cards[i],)
            if arr.size == int(np.prod(shape)):
                arr = arr.reshape(shape)
            cpts.append(arr)
        return cls(tuple(names), tuple(cards), tuple(tuple(p) for p in parents), tuple(cpts))

    @property
    def n(self) -> int:
        return len(self.names)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        ch: list[list[int]] = [[] for _ in range(self.n)]
        for i, ps in enumerate(self.parents):
            for p in ps:
                ch[p].append(i)
        return tuple(tuple(c) for c in ch)

    @cached_property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def var(self, key: int | str) -> int:
        if isinstance(key, str):
            try:
                return self.index[key]
            except KeyError:
                raise ModelError(f"unknown variable {key!r}") from None
        if not 0 <= key < self.n:
            raise ModelError(f"variable index {key} out of range")
        return int(key)

    def family(self, i: int) -> tuple[int, ...]:
        """CPT scope of variable ``i``: its parents followed by itself."""
        return self.parents[i] + (i,)

    def rows(self, i: int) -> np.ndarray:
        return self.cpts[i].reshape(-1, self.cards[i])

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        """Kahn's algorithm, always releasing the lowest ready index first."""
        import heapq

        indeg = [len(ps) for ps in self.parents]
        ready = [i for i in range(self.n) if indeg[i] == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in self.children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != self.n:
            raise ModelError("parent relation contains a cycle")
        return tuple(order)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, i) for i, ps in enumerate(self.parents) for p in ps]

    def __eq__(self, other):
        if not isinstance(other, BayesNet):
            return NotImplemented
        return (
            self.names == other.names
            and self.cards == other.cards
            and self.parents == other.parents
            and all(a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.cpts, other.cpts))
        )

    __hash__ = object.__hash__


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # "cycle" | "normalization" | "cardinality" | "negative"
    variable: str | None
    message: str
    row: int | None = None


def validate(net: BayesNet) -> list[Diagnostic]:
    """Return every structural or numeric problem found; empty means the net is valid."""
    diags: list[Diagnostic] = []
    try:
        net.topological_order
    except ModelError:
        diags.append(Diagnostic("cycle", None, "parent relation is cyclic"))

    for i in range(net.n):
        name = net.names[i]
        expected = tuple(net.cards[p] for p in net.parents[i]) + (net.cards[i],)
        table = net.cpts[i]
        if table.shape != expected:
            diags.append(
                Diagnostic(
                    "cardinality",
                    name,
                    f"{name}: CPT has shape {table.shape}, expected {expected}",
                )
            )
            continue
        rows = table.reshape(-1, net.cards[i])
        if (rows < 0).any() or not np.isfinite(rows).all():
            diags.append(Diagnostic("negative", name, f"{name}: CPT has negative or non-finite entries"))
        sums = rows.sum(axis=1)
        for r, s in enumerate(sums):
            if abs(s - 1.0) > NORMALIZATION_TOL:
                diags.append(
                    Diagnostic("normalization", name, f"{name}: row {r} sums to {s!r}", row=r)
                )
    return diags


def check(net: BayesNet) -> BayesNet:
    """Raise ModelError listing all diagnostics, or return ``net`` unchanged."""
    diags = validate(net)
    if diags:
        raise ModelError("; ".join(d.message for d in diags))
    return net


def check_evidence(net: BayesNet, e: Mapping[int, int]) -> Evidence:
    out: Evidence = {}
    for k, v in e.items():
        i = net.var(k)
        if i in out:
            raise ModelError(f"variable {net.names[i]!r} observed twice")
        if not 0 <= int(v) < net.cards[i]:
            raise ModelError(f"value {v} out of range for {net.names[i]!r}")
        out[i] = int(v)
    return dict(sorted(out.items()))


def _full_values(net: BayesNet, a: Assignment) -> list[int]:
    if isinstance(a, Mapping):
        missing = [net.names[i] for i in range(net.n) if i not in a]
        if missing:
            raise IncompleteAssignmentError(f"assignment misses {', '.join(missing)}")
        vals = [int(a[i]) for i in range(net.n)]
    else:
        vals = [int(v) for v in a]
        if len(vals) != net.n:
            raise IncompleteAssignmentError(f"assignment has {len(vals)} values for {net.n} variables")
    for i, v in enumerate(vals):
        if not 0 <= v < net.cards[i]:
            raise ModelError(f"value {v} out of range for {net.names[i]!r}")
    return vals


def joint_probability(net: BayesNet, a: Assignment) -> float:
    vals = _full_values(net, a)
    p = 1.0
    for i in range(net.n):
        p *= float(net.cpts[i][tuple(vals[j] for j in net.family(i))])
    return p


def markov_blanket(net: BayesNet, v: int) -> set[int]:
    blanket = set(net.parents[v])
    for c in net.children[v]:
        blanket.add(c)
        blanket.update(net.parents[c])
    blanket.discard(v)
    return blanket
