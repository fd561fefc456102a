"""Greedy w-cutset selection: plain greedy (GA), monotonous greedy (MG), heuristic greedy (HG).

All three start with every unobserved variable in the cutset and try to move members out of the cutset one at a
time, keeping a removal only if the adjusted induced width (min-fill estimate) stays
within ``w``.

Only the connected component that the candidate joins has to be re-evaluated: every
other component of the remaining moral graph was already within the bound when it
was last modified, and min-fill widths of disjoint components do not interact.
"""

from __future__ import annotations

import time
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from .errors import ParameterError
from .graph import UGraph, adjusted_width, min_fill_ordering, moralize
from .model import BayesNet, check_evidence, markov_blanket
from .sampling import Cutset


@dataclass
class SelectionReport:
    method: str
    w_bound: int
    cutset: Cutset
    width_trace: list[int] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def size(self) -> int:
        return len(self.cutset.members)


def _greedy(moral: UGraph, active: set[int], candidates: Iterable[int], cutset: set[int], w: int, trace: list[int]):
    for c in candidates:
        if c not in cutset:
            continue
        seen = {c}
        stack = [c]
        while stack:
            v = stack.pop()
            for u in moral.adj[v]:
                if u in active and u not in seen:
                    seen.add(u)
                    stack.append(u)
        width = min_fill_ordering(UGraph({v: moral.adj[v] & seen for v in seen})).width
        if width <= w:
            cutset.discard(c)
            active.add(c)
            trace.append(width)


def _finish(method, net, cutset, topo_pos, ev, w, trace, start) -> SelectionReport:
    members = tuple(sorted(cutset, key=topo_pos.__getitem__))
    cs = Cutset(members, w, adjusted_width(net, members, ev))
    return SelectionReport(method, w, cs, trace, time.perf_counter() - start)


def _setup(net: BayesNet, e: Mapping[int, int]):
    ev = set(check_evidence(net, dict(e)))
    topo = [v for v in net.topological_order if v not in ev]
    return ev, topo, {v: k for k, v in enumerate(net.topological_order)}, moralize(net)


def select_ga(net: BayesNet, e: Mapping[int, int], w: int) -> SelectionReport:
    if w < 0:
        raise ParameterError("w must be nonnegative")
    start = time.perf_counter()
    ev, topo, pos, moral = _setup(net, e)
    cutset, trace = set(topo), []
    _greedy(moral, set(), topo, cutset, w, trace)
    return _finish("GA", net, cutset, pos, ev, w, trace, start)


def select_hg(net: BayesNet, e: Mapping[int, int], w: int) -> SelectionReport:
    """GA with candidates tried in ascending Markov-blanket size (topological order on ties)."""
    if w < 0:
        raise ParameterError("w must be nonnegative")
    start = time.perf_counter()
    ev, topo, pos, moral = _setup(net, e)
    order = sorted(topo, key=lambda v: (len(markov_blanket(net, v)), pos[v]))
    cutset, trace = set(topo), []
    _greedy(moral, set(), order, cutset, w, trace)
    return _finish("HG", net, cutset, pos, ev, w, trace, start)


def select_mg_chain(net: BayesNet, e: Mapping[int, int], w_max: int) -> list[SelectionReport]:
    """Nested cutsets for w = 1..w_max, each derived from the previous one."""
    if w_max < 1:
        raise ParameterError("monotonous greedy needs w >= 1")
    start = time.perf_counter()
    ev, topo, pos, moral = _setup(net, e)
    cutset, active, trace = set(topo), set(), []
    reports = []
    for w in range(1, w_max + 1):
        _greedy(moral, active, topo, cutset, w, trace)
        reports.append(_finish("MG", net, cutset, pos, ev, w, list(trace), start))
    return reports


def select_mg(net: BayesNet, e: Mapping[int, int], w: int) -> SelectionReport:
    return select_mg_chain(net, e, w)[-1]


SELECTORS = {"ga": select_ga, "mg": select_mg, "hg": select_hg}


def select(method: str, net: BayesNet, e: Mapping[int, int], w: int) -> SelectionReport:
    try:
        fn = SELECTORS[method.lower()]
    except KeyError:
        raise ParameterError(f"unknown selection method {method!r}") from None
    return fn(net, e, w)
