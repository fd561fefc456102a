"""Iterative belief propagation on the factor graph of a net with evidence absorbed.

Flooding schedule with uniform initial messages and no damping. One iteration
updates every factor-to-variable message from the current variable-to-factor
messages, then every variable-to-factor message from the new ones.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ZeroBeliefError
from .exact import cpt_factor, factor_reduce
from .model import BayesNet, check_evidence


@dataclass
class MessageSet:
    to_var: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)  # (factor, var)
    to_factor: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)  # (var, factor)
    iteration: int = 0


def _normalized(m: np.ndarray, var: int) -> np.ndarray:
    s = m.sum()
    if not s > 0.0:
        raise ZeroBeliefError(var)
    return m / s


def ibp_run(
    net: BayesNet,
    e: Mapping[int, int] = (),
    iterations: int = 25,
    return_messages: bool = False,
):
    if iterations < 1:
        raise ParameterError("IBP needs at least one iteration")
    e = check_evidence(net, dict(e))
    factors = []
    for i in range(net.n):
        f = factor_reduce(cpt_factor(net, i), e)
        if f.scope:
            factors.append(f)
    var_factors: dict[int, list[int]] = {v: [] for v in range(net.n) if v not in e}
    for j, f in enumerate(factors):
        for v in f.scope:
            var_factors[v].append(j)

    msgs = MessageSet()
    for j, f in enumerate(factors):
        for v in f.scope:
            u = np.full(net.cards[v], 1.0 / net.cards[v])
            msgs.to_var[j, v] = u
            msgs.to_factor[v, j] = u

    for it in range(iterations):
        new_to_var = {}
        for j, f in enumerate(factors):
            labels = list(range(len(f.scope)))
            for a, v in enumerate(f.scope):
                ops = [f.table, labels]
                for b, u in enumerate(f.scope):
                    if b != a:
                        ops += [msgs.to_factor[u, j], [b]]
                new_to_var[j, v] = _normalized(np.einsum(*ops, [a]), v)
        new_to_factor = {}
        for v, fs in var_factors.items():
            for j in fs:
                m = np.ones(net.cards[v])
                for g in fs:
                    if g != j:
                        m = m * new_to_var[g, v]
                new_to_factor[v, j] = _normalized(m, v)
        msgs.to_var, msgs.to_factor = new_to_var, new_to_factor
        msgs.iteration = it + 1

    beliefs = {}
    for v, fs in sorted(var_factors.items()):
        b = np.ones(net.cards[v])
        for j in fs:
            b = b * msgs.to_var[j, v]
        beliefs[v] = _normalized(b, v)
    if return_messages:
        return beliefs, msgs
    return beliefs
