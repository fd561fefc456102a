"""Gibbs sampling and cutset sampling with Rao-Blackwellised mixture estimators.

A chain samples only the cutset members; every other unobserved variable is summed
out exactly.  A member's conditional given the rest of the cutset and the evidence
is a product of the fully observed CPT entries that mention it and the normalizing
constants of the components it borders, so only that neighbourhood is recomputed
(and memoized by its values).  Estimates average conditionals, never draw counts:

* sampled variables: mean of the conditional used at each draw;
* other unobserved variables: mean of their exact marginals given the current
  cutset values and the evidence.

Plain Gibbs sampling is the special case where every unobserved variable is a member.
"""

from __future__ import annotations

import math
import time
from bisect import bisect_right
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from operator import itemgetter

import numpy as np

from . import exact
from .bench import forward_sample
from .errors import ParameterError, TrappedStateError, ZeroEvidenceError
from .graph import adjusted_width
from .model import BayesNet, check_evidence, markov_blanket

ZERO_WEIGHT = 1e-300
_LOG_ZERO_WEIGHT = math.log(ZERO_WEIGHT)
CLOCK_BLOCK = 32


@dataclass(frozen=True)
class Cutset:
    members: tuple[int, ...]
    w_bound: int | None = None
    measured_width: int = 0


def make_cutset(net: BayesNet, members: Sequence[int], e: Mapping[int, int] = (), w_bound: int | None = None) -> Cutset:
    members = tuple(net.var(v) for v in members)
    ev = set(check_evidence(net, dict(e)))
    if ev & set(members):
        raise ParameterError("cutset members must not be observed")
    if len(set(members)) != len(members):
        raise ParameterError("cutset lists a variable twice")
    return Cutset(members, w_bound, adjusted_width(net, members, ev))


@dataclass
class SamplerConfig:
    chains: int = 20
    samples: int | None = 1000
    seed: int = 0
    time_bound: float | None = None
    burn_in: int = 0
    memoize: bool = True
    max_width: int = exact.DEFAULT_WIDTH_CAP
    max_restarts: int = 1000
    init_retries: int = 1000

    def __post_init__(self):
        if self.chains < 1:
            raise ParameterError("need at least one chain")
        if self.samples is None and self.time_bound is None:
            raise ParameterError("set samples, time_bound, or both")
        if self.samples is not None and self.samples < 1:
            raise ParameterError("samples per chain must be >= 1")
        if self.time_bound is not None and self.time_bound <= 0:
            raise ParameterError("time bound must be positive")
        if self.burn_in < 0:
            raise ParameterError("burn-in must be nonnegative")


def chain_seed(seed: int, m: int) -> int:
    return seed ^ m


@dataclass
class ChainState:
    """Chain position: ``values`` is a full-length value list (only sampled and observed slots matter)."""

    values: list[int]
    rng: np.random.Generator
    t: int = 0
    restarts: int = 0


@dataclass
class RunningEstimator:
    """Running sums of conditional distributions; :meth:`estimate` divides by ``count``."""

    sums: dict[int, np.ndarray] = field(default_factory=dict)
    count: int = 0

    def add(self, var: int, dist: np.ndarray) -> None:
        if var in self.sums:
            self.sums[var] += dist
        else:
            self.sums[var] = np.array(dist, dtype=float)

    def merge(self, other: "RunningEstimator") -> "RunningEstimator":
        out = RunningEstimator({v: s.copy() for v, s in self.sums.items()}, self.count + other.count)
        for v, s in other.sums.items():
            out.add(v, s)
        return out

    def estimate(self) -> dict[int, np.ndarray]:
        if self.count == 0:
            raise ParameterError("no samples accumulated")
        out = {}
        for v, s in sorted(self.sums.items()):
            p = s / self.count
            out[v] = p / p.sum()
        return out


@dataclass
class ChainResult:
    estimates: dict[int, np.ndarray]
    samples: int
    restarts: int
    elapsed: float


@dataclass
class SamplingResult:
    chains: list[ChainResult]
    cutset: tuple[int, ...]

    @property
    def per_chain(self) -> list[dict[int, np.ndarray]]:
        return [c.estimates for c in self.chains]

    @property
    def restarts(self) -> int:
        return sum(c.restarts for c in self.chains)

    @property
    def samples(self) -> int:
        return sum(c.samples for c in self.chains)

    @property
    def elapsed(self) -> float:
        return sum(c.elapsed for c in self.chains)

    def pooled(self) -> dict[int, np.ndarray]:
        """Arithmetic mean of the per-chain estimates."""
        chains = self.per_chain
        return {v: sum(c[v] for c in chains) / len(chains) for v in chains[0]}


def _getter(idx: Sequence[int]):
    if not idx:
        return lambda values: ()
    return itemgetter(*idx)


class _Trapped(Exception):
    def __init__(self, var):
        self.var = var


class CutsetSampler:
    """Compiled cutset sampler for one (net, cutset, evidence) triple.

    Reusable across chains and seeds; memoized exact results are shared.
    """

    def __init__(
        self,
        net: BayesNet,
        members: Sequence[int],
        e: Mapping[int, int] = (),
        memoize: bool = True,
        max_width: int = exact.DEFAULT_WIDTH_CAP,
    ):
        self.net = net
        self.evidence = check_evidence(net, dict(e))
        self.members = tuple(net.var(v) for v in members)
        if set(self.members) & set(self.evidence):
            raise ParameterError("cutset members must not be observed")
        if len(set(self.members)) != len(self.members):
            raise ParameterError("cutset lists a variable twice")
        self.memoize = memoize
        observed = set(self.evidence) | set(self.members)
        self.cn = exact.ConditionedNet(net, observed, max_width=max_width, memoize=memoize)
        self.width = self.cn.width
        cn = self.cn

        self._obs_cpts = []
        self._comps = []
        self._ctx = []
        self._memo: list[dict] = []
        for c in self.members:
            cpts = [i for i in cn.observed_cpts if c in net.family(i)]
            comps = [k for k, comp in enumerate(cn.components) if c in comp.boundary]
            ctx = set()
            for i in cpts:
                ctx.update(net.family(i))
            for k in comps:
                ctx.update(cn.components[k].boundary)
            ctx.discard(c)
            self._obs_cpts.append(cpts)
            self._comps.append([(k, _getter(cn.components[k].boundary)) for k in comps])
            self._ctx.append(_getter(sorted(ctx)))
            self._memo.append({})
        self._comp_keys = [_getter(comp.boundary) for comp in cn.components]
        self.unobserved = tuple(v for v in range(net.n) if v not in self.evidence)
        # slices of the flat accumulator
        self._slots = {}
        off = 0
        for c in self.members:
            self._slots[c] = off
            off += net.cards[c]
        self._comp_off = []
        for comp in cn.components:
            self._comp_off.append(off)
            for v in comp.variables:
                self._slots[v] = off + comp.offsets[v]
            off += comp.size
        self._acc_size = off

    # -- conditionals ------------------------------------------------------------

    def _compute(self, i: int, values: list[int]):
        c = self.members[i]
        card = self.net.cards[c]
        old = values[c]
        logw = np.empty(card)
        for x in range(card):
            values[c] = x
            lw = self.cn.observed_log_weight(values, self._obs_cpts[i])
            for k, key in self._comps[i]:
                if lw == -math.inf:
                    break
                lw += self.cn.component_logz(k, values, key(values))
            logw[x] = lw
        values[c] = old
        top = logw.max()
        if not top >= _LOG_ZERO_WEIGHT:
            return None
        w = np.exp(logw - top)
        dist = w / w.sum()
        dist.setflags(write=False)
        return dist, list(np.cumsum(dist))

    def conditional_entry(self, i: int, values: list[int]):
        """``(dist, cdf)`` for member ``i`` given ``values``, or None when every weight is zero."""
        if not self.memoize:
            return self._compute(i, values)
        key = self._ctx[i](values)
        memo = self._memo[i]
        hit = memo.get(key)
        if hit is None and key not in memo:
            hit = self._compute(i, values)
            if len(memo) < self.cn.max_cache:
                memo[key] = hit
        return hit

    def conditional(self, i: int, values: Sequence[int]) -> np.ndarray:
        entry = self.conditional_entry(i, list(values))
        if entry is None:
            raise TrappedStateError(self.members[i])
        return entry[0].copy()

    # -- chain mechanics ---------------------------------------------------------

    def initial_state(self, rng: np.random.Generator, retries: int = 1000) -> ChainState:
        """Forward-sample with evidence clamped; reject zero-probability states."""
        for _ in range(max(1, retries)):
            values = forward_sample(self.net, rng, clamp=self.evidence)
            if self.cn.log_prob(values) > -math.inf:
                return ChainState(values, rng)
        raise ZeroEvidenceError(f"no positive-probability initial state found in {retries} tries")

    def _sweep(self, state: ChainState, acc: np.ndarray | None) -> None:
        values = state.values
        us = state.rng.random(len(self.members)).tolist() if self.members else ()
        drawn = []
        for i, c in enumerate(self.members):
            entry = self.conditional_entry(i, values)
            if entry is None:
                raise _Trapped(c)
            dist, cdf = entry
            x = bisect_right(cdf, us[i])
            card = len(cdf)
            values[c] = x if x < card else card - 1
            drawn.append(dist)
        state.t += 1
        if acc is None:
            return
        for i, c in enumerate(self.members):
            o = self._slots[c]
            acc[o:o + len(drawn[i])] += drawn[i]
        for k, key in enumerate(self._comp_keys):
            flat = self.cn.component_marginals(k, values, key(values))
            o = self._comp_off[k]
            acc[o:o + len(flat)] += flat

    def sweep(self, state: ChainState) -> ChainState:
        """Resample every member once, in stored order, using the freshest values."""
        try:
            self._sweep(state, None)
        except _Trapped as exc:
            raise TrappedStateError(exc.var, step=state.t) from None
        return state

    def run_chain(
        self,
        rng: np.random.Generator,
        samples: int | None,
        burn_in: int = 0,
        time_bound: float | None = None,
        chain: int | None = None,
        max_restarts: int = 1000,
        init_retries: int = 1000,
    ) -> ChainResult:
        start = time.perf_counter()
        deadline = None if time_bound is None else start + time_bound
        state = self.initial_state(rng, init_retries)
        acc = np.zeros(self._acc_size)
        restarts = 0
        t = 0
        limit = samples if samples is not None else math.inf
        total = burn_in + limit
        while t < total:
            if deadline is not None and t % CLOCK_BLOCK == 0 and t > burn_in and time.perf_counter() >= deadline:
                break
            try:
                self._sweep(state, acc if t >= burn_in else None)
            except _Trapped as exc:
                restarts += 1
                if restarts > max_restarts:
                    raise TrappedStateError(exc.var, chain=chain, step=t) from None
                # partial sweeps never reach the accumulator
                state = self.initial_state(rng, init_retries)
                continue
            t += 1
        kept = max(0, t - burn_in)
        if kept == 0:
            raise ParameterError("chain finished without retaining any samples")
        acc /= kept
        return ChainResult(self._split(acc), kept, restarts, time.perf_counter() - start)

    def _split(self, acc: np.ndarray) -> dict[int, np.ndarray]:
        out = {}
        for v in self.unobserved:
            o = self._slots[v]
            p = acc[o:o + self.net.cards[v]]
            out[v] = p / p.sum()
        return out

    def run(self, config: SamplerConfig) -> SamplingResult:
        chains = []
        per_chain_time = None if config.time_bound is None else config.time_bound / config.chains
        for m in range(config.chains):
            rng = np.random.default_rng(chain_seed(config.seed, m))
            chains.append(
                self.run_chain(
                    rng,
                    config.samples,
                    burn_in=config.burn_in,
                    time_bound=per_chain_time,
                    chain=m,
                    max_restarts=config.max_restarts,
                    init_retries=config.init_retries,
                )
            )
        return SamplingResult(chains, self.members)


def gibbs_members(net: BayesNet, e: Mapping[int, int]) -> tuple[int, ...]:
    ev = check_evidence(net, dict(e))
    return tuple(v for v in range(net.n) if v not in ev)


def gibbs_sampler(net: BayesNet, e: Mapping[int, int] = (), memoize: bool = True) -> CutsetSampler:
    """Full Gibbs sampler: every unobserved variable is sampled, in index order."""
    return CutsetSampler(net, gibbs_members(net, e), e, memoize=memoize)


# -- reference conditionals --------------------------------------------------------


def gibbs_conditional(net: BayesNet, v: int, state: Mapping[int, int] | Sequence[int], e: Mapping[int, int] = ()) -> np.ndarray:
    """P(v | all other variables): v's CPT row times its children's rows, normalized.

    Only values of the Markov blanket are read from ``state`` (evidence overrides it).
    """
    v = net.var(v)
    e = check_evidence(net, dict(e))
    if v in e:
        raise ParameterError(f"{net.names[v]!r} is observed")
    vals = {}
    for u in markov_blanket(net, v):
        if u in e:
            vals[u] = e[u]
        else:
            try:
                vals[u] = int(state[u])
            except (KeyError, IndexError):
                raise ParameterError(f"state lacks Markov-blanket variable {net.names[u]!r}") from None
    w = np.empty(net.cards[v])
    for x in range(net.cards[v]):
        vals[v] = x
        p = net.cpts[v][tuple(vals[u] for u in net.family(v))]
        for ch in net.children[v]:
            p *= net.cpts[ch][tuple(vals[u] for u in net.family(ch))]
        w[x] = p
    z = w.sum()
    if not z > 0.0:
        raise TrappedStateError(v)
    return w / z


def cutset_conditional(
    net: BayesNet,
    cutset: Cutset | Sequence[int],
    i: int,
    state: Mapping[int, int] | Sequence[int],
    e: Mapping[int, int] = (),
) -> np.ndarray:
    """Conditional of member ``i`` given the other members and ``e``, by exact elimination with those values as evidence."""
    members = cutset.members if isinstance(cutset, Cutset) else tuple(cutset)
    ev = dict(check_evidence(net, dict(e)))
    for j, c in enumerate(members):
        if j != i:
            ev[c] = int(state[c])
    return exact.be_marginal(net, ev, members[i])


# -- module-level conveniences -------------------------------------------------------


def new_state(net: BayesNet, sampler: CutsetSampler, seed: int) -> ChainState:
    return sampler.initial_state(np.random.default_rng(seed))


def gibbs_sweep(net: BayesNet, state: ChainState, e: Mapping[int, int] = ()) -> ChainState:
    return gibbs_sampler(net, e).sweep(state)


def cutset_sweep(net: BayesNet, cutset: Cutset | Sequence[int], state: ChainState, e: Mapping[int, int] = ()) -> ChainState:
    members = cutset.members if isinstance(cutset, Cutset) else tuple(cutset)
    return CutsetSampler(net, members, e).sweep(state)


def run_cutset(net: BayesNet, cutset: Cutset | Sequence[int], e: Mapping[int, int], config: SamplerConfig) -> SamplingResult:
    members = cutset.members if isinstance(cutset, Cutset) else tuple(cutset)
    return CutsetSampler(net, members, e, memoize=config.memoize, max_width=config.max_width).run(config)


def run_gibbs(net: BayesNet, e: Mapping[int, int], config: SamplerConfig) -> SamplingResult:
    return CutsetSampler(net, gibbs_members(net, e), e, memoize=config.memoize, max_width=config.max_width).run(config)


def cutset_estimate(net: BayesNet, cutset: Cutset | Sequence[int], e: Mapping[int, int], config: SamplerConfig) -> dict[int, np.ndarray]:
    return run_cutset(net, cutset, e, config).pooled()


def gibbs_estimate(net: BayesNet, e: Mapping[int, int], config: SamplerConfig) -> dict[int, np.ndarray]:
    return run_gibbs(net, e, config).pooled()
