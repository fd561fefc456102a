"""Factor algebra and bucket elimination.

Two independent exact paths live here:

* plain variable elimination (:func:`be_evidence_prob`, :func:`be_marginal`), built
  from :func:`factor_product` / :func:`factor_sum_out`;
* a compiled bucket tree (:class:`ConditionedNet`) that conditions on a fixed set of
  observed variables, splits the rest into connected components and computes the
  normalizing constant plus every single-variable marginal of each component in two
  passes.  All-marginals queries and the cutset samplers run on this path.

Evidence is applied by slicing CPTs, so observed variables never enter a factor scope.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, WidthGuardError, ZeroEvidenceError
from .graph import Ordering, UGraph, induced_width, min_fill_ordering, moralize
from .model import BayesNet, check_evidence

DEFAULT_WIDTH_CAP = 25


@dataclass(frozen=True, eq=False)
class Factor:
    """Nonnegative table over ``scope``; the last scope variable varies fastest."""

    scope: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        t = np.asarray(self.table, dtype=float)
        if t.ndim != len(self.scope):
            raise ParameterError(f"table has {t.ndim} axes for scope of size {len(self.scope)}")
        object.__setattr__(self, "table", t)

    @property
    def flat(self) -> np.ndarray:
        return self.table.reshape(-1)


def cpt_factor(net: BayesNet, i: int) -> Factor:
    return Factor(net.family(i), net.cpts[i])


def factor_product(f: Factor, g: Factor) -> Factor:
    extra = tuple(v for v in g.scope if v not in f.scope)
    scope = f.scope + extra
    a = f.table.reshape(f.table.shape + (1,) * len(extra))
    perm = [g.scope.index(v) for v in scope if v in g.scope]
    b = np.transpose(g.table, perm)
    shape = []
    it = iter(b.shape)
    for v in scope:
        shape.append(next(it) if v in g.scope else 1)
    return Factor(scope, a * b.reshape(shape))


def factor_sum_out(f: Factor, v: int) -> Factor:
    if v not in f.scope:
        raise ParameterError(f"variable {v} not in factor scope {f.scope}")
    ax = f.scope.index(v)
    return Factor(f.scope[:ax] + f.scope[ax + 1:], f.table.sum(axis=ax))


def factor_reduce(f: Factor, evidence: Mapping[int, int]) -> Factor:
    """Slice the table at the observed values, dropping those variables from the scope."""
    idx = tuple(evidence[v] if v in evidence else slice(None) for v in f.scope)
    return Factor(tuple(v for v in f.scope if v not in evidence), f.table[idx])


def _elimination_order(
    net: BayesNet,
    observed: Iterable[int],
    keep: Iterable[int] = (),
    order: Sequence[int] | None = None,
    max_width: int = DEFAULT_WIDTH_CAP,
) -> list[int]:
    """Order in which the unobserved, non-kept variables are summed out.

    ``order`` is an elimination order (first eliminated first) over any superset of
    the variables; by default a min-fill order of the moral graph with the observed
    variables deleted.
    """
    obs = set(observed)
    g = moralize(net, obs)
    if order is None:
        o = min_fill_ordering(g)
        elim = list(o.elimination_order)
        width = o.width
    else:
        elim = [v for v in order if v in g.adj]
        if sorted(elim) != g.nodes():
            raise ParameterError("elimination order does not cover the unobserved variables")
        width = induced_width(g, Ordering(tuple(reversed(elim)), 0))
    if width > max_width:
        raise WidthGuardError(width, max_width)
    kept = set(keep)
    return [v for v in elim if v not in kept]


def _eliminate(factors: list[Factor], order: Iterable[int]) -> list[Factor]:
    pool = list(factors)
    for v in order:
        bucket = [f for f in pool if v in f.scope]
        if not bucket:
            continue
        pool = [f for f in pool if v not in f.scope]
        prod = bucket[0]
        for f in bucket[1:]:
            prod = factor_product(prod, f)
        pool.append(factor_sum_out(prod, v))
    return pool


def _log_scalar_product(factors: Iterable[Factor]) -> float:
    total = 0.0
    for f in factors:
        s = float(f.table.sum())
        if s <= 0.0:
            return -math.inf
        total += math.log(s)
    return total


def be_evidence_prob(
    net: BayesNet,
    e: Mapping[int, int],
    order: Sequence[int] | None = None,
    max_width: int = DEFAULT_WIDTH_CAP,
) -> float:
    """P(e) by variable elimination over the evidence-sliced CPTs."""
    e = check_evidence(net, e)
    elim = _elimination_order(net, e, order=order, max_width=max_width)
    factors = [factor_reduce(cpt_factor(net, i), e) for i in range(net.n)]
    return math.exp(_log_scalar_product(_eliminate(factors, elim)))


def be_marginal(
    net: BayesNet,
    e: Mapping[int, int],
    q: int,
    order: Sequence[int] | None = None,
    max_width: int = DEFAULT_WIDTH_CAP,
) -> np.ndarray:
    """P(q | e) by eliminating every unobserved variable except ``q``."""
    e = check_evidence(net, e)
    q = net.var(q)
    if q in e:
        raise ParameterError(f"query variable {net.names[q]!r} is observed")
    elim = _elimination_order(net, e, keep=[q], order=order, max_width=max_width)
    factors = [factor_reduce(cpt_factor(net, i), e) for i in range(net.n)]
    rest = _eliminate(factors, elim)
    result = np.ones(net.cards[q])
    for f in rest:
        if f.scope == (q,):
            result = result * f.table
        elif f.scope:
            raise AssertionError(f"unexpected residual scope {f.scope}")
        else:
            result = result * float(f.table)
    z = result.sum()
    if not z > 0.0:
        raise ZeroEvidenceError("P(e) = 0")
    return result / z


class BucketTree:
    """Compiled two-pass bucket elimination over a fixed list of factor scopes.

    ``order`` is the elimination order; each factor lives in the bucket of its
    earliest-eliminated variable and each bucket sends one message to the bucket of
    its earliest-eliminated separator variable.
    """

    def __init__(self, scopes: Sequence[tuple[int, ...]], order: Sequence[int], cards: Mapping[int, int]):
        self.order = tuple(order)
        # keeps each bucket variable present in every einsum of its bucket
        self._ones = [np.ones(cards[v]) for v in self.order]
        pos = {v: k for k, v in enumerate(self.order)}
        nb = len(self.order)
        self.scopes = [tuple(s) for s in scopes]
        self.constants = [j for j, s in enumerate(self.scopes) if not s]
        self.bucket_factors: list[list[int]] = [[] for _ in range(nb)]
        for j, s in enumerate(self.scopes):
            if s:
                self.bucket_factors[min(pos[v] for v in s)].append(j)
        self.children: list[list[int]] = [[] for _ in range(nb)]
        self.parent: list[int | None] = [None] * nb
        self.sep: list[tuple[int, ...]] = [()] * nb
        self.cluster: list[tuple[int, ...]] = [()] * nb
        for k in range(nb):
            vs = {self.order[k]}
            for j in self.bucket_factors[k]:
                vs.update(self.scopes[j])
            for c in self.children[k]:
                vs.update(self.sep[c])
            self.cluster[k] = tuple(sorted(vs, key=pos.__getitem__))
            self.sep[k] = self.cluster[k][1:]
            if self.sep[k]:
                p = pos[self.sep[k][0]]
                self.parent[k] = p
                self.children[p].append(k)
        self.width = max((len(c) - 1 for c in self.cluster), default=0)
        # einsum labels are local to each cluster
        self._labels = []
        for k in range(nb):
            lab = {v: i for i, v in enumerate(self.cluster[k])}
            self._labels.append(
                (
                    [[lab[v] for v in self.scopes[j]] for j in self.bucket_factors[k]],
                    {c: [lab[v] for v in self.sep[c]] for c in self.children[k]},
                    [lab[v] for v in self.sep[k]],
                    [0],
                )
            )

    def _operands(self, k, tables, lam, pi, skip=None):
        f_labs, c_labs, sep_lab, own = self._labels[k]
        ops = [self._ones[k], own]
        for j, lab in zip(self.bucket_factors[k], f_labs):
            ops.append(tables[j])
            ops.append(lab)
        for c in self.children[k]:
            if c != skip:
                ops.append(lam[c])
                ops.append(c_labs[c])
        if pi is not None and pi[k] is not None:
            ops.append(pi[k])
            ops.append(sep_lab)
        return ops

    def run(self, tables: Sequence[np.ndarray], marginals: bool = True):
        """Return ``(log Z, marginals)`` where marginals[k] belongs to ``order[k]``.

        ``log Z`` is ``-inf`` (and marginals ``None``) when the factors have zero mass.
        """
        logz = 0.0
        for j in self.constants:
            s = float(tables[j])
            if s <= 0.0:
                return -math.inf, None
            logz += math.log(s)
        nb = len(self.order)
        lam: list = [None] * nb
        for k in range(nb):
            ops = self._operands(k, tables, lam, None)
            msg = np.einsum(*ops, self._labels[k][2])
            s = float(msg.sum())
            if s <= 0.0:
                return -math.inf, None
            logz += math.log(s)
            lam[k] = msg / s
        if not marginals:
            return logz, None
        pi: list = [None] * nb
        margs: list = [None] * nb
        for k in reversed(range(nb)):
            ops = self._operands(k, tables, lam, pi)
            b = np.einsum(*ops, self._labels[k][3])
            margs[k] = b / b.sum()
            for c in self.children[k]:
                ops = self._operands(k, tables, lam, pi, skip=c)
                m = np.einsum(*ops, self._labels[k][1][c])
                pi[c] = m / m.sum()
        return logz, margs


class _Component:
    __slots__ = ("variables", "cpts", "index", "boundary", "tree", "var_slots", "offsets", "size")

    def __init__(self, net: BayesNet, variables, cpts, observed, order):
        self.variables = tuple(variables)
        self.cpts = tuple(cpts)
        self.index = []
        bnd = set()
        scopes = []
        for i in self.cpts:
            fam = net.family(i)
            self.index.append(tuple(v if v in observed else None for v in fam))
            bnd.update(v for v in fam if v in observed)
            scopes.append(tuple(v for v in fam if v not in observed))
        self.boundary = tuple(sorted(bnd))
        self.tree = BucketTree(scopes, order, {v: net.cards[v] for v in variables})
        # flat layout of the concatenated marginals, in variable order
        self.offsets = {}
        off = 0
        for v in self.variables:
            self.offsets[v] = off
            off += net.cards[v]
        self.size = off
        slot = {v: k for k, v in enumerate(self.tree.order)}
        self.var_slots = [slot[v] for v in self.variables]


class ConditionedNet:
    """A network compiled for repeated exact inference with a fixed observed set.

    The unobserved variables are split into connected components of the moral graph
    (observed nodes deleted). Each component's normalizing constant and marginals
    depend only on the values of its *boundary*: the observed variables that occur in
    its CPTs. Results are memoized per component and boundary assignment.
    """

    def __init__(
        self,
        net: BayesNet,
        observed: Iterable[int],
        order: Sequence[int] | None = None,
        max_width: int = DEFAULT_WIDTH_CAP,
        memoize: bool = True,
        max_cache: int = 200_000,
    ):
        self.net = net
        self.observed = frozenset(observed)
        self.memoize = memoize
        self.max_cache = max_cache
        g = moralize(net, self.observed)
        if order is None:
            elim = list(min_fill_ordering(g).elimination_order)
        else:
            elim = [v for v in order if v in g.adj]
            if sorted(elim) != g.nodes():
                raise ParameterError("elimination order does not cover the unobserved variables")
        comp_of = {}
        comps = g.components()
        for k, comp in enumerate(comps):
            for v in comp:
                comp_of[v] = k
        comp_cpts: list[list[int]] = [[] for _ in comps]
        self.observed_cpts: list[int] = []
        for i in range(net.n):
            free = [v for v in net.family(i) if v not in self.observed]
            if free:
                comp_cpts[comp_of[free[0]]].append(i)
            else:
                self.observed_cpts.append(i)
        self.components: list[_Component] = []
        for k, comp in enumerate(comps):
            sub_order = [v for v in elim if v in comp]
            self.components.append(_Component(net, sorted(comp), comp_cpts[k], self.observed, sub_order))
        self.width = max((c.tree.width for c in self.components), default=0)
        if self.width > max_width:
            raise WidthGuardError(self.width, max_width)
        self.component_of = {v: k for k, c in enumerate(self.components) for v in c.variables}
        self._logz_cache: list[dict] = [{} for _ in self.components]
        self._marg_cache: list[dict] = [{} for _ in self.components]
        self.evaluations = 0

    def _tables(self, comp: _Component, values: Sequence[int]):
        out = []
        for i, idx in zip(comp.cpts, comp.index):
            key = tuple(slice(None) if v is None else values[v] for v in idx)
            out.append(self.net.cpts[i][key])
        return out

    def component_key(self, k: int, values: Sequence[int]) -> tuple:
        return tuple(values[v] for v in self.components[k].boundary)

    def component_logz(self, k: int, values: Sequence[int], key: tuple | None = None) -> float:
        if key is None:
            key = self.component_key(k, values)
        cache = self._logz_cache[k]
        if self.memoize:
            hit = cache.get(key)
            if hit is not None:
                return hit
        comp = self.components[k]
        self.evaluations += 1
        logz, _ = comp.tree.run(self._tables(comp, values), marginals=False)
        if self.memoize and len(cache) < self.max_cache:
            cache[key] = logz
        return logz

    def component_marginals(self, k: int, values: Sequence[int], key: tuple | None = None):
        """Concatenated marginals of component ``k`` (variables in ascending order), or None if P = 0."""
        if key is None:
            key = self.component_key(k, values)
        cache = self._marg_cache[k]
        if self.memoize and key in cache:
            return cache[key]
        comp = self.components[k]
        self.evaluations += 1
        logz, margs = comp.tree.run(self._tables(comp, values), marginals=True)
        flat = None
        if margs is not None:
            flat = np.concatenate([margs[s] for s in comp.var_slots])
            flat.setflags(write=False)
        if self.memoize and len(cache) < self.max_cache:
            cache[key] = flat
            self._logz_cache[k].setdefault(key, logz)
        return flat

    def observed_log_weight(self, values: Sequence[int], cpts: Iterable[int] | None = None) -> float:
        total = 0.0
        for i in self.observed_cpts if cpts is None else cpts:
            p = float(self.net.cpts[i][tuple(values[v] for v in self.net.family(i))])
            if p <= 0.0:
                return -math.inf
            total += math.log(p)
        return total

    def log_prob(self, values: Sequence[int]) -> float:
        """log P(observed = values) summing out every unobserved variable."""
        total = self.observed_log_weight(values)
        for k in range(len(self.components)):
            if total == -math.inf:
                break
            total += self.component_logz(k, values)
        return total

    def marginals(self, values: Sequence[int]) -> dict[int, np.ndarray]:
        out = {}
        for k, comp in enumerate(self.components):
            flat = self.component_marginals(k, values)
            if flat is None:
                raise ZeroEvidenceError("P(e) = 0")
            for v in comp.variables:
                o = comp.offsets[v]
                out[v] = flat[o:o + self.net.cards[v]].copy()
        return dict(sorted(out.items()))


def all_marginals(
    net: BayesNet,
    e: Mapping[int, int],
    order: Sequence[int] | None = None,
    max_width: int = DEFAULT_WIDTH_CAP,
) -> dict[int, np.ndarray]:
    """P(v | e) for every unobserved ``v`` via one two-pass bucket-tree propagation."""
    e = check_evidence(net, e)
    cn = ConditionedNet(net, e, order=order, max_width=max_width, memoize=False)
    values = [0] * net.n
    for v, x in e.items():
        values[v] = x
    if cn.observed_log_weight(values) == -math.inf:
        raise ZeroEvidenceError("P(e) = 0")
    return cn.marginals(values)

