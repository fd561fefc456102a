"""Seeded generators for the synthetic benchmark families and for evidence.

Every generator is a pure function of its arguments: the same parameters and seed
always produce the same network, value for value.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ParameterError
from .model import BayesNet, Evidence

CHANNEL_PREFIX = "y_"
UNIFORM2 = (0.5, 0.5)


@dataclass(frozen=True)
class GenSpec:
    family: Literal["random", "twolayer", "grid", "coding"]
    params: dict = field(default_factory=dict)
    seed: int = 0

    def build(self) -> BayesNet:
        fn = {
            "random": gen_random,
            "twolayer": gen_twolayer,
            "grid": gen_grid,
            "coding": gen_coding,
        }.get(self.family)
        if fn is None:
            raise ParameterError(f"unknown benchmark family {self.family!r}")
        return fn(**self.params, seed=self.seed)


def _random_rows(rng: np.random.Generator, n_parents: int) -> np.ndarray:
    rows = rng.uniform(size=(2 ** n_parents, 2))
    return rows / rows.sum(axis=1, keepdims=True)


def gen_random(N: int, r: int, p: int = 3, seed: int = 0) -> BayesNet:
    """``r`` uniform roots; every later node takes ``p`` random lower-indexed parents."""
    if N < 1 or r < 1 or p < 1:
        raise ParameterError("N, r and p must be positive")
    if r > N or (r == N and N > 1):
        raise ParameterError("need r < N (or N = r = 1)")
    if r < N and p > r:
        raise ParameterError(f"node {r} has only {r} lower-indexed candidates for {p} parents")
    rng = np.random.default_rng(seed)
    parents, rows = [], []
    for i in range(N):
        if i < r:
            parents.append(())
            rows.append(UNIFORM2)
        else:
            ps = tuple(sorted(int(x) for x in rng.choice(i, size=p, replace=False)))
            parents.append(ps)
            rows.append(_random_rows(rng, p))
    return BayesNet.from_rows([f"x{i}" for i in range(N)], [2] * N, parents, rows)


def gen_twolayer(r: int, N: int, p: int = 3, seed: int = 0) -> BayesNet:
    """``r`` uniform roots and ``N - r`` leaves, each with ``p`` random root parents."""
    if r < 1 or p < 1 or r >= N:
        raise ParameterError("need 1 <= r < N and p >= 1")
    if p > r:
        raise ParameterError(f"cannot draw {p} parents from {r} roots")
    rng = np.random.default_rng(seed)
    parents: list[tuple[int, ...]] = [()] * r
    rows: list = [UNIFORM2] * r
    for _ in range(N - r):
        parents.append(tuple(sorted(int(x) for x in rng.choice(r, size=p, replace=False))))
        rows.append(_random_rows(rng, p))
    names = [f"r{i}" for i in range(r)] + [f"l{i}" for i in range(N - r)]
    return BayesNet.from_rows(names, [2] * N, parents, rows)


def gen_grid(rows: int, cols: int, seed: int = 0, diagonal: bool = False) -> BayesNet:
    """Directed grid: node (i, j) has parents (i-1, j) and (i, j-1), plus (i-1, j-1) if ``diagonal``."""
    if rows < 1 or cols < 1:
        raise ParameterError("grid dimensions must be positive")
    rng = np.random.default_rng(seed)
    parents, tables, names = [], [], []
    for i in range(rows):
        for j in range(cols):
            ps = []
            if i > 0:
                ps.append((i - 1) * cols + j)
            if j > 0:
                ps.append(i * cols + j - 1)
            if diagonal and i > 0 and j > 0:
                ps.append((i - 1) * cols + j - 1)
            ps = tuple(sorted(ps))
            names.append(f"g{i}_{j}")
            parents.append(ps)
            tables.append(_random_rows(rng, len(ps)))
    return BayesNet.from_rows(names, [2] * (rows * cols), parents, tables)


def gallager_parity(k: int, rng: np.random.Generator, row_weight: int = 3) -> list[tuple[int, ...]]:
    """``k`` parity checks over ``k`` code bits, each code bit used ``row_weight`` times.

    Slots are dealt from a shuffled multiset and reshuffled until no check repeats a bit.
    """
    if k < row_weight:
        raise ParameterError(f"need at least {row_weight} code bits")
    slots = np.repeat(np.arange(k), row_weight)
    for _ in range(10_000):
        rng.shuffle(slots)
        checks = slots.reshape(k, row_weight)
        if all(len(set(c)) == row_weight for c in checks.tolist()):
            return [tuple(sorted(int(x) for x in c)) for c in checks]
    # dense corner cases (tiny k) fall back to independent draws
    return [tuple(sorted(int(x) for x in rng.choice(k, size=row_weight, replace=False))) for _ in range(k)]


def read_parity(path) -> list[tuple[int, ...]]:
    """One parity check per line: whitespace-separated indices of its 3 code bits."""
    checks = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                bits = tuple(int(t) for t in line.split())
            except ValueError:
                raise ParameterError(f"parity line {lineno}: non-integer index") from None
            if len(bits) != 3 or len(set(bits)) != 3:
                raise ParameterError(f"parity line {lineno}: need 3 distinct code-bit indices")
            checks.append(bits)
    return checks


def _xor_rows(n_parents: int) -> np.ndarray:
    rows = np.zeros((2 ** n_parents, 2))
    for cfg in range(2 ** n_parents):
        rows[cfg, bin(cfg).count("1") % 2] = 1.0
    return rows


def gen_coding(
    k: int,
    seed: int = 0,
    flip: float = 0.05,
    parity: Sequence[Sequence[int]] | None = None,
) -> BayesNet:
    """Coding network: ``k`` code bits, ``k`` XOR parity bits, and one noisy channel child per bit.

    Variable layout: ``u0..u{k-1}``, ``p0..p{k-1}``, then channel outputs ``y_u*`` and ``y_p*``.
    ``parity`` overrides the random Gallager-style check assignment.
    """
    if k < 3:
        raise ParameterError("coding networks need k >= 3")
    if not 0.0 <= flip <= 1.0:
        raise ParameterError("flip probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    checks = gallager_parity(k, rng) if parity is None else [tuple(sorted(c)) for c in parity]
    if len(checks) != k or any(len(c) != 3 or not all(0 <= b < k for b in c) for c in checks):
        raise ParameterError(f"parity matrix must have {k} rows of 3 code-bit indices")
    names = [f"u{i}" for i in range(k)] + [f"p{i}" for i in range(k)]
    parents: list[tuple[int, ...]] = [()] * k + [tuple(c) for c in checks]
    tables: list = [UNIFORM2] * k + [_xor_rows(3)] * k
    bsc = np.array([[1.0 - flip, flip], [flip, 1.0 - flip]])
    for i in range(2 * k):
        names.append(CHANNEL_PREFIX + names[i])
        parents.append((i,))
        tables.append(bsc)
    return BayesNet.from_rows(names, [2] * (4 * k), parents, tables)


def forward_sample(net: BayesNet, rng: np.random.Generator, clamp: dict[int, int] | None = None) -> list[int]:
    """One ancestral sample; ``clamp`` fixes some variables instead of drawing them."""
    clamp = clamp or {}
    vals = [0] * net.n
    for v in net.topological_order:
        if v in clamp:
            vals[v] = clamp[v]
            continue
        row = net.cpts[v][tuple(vals[p] for p in net.parents[v])]
        u = rng.random() * row.sum()
        acc = 0.0
        x = len(row) - 1
        for j, pj in enumerate(row):
            acc += pj
            if u < acc:
                x = j
                break
        vals[v] = x
    return vals


def gen_evidence(
    net: BayesNet,
    count: int | None,
    policy: Literal["leaves", "channel", "any"] = "leaves",
    seed: int = 0,
) -> Evidence:
    """Pick ``count`` variables by ``policy`` (None = all eligible) and read their values off one forward sample."""
    if policy == "leaves":
        eligible = [v for v in range(net.n) if not net.children[v]]
    elif policy == "channel":
        eligible = [v for v in range(net.n) if net.names[v].startswith(CHANNEL_PREFIX)]
    elif policy == "any":
        eligible = list(range(net.n))
    else:
        raise ParameterError(f"unknown evidence policy {policy!r}")
    if count is None:
        count = len(eligible)
    if count < 0:
        raise ParameterError("evidence count must be nonnegative")
    if count == 0:
        return {}
    if not eligible:
        raise ParameterError(f"policy {policy!r} yields no eligible variables")
    if count > len(eligible):
        raise ParameterError(f"asked for {count} evidence variables, only {len(eligible)} eligible")
    rng = np.random.default_rng(seed)
    chosen = sorted(int(v) for v in rng.choice(eligible, size=count, replace=False))
    sample = forward_sample(net, rng)
    return {v: sample[v] for v in chosen}
