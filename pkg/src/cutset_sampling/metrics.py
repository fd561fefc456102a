"""Accuracy and uncertainty measures for multi-chain marginal estimates."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import betainc

from .errors import ParameterError

Marginals = Mapping[int, np.ndarray]


def _aligned(exact: Marginals, approx: Marginals):
    ka, kb = set(exact), set(approx)
    if ka != kb:
        raise ParameterError(f"marginal maps disagree on variables: {sorted(ka ^ kb)}")
    pairs = []
    for v in sorted(ka):
        a = np.asarray(exact[v], dtype=float)
        b = np.asarray(approx[v], dtype=float)
        if a.shape != b.shape:
            raise ParameterError(f"variable {v}: {a.shape[0]} vs {b.shape[0]} values")
        pairs.append((v, a, b))
    if not pairs:
        raise ParameterError("no variables to compare")
    return pairs


def mse(exact: Marginals, approx: Marginals) -> float:
    """Squared error summed over every variable value, divided by the number of values."""
    pairs = _aligned(exact, approx)
    sq = sum(float(((a - b) ** 2).sum()) for _, a, b in pairs)
    return sq / sum(a.size for _, a, _ in pairs)


def avg_abs_error(exact: Marginals, approx: Marginals) -> float:
    """Absolute error summed over variable values, divided by ``N * sum_i |D(X_i)|``.

    ``N`` is the number of compared variables. The extra factor is deliberate and
    is pinned by a golden test.
    """
    pairs = _aligned(exact, approx)
    total = sum(float(np.abs(a - b).sum()) for _, a, b in pairs)
    return total / (len(pairs) * sum(a.size for _, a, _ in pairs))


def sample_variance(chain_estimates: Sequence[float] | np.ndarray) -> float | np.ndarray:
    """Unbiased variance across chains from running sums of x and x**2.

    Accepts a 1-D sequence (one scalar per chain) or an ``(M, ...)`` array, in which
    case the variance is taken along the first axis.
    """
    x = np.asarray(chain_estimates, dtype=float)
    m = x.shape[0] if x.ndim else 0
    if m < 2:
        raise ParameterError("sample variance needs at least two chains")
    s1 = x.sum(axis=0)
    s2 = (x * x).sum(axis=0)
    mean = s1 / m
    var = np.maximum((s2 - m * mean * mean) / (m - 1), 0.0)
    return float(var) if np.ndim(var) == 0 else var


def student_t_sf(t: float, df: int) -> float:
    """Upper tail P(T > t) of Student's t through the regularized incomplete beta."""
    x = df / (df + t * t)
    tail = 0.5 * betainc(df / 2.0, 0.5, x)
    return tail if t >= 0 else 1.0 - tail


def t_quantile(alpha: float, df: int) -> float:
    """Critical value ``t`` with ``P(T > t) = alpha / 2`` for ``df`` degrees of freedom."""
    if not 0.0 < alpha <= 1.0:
        raise ParameterError("alpha must lie in (0, 1]")
    if df < 1 or int(df) != df:
        raise ParameterError("degrees of freedom must be a positive integer")
    target = alpha / 2.0
    if target >= 0.5:
        return 0.0
    hi = 1.0
    while student_t_sf(hi, df) > target:
        hi *= 2.0
    return brentq(lambda t: student_t_sf(t, df) - target, 0.0, hi, xtol=1e-12, rtol=1e-12)


def confidence_interval(chain_estimates, alpha: float = 0.10):
    """``(pooled, half_width)`` with half-width ``t_quantile(alpha, M - 1) * S / sqrt(M)``."""
    x = np.asarray(chain_estimates, dtype=float)
    m = x.shape[0]
    s = np.sqrt(sample_variance(x))
    pooled = x.mean(axis=0)
    half = t_quantile(alpha, m - 1) * s / math.sqrt(m)
    if np.ndim(pooled) == 0:
        return float(pooled), float(half)
    return pooled, half


@dataclass
class VariableInterval:
    chain_estimates: np.ndarray  # (M, |D|)
    pooled: np.ndarray
    variance: np.ndarray
    half_width: np.ndarray


@dataclass
class MultiChainReport:
    chains: int
    alpha: float
    t_value: float
    variables: dict[int, VariableInterval]

    def pooled(self) -> dict[int, np.ndarray]:
        return {v: iv.pooled for v, iv in self.variables.items()}


@dataclass
class AccuracyReport:
    mse: float
    delta: float
    delta90: float
    abs_error: dict[int, np.ndarray]
    half_width: dict[int, np.ndarray]

    @property
    def ratio(self) -> float:
        return self.delta90 / self.delta if self.delta > 0 else math.inf

    def coverage(self) -> float:
        """Fraction of variable values whose true error lies within its interval."""
        hits = sum(int((self.abs_error[v] <= self.half_width[v]).sum()) for v in self.abs_error)
        return hits / sum(a.size for a in self.abs_error.values())


def multi_chain_report(per_chain: Sequence[Marginals], alpha: float = 0.10) -> MultiChainReport:
    m = len(per_chain)
    if m < 2:
        raise ParameterError("interval estimates need at least two chains")
    keys = set(per_chain[0])
    if any(set(c) != keys for c in per_chain):
        raise ParameterError("chains report different variables")
    t = t_quantile(alpha, m - 1)
    out = {}
    for v in sorted(keys):
        x = np.stack([np.asarray(c[v], dtype=float) for c in per_chain])
        var = sample_variance(x)
        out[v] = VariableInterval(x, x.mean(axis=0), var, t * np.sqrt(var) / math.sqrt(m))
    return MultiChainReport(m, alpha, t, out)


def build_report(exact: Marginals, per_chain: Sequence[Marginals], alpha: float = 0.10):
    """Return ``(AccuracyReport, MultiChainReport)`` for pooled chain estimates against ``exact``."""
    mc = multi_chain_report(per_chain, alpha)
    pooled = mc.pooled()
    pairs = _aligned(exact, pooled)
    n_vals = sum(a.size for _, a, _ in pairs)
    norm = len(pairs) * n_vals
    abs_err = {v: np.abs(a - b) for v, a, b in pairs}
    half = {v: mc.variables[v].half_width for v, _, _ in pairs}
    acc = AccuracyReport(
        mse=mse(exact, pooled),
        delta=sum(float(e.sum()) for e in abs_err.values()) / norm,
        delta90=sum(float(h.sum()) for h in half.values()) / norm,
        abs_error=abs_err,
        half_width=half,
    )
    return acc, mc
