"""Small canonical networks used in tests, docs and the CLI examples."""

from __future__ import annotations

import numpy as np

from .model import BayesNet


def chain3() -> BayesNet:
    """X1 -> X2 -> X3, binary; P(X1=1)=0.6, P(X2=1|X1)=(0.2, 0.7), P(X3=1|X2)=(0.1, 0.9)."""
    return BayesNet.from_rows(
        ["X1", "X2", "X3"],
        [2, 2, 2],
        [(), (0,), (1,)],
        [
            [0.4, 0.6],
            [0.8, 0.2, 0.3, 0.7],
            [0.9, 0.1, 0.1, 0.9],
        ],
    )


def _random_rows(rng: np.random.Generator, n_rows: int, card: int) -> np.ndarray:
    rows = rng.uniform(size=(n_rows, card))
    return rows / rows.sum(axis=1, keepdims=True)


def diamond(seed: int = 7) -> BayesNet:
    """A -> B, A -> C, B -> D, C -> D with uniform-random CPTs."""
    rng = np.random.default_rng(seed)
    parents = [(), (0,), (0,), (1, 2)]
    rows = [_random_rows(rng, 2 ** len(ps), 2) for ps in parents]
    return BayesNet.from_rows(["A", "B", "C", "D"], [2] * 4, parents, rows)


def collider() -> BayesNet:
    """A -> C <- B with fixed CPTs."""
    return BayesNet.from_rows(
        ["A", "B", "C"],
        [2, 2, 2],
        [(), (), (0, 1)],
        [[0.3, 0.7], [0.5, 0.5], [0.9, 0.1, 0.4, 0.6, 0.2, 0.8, 0.05, 0.95]],
    )
