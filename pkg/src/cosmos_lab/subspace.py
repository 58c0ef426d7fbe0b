"""Rank-r tracking of the gradient second-moment EMA.

The tracker keeps an orthonormal basis ``U`` (n x r) of the leading
eigenspace of ``H_t = beta2 H_{t-1} + (1 - beta2) G'G`` and the projected
moment ``S = U'HU`` (r x r). Each step replaces ``H_{t-1}`` by its surrogate
``U S U'`` and performs one power-iteration step. Every product is staged
through n x r or smaller buffers; no n x n matrix is ever formed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .linalg import as_matrix, gram_schmidt_qr
from .rng import Rng


@dataclass(frozen=True)
class TrackerState:
    U: np.ndarray
    S: np.ndarray

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def n_elements(self) -> int:
        return self.U.size + self.S.size


def tracker_init(n: int, r: int, seed: int = 0) -> TrackerState:
    """QR of a seeded Gaussian n x r matrix for ``U``; ``S = 0``."""
    if not 1 <= r <= n:
        raise ConfigError(f"rank must satisfy 1 <= r <= n, got r={r}, n={n}", "rank")
    U = gram_schmidt_qr(Rng(seed).normal((n, r)))
    return TrackerState(U=U, S=np.zeros((r, r)))


def tracker_step(state: TrackerState, G, beta2: float) -> TrackerState:
    """One power-iteration step against the surrogate EMA.

    ``U' = QR(beta2 U S + (1 - beta2) G'G U)`` and
    ``S' = U'^T (beta2 U S U' + (1 - beta2) G'G) U'``.
    """
    G = as_matrix(G, "G")
    U, S = state.U, state.S
    if G.shape[1] != U.shape[0]:
        raise ShapeError(f"gradient has {G.shape[1]} columns, tracker expects {U.shape[0]}")
    GU = G @ U                                        # m x r
    Y = beta2 * (U @ S) + (1.0 - beta2) * (G.T @ GU)  # n x r
    U_new = gram_schmidt_qr(Y)
    C = U.T @ U_new                                   # r x r
    GUn = G @ U_new                                   # m x r
    S_new = beta2 * (C.T @ S @ C) + (1.0 - beta2) * (GUn.T @ GUn)
    S_new = 0.5 * (S_new + S_new.T)
    return TrackerState(U=U_new, S=S_new)


def surrogate(state: TrackerState) -> np.ndarray:
    """Dense rank-r surrogate ``U S U'`` (oracle; allocates n x n)."""
    return state.U @ state.S @ state.U.T
