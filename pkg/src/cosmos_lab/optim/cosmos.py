"""COSMOS: SOAP-style adaptation on a tracked leading eigenspace, MUON on the rest.

Per layer the one-sided variant stores the momentum ``M`` (m x n), the
tracker (``U`` n x r, ``S`` r x r) and the projected second moment ``V``
(m x r). The two-sided variant adds a left tracker (``O`` m x r, ``R``
r x r) and shrinks ``V`` to r x r.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..linalg import ZERO_TOL, frobenius_norm, norm_op, ns5
from ..rng import derive_seed
from ..subspace import TrackerState, tracker_init, tracker_step
from ._common import bias_corrected_quotient, check_pair, oriented_shape

#: Residuals below this fraction of ||M||_F are rounding noise and treated as zero.
RESIDUAL_RTOL = 1e-12


@dataclass(frozen=True)
class CosmosState:
    M: np.ndarray
    tracker: TrackerState
    V: np.ndarray
    t: int = 0

    @property
    def n_elements(self) -> int:
        return self.M.size + self.tracker.n_elements + self.V.size


@dataclass(frozen=True)
class Cosmos2State:
    M: np.ndarray
    left: TrackerState
    right: TrackerState
    V: np.ndarray
    t: int = 0

    @property
    def n_elements(self) -> int:
        return self.M.size + self.left.n_elements + self.right.n_elements + self.V.size


def cosmos_init(shape, rank: int, seed: int = 0) -> CosmosState:
    m, n = oriented_shape(shape)
    if rank > n:
        raise ConfigError(f"rank {rank} exceeds the smaller dimension {n}", "optimizer.rank")
    return CosmosState(M=np.zeros((m, n)), tracker=tracker_init(n, rank, seed),
                       V=np.zeros((m, rank)), t=0)


def cosmos2_init(shape, rank: int, seed: int = 0) -> Cosmos2State:
    m, n = oriented_shape(shape)
    if rank > n:
        raise ConfigError(f"rank {rank} exceeds the smaller dimension {n}", "optimizer.rank")
    return Cosmos2State(M=np.zeros((m, n)),
                        left=tracker_init(m, rank, derive_seed(seed, 1)),
                        right=tracker_init(n, rank, derive_seed(seed, 2)),
                        V=np.zeros((rank, rank)), t=0)


def residual_direction(D, M, structurally_zero: bool = False) -> np.ndarray:
    """NORM(NS5(D / ||D||_F)), or zero when the residual D vanishes."""
    nrm = frobenius_norm(D)
    if structurally_zero or nrm <= max(ZERO_TOL, RESIDUAL_RTOL * frobenius_norm(M)):
        return np.zeros_like(D)
    return norm_op(ns5(D / nrm))


def cosmos_step(W, G, state: CosmosState, *, lr: float, gamma: float,
                beta1: float = 0.9, beta2: float = 0.98, eps: float = 1e-8):
    """One COSMOS step; returns ``(W_new, state_new)``.

    The weight change always has Frobenius norm ``lr * sqrt(m n)`` unless the
    combined direction is exactly zero.
    """
    W, G = check_pair(W, G)
    if W.shape[0] < W.shape[1]:
        W_new, new_state = cosmos_step(W.T, G.T, state, lr=lr, gamma=gamma,
                                       beta1=beta1, beta2=beta2, eps=eps)
        return W_new.T, new_state
    m = W.shape[0]
    A, B, new_state = cosmos_branches(G, state, beta1=beta1, beta2=beta2, eps=eps)
    G_tilde = A + gamma * B * np.sqrt(m)
    W_new = W - lr * norm_op(G_tilde) * np.sqrt(m)
    return W_new, new_state


def cosmos_branches(G, state: CosmosState, *, beta1: float = 0.9, beta2: float = 0.98,
                    eps: float = 1e-8):
    """State update plus the adaptive branch A and residual branch B.

    ``G`` must already be oriented (rows >= cols).
    """
    n = G.shape[1]
    M = beta1 * state.M + (1.0 - beta1) * G
    tracker = tracker_step(state.tracker, G, beta2)
    U = tracker.U
    GU = G @ U
    V = beta2 * state.V + (1.0 - beta2) * GU * GU
    MU = M @ U
    A = bias_corrected_quotient(MU, V, state.t, beta1, beta2, eps) @ U.T
    B = residual_direction(M - MU @ U.T, M, structurally_zero=U.shape[1] == n)
    return A, B, CosmosState(M=M, tracker=tracker, V=V, t=state.t + 1)


def cosmos2_step(W, G, state: Cosmos2State, *, lr: float, gamma: float,
                 beta1: float = 0.9, beta2: float = 0.98, eps: float = 1e-8,
                 sqrt_m: bool = False):
    """One two-sided COSMOS step.

    The left basis ``O`` tracks G G' and the right basis ``U`` tracks G'G; the
    adaptive branch lives on O' M U and the residual is M - O O' M U U'.
    The final step omits the sqrt(m) factor unless ``sqrt_m`` is set.
    """
    W, G = check_pair(W, G)
    if W.shape[0] < W.shape[1]:
        W_new, new_state = cosmos2_step(W.T, G.T, state, lr=lr, gamma=gamma, beta1=beta1,
                                        beta2=beta2, eps=eps, sqrt_m=sqrt_m)
        return W_new.T, new_state
    m, n = W.shape
    M = beta1 * state.M + (1.0 - beta1) * G
    right = tracker_step(state.right, G, beta2)
    left = tracker_step(state.left, G.T, beta2)
    U, O = right.U, left.U
    core_g = O.T @ G @ U
    V = beta2 * state.V + (1.0 - beta2) * core_g * core_g
    core_m = O.T @ M @ U
    A = O @ bias_corrected_quotient(core_m, V, state.t, beta1, beta2, eps) @ U.T
    full = O.shape[1] == m and U.shape[1] == n
    B = residual_direction(M - O @ core_m @ U.T, M, structurally_zero=full)
    G_tilde = A + gamma * B * np.sqrt(m)
    scale = np.sqrt(m) if sqrt_m else 1.0
    W_new = W - lr * norm_op(G_tilde) * scale
    return W_new, Cosmos2State(M=M, left=left, right=right, V=V, t=state.t + 1)
