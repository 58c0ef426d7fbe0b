"""MUON: Nesterov momentum orthogonalized by five Newton-Schulz steps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linalg import ZERO_TOL, frobenius_norm, ns5
from ._common import check_pair, oriented_shape


@dataclass(frozen=True)
class MuonState:
    M: np.ndarray
    t: int = 0

    @property
    def n_elements(self) -> int:
        return self.M.size


def muon_init(shape) -> MuonState:
    return MuonState(M=np.zeros(oriented_shape(shape)), t=0)


def muon_direction(N) -> np.ndarray:
    """ns5(N / ||N||_F), or zero when N vanishes."""
    nrm = frobenius_norm(N)
    if nrm <= ZERO_TOL:
        return np.zeros_like(N)
    return ns5(N / nrm)


def muon_step(W, G, state: MuonState, *, lr: float, mu: float = 0.9):
    """One MUON step. Wide matrices are handled through their transpose."""
    W, G = check_pair(W, G)
    if W.shape[0] < W.shape[1]:
        W_new, new_state = muon_step(W.T, G.T, state, lr=lr, mu=mu)
        return W_new.T, new_state
    m = W.shape[0]
    M = mu * state.M + G
    B = muon_direction(mu * M + G)
    return W - lr * B * np.sqrt(m), MuonState(M=M, t=state.t + 1)
