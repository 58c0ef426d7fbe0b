"""One-sided SOAP: Adam in the eigenbasis of the right Gram matrix EMA."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linalg import gram_schmidt_qr
from ._common import bias_corrected_quotient, check_pair, oriented_shape


@dataclass(frozen=True)
class Soap1State:
    M: np.ndarray
    L: np.ndarray
    U: np.ndarray
    V: np.ndarray
    t: int = 0

    @property
    def n_elements(self) -> int:
        return self.M.size + self.L.size + self.U.size + self.V.size


def soap1_init(shape) -> Soap1State:
    m, n = oriented_shape(shape)
    return Soap1State(M=np.zeros((m, n)), L=np.zeros((n, n)), U=np.eye(n),
                      V=np.zeros((m, n)), t=0)


def soap1_step(W, G, state: Soap1State, *, lr: float, beta1: float = 0.9,
               beta2: float = 0.98, eps: float = 1e-8, l_literal: bool = False):
    """One one-sided SOAP step.

    ``L`` is an EMA of G'G unless ``l_literal`` is set, in which case it is the
    current G'G alone. The eigenbasis is refreshed every step by one QR of L U.
    """
    W, G = check_pair(W, G)
    if W.shape[0] < W.shape[1]:
        W_new, new_state = soap1_step(W.T, G.T, state, lr=lr, beta1=beta1, beta2=beta2,
                                      eps=eps, l_literal=l_literal)
        return W_new.T, new_state
    M = beta1 * state.M + (1.0 - beta1) * G
    gram = G.T @ G
    L = gram if l_literal else beta2 * state.L + (1.0 - beta2) * gram
    U = gram_schmidt_qr(L @ state.U)
    Gp = M @ U
    V = beta2 * state.V + (1.0 - beta2) * Gp * Gp
    A = bias_corrected_quotient(Gp, V, state.t, beta1, beta2, eps) @ U.T
    return W - lr * A, Soap1State(M=M, L=L, U=U, V=V, t=state.t + 1)
