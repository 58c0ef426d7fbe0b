"""Elementwise Adam, used for vectors, embeddings and output heads."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import bias_corrected_quotient, check_pair


@dataclass(frozen=True)
class AdamState:
    M: np.ndarray
    V: np.ndarray
    t: int = 0

    @property
    def n_elements(self) -> int:
        return self.M.size + self.V.size


def adam_init(shape) -> AdamState:
    return AdamState(M=np.zeros(shape), V=np.zeros(shape), t=0)


def adam_step(W, G, state: AdamState, *, lr: float, beta1: float = 0.9,
              beta2: float = 0.98, eps: float = 1e-8):
    """One Adam step; epsilon sits inside the square root with V."""
    W, G = check_pair(W, G)
    M = beta1 * state.M + (1.0 - beta1) * G
    V = beta2 * state.V + (1.0 - beta2) * G * G
    W_new = W - lr * bias_corrected_quotient(M, V, state.t, beta1, beta2, eps)
    return W_new, AdamState(M=M, V=V, t=state.t + 1)
