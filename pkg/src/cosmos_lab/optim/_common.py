from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from ..linalg import as_matrix


def check_pair(W, G):
    W = as_matrix(W, "W")
    G = as_matrix(G, "G")
    if W.shape != G.shape:
        raise ShapeError(f"weight shape {W.shape} != gradient shape {G.shape}")
    return W, G


def oriented_shape(shape) -> tuple[int, int]:
    """(rows, cols) after transposing so that rows >= cols."""
    m, n = shape
    return (m, n) if m >= n else (n, m)


def bias_corrected_quotient(M, V, t: int, beta1: float, beta2: float, eps: float) -> np.ndarray:
    """(M / (1 - beta1^(t+1))) / sqrt((V + eps) / (1 - beta2^(t+1)))."""
    return (M / (1.0 - beta1 ** (t + 1))) / np.sqrt((V + eps) / (1.0 - beta2 ** (t + 1)))
