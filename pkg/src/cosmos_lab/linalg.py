"""Dense linear-algebra kernels and the exact oracles used to check them.

Matrices are plain 2-D ``float64`` numpy arrays. The production path
(QR, NS5, NORM) never calls an SVD or eigensolver; ``mat_sgn_exact``,
``jacobi_svd``, ``sym_eig_topr`` and ``householder_qr`` are test oracles.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, PreconditionError, ShapeError
from .rng import Rng, derive_seed

#: Quintic Newton-Schulz coefficients (a, b, c).
NS5_COEFFS = (3.4445, -4.7750, 2.0315)
NS5_STEPS = 5

#: Frobenius norms at or below this are treated as exactly zero.
ZERO_TOL = 1e-30
#: QR breakdown threshold, relative to the largest input column norm.
RANK_RTOL = 1e-12
#: Base seed for refilling rank-deficient QR columns.
REFILL_SEED = 0x5EED_0F_C05305


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Validate ``X`` as a finite, non-empty 2-D float64 array."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {A.shape}")
    if A.size == 0:
        raise ShapeError(f"{name} must be non-empty")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} contains non-finite entries")
    return A


def frobenius_norm(X) -> float:
    """Square root of the sum of squared entries."""
    A = np.asarray(X, dtype=np.float64)
    return float(np.sqrt(np.sum(A * A)))


def _refill_column(Q: np.ndarray, j: int) -> np.ndarray:
    m = Q.shape[0]
    rng = Rng(derive_seed(REFILL_SEED, m, j))
    while True:
        v = rng.normal(m)
        for _ in range(2):
            for i in range(j):
                v -= (Q[:, i] @ v) * Q[:, i]
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            return v / nv


def gram_schmidt_qr(X) -> np.ndarray:
    """Orthonormal basis of the column space of ``X`` (m x r, m >= r).

    Modified Gram-Schmidt with a second orthogonalization pass. A column whose
    residual norm drops to ``RANK_RTOL * max column norm`` or below is replaced
    by a seeded random unit vector orthogonal to the preceding columns, so the
    output always has r orthonormal columns.
    """
    A = as_matrix(X)
    m, r = A.shape
    if m < r:
        raise PreconditionError(f"QR needs rows >= cols, got {A.shape}")
    tol = RANK_RTOL * float(np.max(np.linalg.norm(A, axis=0)))
    Q = np.zeros((m, r))
    for j in range(r):
        v = A[:, j].copy()
        for _ in range(2):
            for i in range(j):
                v -= (Q[:, i] @ v) * Q[:, i]
        nv = np.linalg.norm(v)
        if nv <= tol:
            Q[:, j] = _refill_column(Q, j)
        else:
            Q[:, j] = v / nv
    return Q


def householder_qr(X) -> tuple[np.ndarray, np.ndarray]:
    """Thin Householder QR (oracle). Returns Q (m x r) and upper-triangular R (r x r)."""
    A = as_matrix(X).copy()
    m, r = A.shape
    if m < r:
        raise PreconditionError(f"QR needs rows >= cols, got {A.shape}")
    vs = []
    for k in range(r):
        x = A[k:, k]
        alpha = -np.copysign(np.linalg.norm(x), x[0])
        v = x.copy()
        v[0] -= alpha
        nv = np.linalg.norm(v)
        if nv > 0:
            v /= nv
            A[k:, k:] -= 2.0 * np.outer(v, v @ A[k:, k:])
        vs.append(v)
    R = np.triu(A[:r, :r])
    Q = np.eye(m, r)
    for k in reversed(range(r)):
        v = vs[k]
        Q[k:, :] -= 2.0 * np.outer(v, v @ Q[k:, :])
    return Q, R


def ns5(X0) -> np.ndarray:
    """Five quintic Newton-Schulz steps, X <- aX + b XX'X + c XX'XX'X.

    The caller must normalize so that the Frobenius norm is at most one.
    """
    X = as_matrix(X0, "X0")
    nrm = frobenius_norm(X)
    if nrm > 1.0 + 1e-12:
        raise PreconditionError(f"ns5 input must have Frobenius norm <= 1, got {nrm!r}")
    a, b, c = NS5_COEFFS
    tall = X.shape[0] >= X.shape[1]
    for _ in range(NS5_STEPS):
        # XX'X = X(X'X): use the smaller Gram matrix
        if tall:
            gram = X.T @ X
            X = X @ (a * np.eye(gram.shape[0]) + b * gram + c * (gram @ gram))
        else:
            gram = X @ X.T
            X = (a * np.eye(gram.shape[0]) + b * gram + c * (gram @ gram)) @ X
    return X


def ns5_scalar(s: float) -> float:
    """Action of ns5 on a single singular value ``s``."""
    a, b, c = NS5_COEFFS
    for _ in range(NS5_STEPS):
        s = a * s + b * s**3 + c * s**5
    return s


def norm_op(X) -> np.ndarray:
    """sqrt(n) * X / ||X||_F, where n is the column count; zero saturates to zero."""
    A = np.asarray(X, dtype=np.float64)
    nrm = frobenius_norm(A)
    if nrm <= ZERO_TOL:
        return np.zeros_like(A)
    return np.sqrt(A.shape[1]) * A / nrm


def jacobi_svd(X, tol: float = 1e-15, max_sweeps: int = 100):
    """One-sided (Hestenes) Jacobi SVD (oracle).

    Rotates column pairs of X until mutually orthogonal, which diagonalizes
    X'X without forming it. Returns ``U (m x n), s (n,), V (n x n)`` with
    ``s`` descending; works on the transpose when m < n.
    """
    A = as_matrix(X)
    if A.shape[0] < A.shape[1]:
        V, s, U = jacobi_svd(A.T, tol, max_sweeps)
        return U, s, V
    A = A.copy()
    n = A.shape[1]
    V = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = A[:, p] @ A[:, p]
                beta = A[:, q] @ A[:, q]
                gamma = A[:, p] @ A[:, q]
                if abs(gamma) <= tol * np.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        if not rotated:
            break
    sv = np.linalg.norm(A, axis=0)
    order = np.argsort(-sv, kind="stable")
    sv, A, V = sv[order], A[:, order], V[:, order]
    U = np.zeros_like(A)
    nz = sv > 0
    U[:, nz] = A[:, nz] / sv[nz]
    return U, sv, V


def mat_sgn_exact(X) -> np.ndarray:
    """Orthogonal polar factor U V' of X via Jacobi SVD (oracle)."""
    A = as_matrix(X)
    if frobenius_norm(A) == 0.0:
        raise DomainError("matrix sign of an all-zero matrix is undefined")
    U, s, V = jacobi_svd(A)
    keep = s > s[0] * max(A.shape) * np.finfo(float).eps
    return U[:, keep] @ V[:, keep].T


def _check_orthonormal(U: np.ndarray, name: str) -> None:
    err = np.max(np.abs(U.T @ U - np.eye(U.shape[1])))
    if err > 1e-6:
        raise PreconditionError(f"{name} columns are not orthonormal (max error {err:.3g})")


def principal_angle(U, V, max_iter: int = 10_000) -> float:
    """Sine of the largest principal angle between span(U) and span(V).

    Computed as the spectral norm of (I - VV')U by power iteration on the
    small Gram matrix of the residual.
    """
    U = as_matrix(U, "U")
    V = as_matrix(V, "V")
    if U.shape[0] != V.shape[0]:
        raise ShapeError(f"ambient dimensions differ: {U.shape} vs {V.shape}")
    _check_orthonormal(U, "U")
    _check_orthonormal(V, "V")
    R = U - V @ (V.T @ U)
    gram = R.T @ R
    x = Rng(derive_seed(REFILL_SEED, 7)).normal(gram.shape[0]) + 1.0
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = gram @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        lam_new = float(x @ gram @ x)
        if abs(lam_new - lam) <= 1e-16 * max(lam_new, 1e-300):
            lam = lam_new
            break
        lam = lam_new
    return float(min(1.0, np.sqrt(max(lam, 0.0))))


def sym_eig_topr(H, r: int, tol: float = 1e-14, max_sweeps: int = 100):
    """Top-r eigenpairs of symmetric H by cyclic Jacobi rotations (oracle).

    Returns ``(U, lam)`` with U (n x r) orthonormal and ``lam`` descending.
    """
    A = as_matrix(H, "H")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ShapeError(f"H must be square, got {A.shape}")
    if not 1 <= r <= n:
        raise PreconditionError(f"need 1 <= r <= n, got r={r}, n={n}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > 1e-10 * scale:
        raise PreconditionError("H is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    total = np.linalg.norm(A)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if np.linalg.norm(A[offdiag]) <= tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    lam = np.diag(A).copy()
    order = np.argsort(-lam, kind="stable")[:r]
    return V[:, order], lam[order]
