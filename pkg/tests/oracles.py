"""Straight-line scalar-loop transcriptions of the optimizer steps.

Everything here works on nested Python lists of floats with explicit loops
and shares no code with the package, so it can serve as an independent check
of the vectorized implementations. Inputs are assumed already oriented
(rows >= cols) and well conditioned (no QR breakdown).
"""
import math

A_NS, B_NS, C_NS = 3.4445, -4.7750, 2.0315


def zeros(m, n):
    return [[0.0] * n for _ in range(m)]


def tolist(X):
    return [[float(v) for v in row] for row in X]


def transpose(X):
    return [[X[i][j] for i in range(len(X))] for j in range(len(X[0]))]


def matmul(X, Y):
    m, k, n = len(X), len(Y), len(Y[0])
    out = zeros(m, n)
    for i in range(m):
        for j in range(n):
            s = 0.0
            for p in range(k):
                s += X[i][p] * Y[p][j]
            out[i][j] = s
    return out


def add(X, Y, a=1.0, b=1.0):
    return [[a * x + b * y for x, y in zip(rx, ry)] for rx, ry in zip(X, Y)]


def scale(X, a):
    return [[a * x for x in row] for row in X]


def fro(X):
    s = 0.0
    for row in X:
        for v in row:
            s += v * v
    return math.sqrt(s)


def qr(X):
    """Modified Gram-Schmidt with one re-orthogonalization pass."""
    m, r = len(X), len(X[0])
    Q = zeros(m, r)
    for j in range(r):
        v = [X[i][j] for i in range(m)]
        for _ in range(2):
            for k in range(j):
                d = 0.0
                for i in range(m):
                    d += Q[i][k] * v[i]
                for i in range(m):
                    v[i] -= d * Q[i][k]
        nv = math.sqrt(sum(x * x for x in v))
        assert nv > 1e-8, "oracle does not model QR breakdown"
        for i in range(m):
            Q[i][j] = v[i] / nv
    return Q


def ns5(X):
    for _ in range(5):
        Xt = transpose(X)
        XXtX = matmul(matmul(X, Xt), X)
        XXtXXtX = matmul(matmul(X, Xt), XXtX)
        X = [[A_NS * X[i][j] + B_NS * XXtX[i][j] + C_NS * XXtXXtX[i][j]
              for j in range(len(X[0]))] for i in range(len(X))]
    return X


def norm_op(X):
    f = fro(X)
    if f <= 1e-30:
        return zeros(len(X), len(X[0]))
    return scale(X, math.sqrt(len(X[0])) / f)


def quotient(M, V, t, b1, b2, eps):
    c1, c2 = 1.0 - b1 ** (t + 1), 1.0 - b2 ** (t + 1)
    return [[(M[i][j] / c1) / math.sqrt((V[i][j] + eps) / c2) for j in range(len(M[0]))]
            for i in range(len(M))]


def adam(W, G, M, V, t, lr, b1, b2, eps):
    M = add(M, G, b1, 1 - b1)
    V = [[b2 * V[i][j] + (1 - b2) * G[i][j] * G[i][j] for j in range(len(G[0]))]
         for i in range(len(G))]
    W = add(W, quotient(M, V, t, b1, b2, eps), 1.0, -lr)
    return W, M, V


def muon(W, G, M, lr, mu):
    m = len(W)
    M = add(M, G, mu, 1.0)
    N = add(M, G, mu, 1.0)
    f = fro(N)
    B = zeros(len(W), len(W[0])) if f <= 1e-30 else ns5(scale(N, 1.0 / f))
    W = add(W, B, 1.0, -lr * math.sqrt(m))
    return W, M


def soap1(W, G, M, L, U, V, t, lr, b1, b2, eps, literal=False):
    M = add(M, G, b1, 1 - b1)
    GtG = matmul(transpose(G), G)
    L = GtG if literal else add(L, GtG, b2, 1 - b2)
    U = qr(matmul(L, U))
    Gp = matmul(M, U)
    V = [[b2 * V[i][j] + (1 - b2) * Gp[i][j] ** 2 for j in range(len(Gp[0]))]
         for i in range(len(Gp))]
    A = matmul(quotient(Gp, V, t, b1, b2, eps), transpose(U))
    return add(W, A, 1.0, -lr), M, L, U, V


def track(U, S, G, b2):
    """Tracker step written with the dense n x n surrogate."""
    Ht = add(matmul(matmul(U, S), transpose(U)), matmul(transpose(G), G), b2, 1 - b2)
    Un = qr(matmul(Ht, U))
    Sn = matmul(matmul(transpose(Un), Ht), Un)
    r = len(Sn)
    Sn = [[0.5 * (Sn[i][j] + Sn[j][i]) for j in range(r)] for i in range(r)]
    return Un, Sn


def residual_branch(D, M, structural_zero):
    f = fro(D)
    if structural_zero or f <= max(1e-30, 1e-12 * fro(M)):
        return zeros(len(D), len(D[0]))
    return norm_op(ns5(scale(D, 1.0 / f)))


def cosmos(W, G, M, U, S, V, t, lr, gamma, b1, b2, eps):
    m, n = len(W), len(W[0])
    M = add(M, G, b1, 1 - b1)
    U, S = track(U, S, G, b2)
    GU = matmul(G, U)
    V = [[b2 * V[i][j] + (1 - b2) * GU[i][j] ** 2 for j in range(len(GU[0]))]
         for i in range(len(GU))]
    MU = matmul(M, U)
    A = matmul(quotient(MU, V, t, b1, b2, eps), transpose(U))
    D = add(M, matmul(MU, transpose(U)), 1.0, -1.0)
    B = residual_branch(D, M, len(U[0]) == n)
    Gt = add(A, B, 1.0, gamma * math.sqrt(m))
    W = add(W, norm_op(Gt), 1.0, -lr * math.sqrt(m))
    return W, M, U, S, V, A, B


def cosmos2(W, G, M, O, R, U, S, V, t, lr, gamma, b1, b2, eps, sqrt_m=False):
    m, n = len(W), len(W[0])
    M = add(M, G, b1, 1 - b1)
    U, S = track(U, S, G, b2)
    O, R = track(O, R, transpose(G), b2)
    core_g = matmul(matmul(transpose(O), G), U)
    V = [[b2 * V[i][j] + (1 - b2) * core_g[i][j] ** 2 for j in range(len(V[0]))]
         for i in range(len(V))]
    core_m = matmul(matmul(transpose(O), M), U)
    A = matmul(matmul(O, quotient(core_m, V, t, b1, b2, eps)), transpose(U))
    D = add(M, matmul(matmul(O, core_m), transpose(U)), 1.0, -1.0)
    B = residual_branch(D, M, len(O[0]) == m and len(U[0]) == n)
    Gt = add(A, B, 1.0, gamma * math.sqrt(m))
    W = add(W, norm_op(Gt), 1.0, -lr * (math.sqrt(m) if sqrt_m else 1.0))
    return W, M, O, R, U, S, V
