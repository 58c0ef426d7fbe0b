"""Seeded differentiable objectives with matrix-shaped parameters.

Every problem exposes a parameter manifest, a seeded initial point and
``loss_and_grad(params, batch_index)`` with hand-written gradients. All
randomness comes from :class:`cosmos_lab.rng.Rng`, so instances are
reproducible from their seed alone.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .linalg import gram_schmidt_qr
from .rng import Rng, derive_seed

MAX_COND = 50.0


class Problem:
    """Base class. Subclasses define ``params`` and ``loss_and_grad``."""

    name = "problem"
    n_batches = 1

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.params: list[tuple[str, int, int, str]] = []

    @property
    def manifest(self):
        """``(name, (rows, cols), kind)`` triples, the input to route_params."""
        return [(name, (rows, cols), kind) for name, rows, cols, kind in self.params]

    def init_params(self, seed: int = 0) -> dict:
        raise NotImplementedError

    def loss_and_grad(self, params: dict, batch_index: int = 0):
        raise NotImplementedError

    def loss(self, params: dict, batch_index: int = 0) -> float:
        return self.loss_and_grad(params, batch_index)[0]

    def full_loss(self, params: dict) -> float:
        """Loss over the whole data set (equals ``loss`` for unbatched problems)."""
        return self.loss(params, 0)


def _orthogonal(rng: Rng, n: int) -> np.ndarray:
    return gram_schmidt_qr(rng.normal((n, n)))


def _conditioned(rng: Rng, n: int, cond: float) -> np.ndarray:
    """Q1 diag(s) Q2' with singular values geometric in [cond^-1/2, cond^1/2]."""
    s = np.geomspace(cond ** -0.5, cond ** 0.5, n) if n > 1 else np.ones(1)
    return _orthogonal(rng, n) @ np.diag(s) @ _orthogonal(rng, n).T


class QuadraticProblem(Problem):
    """0.5 ||A (W - W*) C||_F^2 with well-conditioned A (m x m) and C (n x n)."""

    name = "quadratic"

    def __init__(self, m: int, n: int, seed: int = 0, cond: float = 10.0):
        super().__init__(seed)
        if not m >= n >= 1:
            raise ConfigError(f"quadratic problem needs m >= n >= 1, got {m}x{n}", "problem")
        if not 1.0 <= cond <= MAX_COND:
            raise ConfigError(f"cond must lie in [1, {MAX_COND}]", "problem.cond")
        self.m, self.n, self.cond = m, n, cond
        rng = Rng(derive_seed(seed, 11))
        self.A = _conditioned(rng, m, cond)
        self.C = _conditioned(rng, n, cond)
        self.W_star = rng.normal((m, n))
        self.params = [("W", m, n, "matrix-hidden")]

    def init_params(self, seed: int = 0) -> dict:
        return {"W": Rng(derive_seed(seed, 12)).normal((self.m, self.n))}

    def loss_and_grad(self, params, batch_index=0):
        E = params["W"] - self.W_star
        R = self.A @ E @ self.C
        grad = self.A.T @ R @ self.C.T
        return 0.5 * float(np.sum(R * R)), {"W": grad}


class MatfacProblem(Problem):
    """0.5 ||W1 W2 - Y||_F^2 with Y a seeded rank-k matrix plus noise."""

    name = "matfac"

    def __init__(self, p: int, q: int, k: int, seed: int = 0, noise: float = 0.01,
                 init_scale: float = 0.1):
        super().__init__(seed)
        if not 1 <= k <= min(p, q):
            raise ConfigError(f"need 1 <= k <= min(p, q), got k={k}", "problem.k")
        self.p, self.q, self.k = p, q, k
        self.init_scale = init_scale
        rng = Rng(derive_seed(seed, 21))
        self.Y = (rng.normal((p, k)) @ rng.normal((k, q))) / np.sqrt(k)
        if noise:
            self.Y = self.Y + noise * rng.normal((p, q))
        self.params = [("W1", p, k, "matrix-hidden"), ("W2", k, q, "matrix-hidden")]

    def init_params(self, seed: int = 0) -> dict:
        rng = Rng(derive_seed(seed, 22))
        return {"W1": self.init_scale * rng.normal((self.p, self.k)),
                "W2": self.init_scale * rng.normal((self.k, self.q))}

    def loss_and_grad(self, params, batch_index=0):
        W1, W2 = params["W1"], params["W2"]
        R = W1 @ W2 - self.Y
        return 0.5 * float(np.sum(R * R)), {"W1": R @ W2.T, "W2": W1.T @ R}


@lru_cache(maxsize=64)
def _epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    return Rng(derive_seed(seed, 31, epoch)).permutation(n)


class MLPProblem(Problem):
    """Two-layer tanh network with softmax cross-entropy on a Gaussian mixture.

    Parameters: ``W1`` (hidden x in, matrix-hidden), ``b1`` (1 x hidden,
    vector), ``W2`` (out x hidden, output head, embedding-like), ``b2``
    (1 x out, vector). Batch ``b`` is slice ``b % n_batches`` of a shuffled
    order drawn fresh for epoch ``b // n_batches``.
    """

    name = "mlp"

    def __init__(self, d_in: int, d_hidden: int, d_out: int, n_samples: int = 512,
                 batch: int = 64, seed: int = 0, separation: float = 0.25):
        super().__init__(seed)
        if not 1 <= batch <= n_samples:
            raise ConfigError(f"need 1 <= batch <= n_samples, got batch={batch}", "problem.batch")
        if d_out < 2:
            raise ConfigError("need at least two classes", "problem.d_out")
        self.d_in, self.d_hidden, self.d_out = d_in, d_hidden, d_out
        self.n_samples, self.batch = n_samples, batch
        self.n_batches = n_samples // batch
        rng = Rng(derive_seed(seed, 41))
        means = separation * rng.normal((d_out, d_in))
        self.y = np.arange(n_samples) % d_out
        self.X = means[self.y] + rng.normal((n_samples, d_in))
        self.params = [("W1", d_hidden, d_in, "matrix-hidden"), ("b1", 1, d_hidden, "vector"),
                       ("W2", d_out, d_hidden, "embedding-like"), ("b2", 1, d_out, "vector")]

    def init_params(self, seed: int = 0) -> dict:
        rng = Rng(derive_seed(seed, 42))
        return {"W1": rng.normal((self.d_hidden, self.d_in)) / np.sqrt(self.d_in),
                "b1": np.zeros((1, self.d_hidden)),
                "W2": rng.normal((self.d_out, self.d_hidden)) / np.sqrt(self.d_hidden),
                "b2": np.zeros((1, self.d_out))}

    def batch_indices(self, batch_index: int) -> np.ndarray:
        epoch, pos = divmod(int(batch_index), self.n_batches)
        order = _epoch_order(self.seed, epoch, self.n_samples)
        return order[pos * self.batch:(pos + 1) * self.batch]

    def _evaluate(self, params, X, y):
        h = np.tanh(X @ params["W1"].T + params["b1"])
        logits = h @ params["W2"].T + params["b2"]
        shifted = logits - logits.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        logp = shifted - logz
        B = X.shape[0]
        loss = -float(np.mean(logp[np.arange(B), y]))
        dlogits = np.exp(logp)
        dlogits[np.arange(B), y] -= 1.0
        dlogits /= B
        dpre = (dlogits @ params["W2"]) * (1.0 - h * h)
        grads = {"W1": dpre.T @ X, "b1": dpre.sum(axis=0, keepdims=True),
                 "W2": dlogits.T @ h, "b2": dlogits.sum(axis=0, keepdims=True)}
        return loss, grads

    def loss_and_grad(self, params, batch_index=0):
        idx = self.batch_indices(batch_index)
        return self._evaluate(params, self.X[idx], self.y[idx])

    def full_loss(self, params) -> float:
        return self._evaluate(params, self.X, self.y)[0]


def quadratic_problem(m: int, n: int, seed: int = 0, **kw) -> QuadraticProblem:
    return QuadraticProblem(m, n, seed, **kw)


def matfac_problem(p: int, q: int, k: int, seed: int = 0, **kw) -> MatfacProblem:
    return MatfacProblem(p, q, k, seed, **kw)


def mlp_problem(d_in: int, d_hidden: int, d_out: int, n_samples: int = 512, batch: int = 64,
                seed: int = 0, **kw) -> MLPProblem:
    return MLPProblem(d_in, d_hidden, d_out, n_samples, batch, seed, **kw)


def finite_diff_grad(problem: Problem, params: dict, h: float = 1e-5,
                     batch_index: int = 0) -> dict:
    """Central-difference gradient of ``problem.loss`` on a fixed batch (oracle)."""
    if h <= 0:
        raise ValueError("step h must be positive")
    work = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    out = {}
    for name, value in work.items():
        g = np.zeros_like(value)
        flat, gflat = value.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = problem.loss(work, batch_index)
            flat[i] = orig - h
            down = problem.loss(work, batch_index)
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * h)
        out[name] = g
    return out


def grad_rel_error(analytic: dict, numeric: dict) -> float:
    """Largest per-parameter ||a - n||_F / max(||a||_F, ||n||_F)."""
    worst = 0.0
    for name, a in analytic.items():
        d = np.linalg.norm(a - numeric[name])
        scale = max(np.linalg.norm(a), np.linalg.norm(numeric[name]))
        worst = max(worst, d / scale if scale > 0 else d)
    return float(worst)


def build_problem(spec: dict) -> Problem:
    """Instantiate a problem from a ``{"name": ..., **dimensions}`` mapping."""
    spec = dict(spec)
    name = spec.pop("name", None)
    factories = {"quadratic": QuadraticProblem, "matfac": MatfacProblem, "mlp": MLPProblem}
    if name not in factories:
        raise ConfigError(f"unknown problem {name!r}; expected one of {sorted(factories)}",
                          "problem.name")
    try:
        return factories[name](**spec)
    except TypeError as exc:
        raise ConfigError(str(exc), "problem") from exc
