"""Assign an optimizer to each parameter and drive per-layer state."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError
from ..rng import derive_seed
from ._common import oriented_shape
from .adam import adam_init, adam_step
from .config import OptimizerConfig
from .cosmos import cosmos2_init, cosmos2_step, cosmos_init, cosmos_step
from .muon import muon_init, muon_step
from .soap import soap1_init, soap1_step

KINDS = ("matrix-hidden", "embedding-like", "vector")


@dataclass(frozen=True)
class Assignment:
    name: str
    shape: tuple
    kind: str
    algorithm: str
    base_lr: float


def route_params(params, cfg: OptimizerConfig) -> dict:
    """Map ``(name, shape, kind)`` triples to optimizer assignments.

    Hidden matrices get the configured algorithm at ``cfg.lr``; embeddings,
    output heads and vectors get Adam at ``cfg.lr_adam``.
    """
    out = {}
    for name, shape, kind in params:
        if kind not in KINDS:
            raise ConfigError(f"unknown parameter kind {kind!r}", f"params.{name}")
        if kind == "matrix-hidden":
            if cfg.algorithm in ("cosmos", "cosmos2"):
                n = oriented_shape(shape)[1]
                if cfg.rank > n:
                    raise ConfigError(
                        f"rank {cfg.rank} exceeds the smaller dimension {n} of parameter "
                        f"{name!r} {tuple(shape)}", "optimizer.rank")
            out[name] = Assignment(name, tuple(shape), kind, cfg.algorithm, cfg.lr)
        else:
            out[name] = Assignment(name, tuple(shape), kind, "adam", cfg.lr_adam)
    return out


class LayerOptimizer:
    """Owns one parameter's optimizer state and applies steps to it."""

    def __init__(self, assignment: Assignment, cfg: OptimizerConfig, seed: int = 0):
        self.assignment = assignment
        self.cfg = cfg
        shape, alg = assignment.shape, assignment.algorithm
        if alg == "adam":
            self.state = adam_init(shape)
        elif alg == "muon":
            self.state = muon_init(shape)
        elif alg == "soap1":
            self.state = soap1_init(shape)
        elif alg == "cosmos":
            self.state = cosmos_init(shape, cfg.rank, seed)
        else:
            self.state = cosmos2_init(shape, cfg.rank, seed)

    def step(self, W, G, lr: float):
        cfg, alg = self.cfg, self.assignment.algorithm
        if alg == "adam":
            W, self.state = adam_step(W, G, self.state, lr=lr, beta1=cfg.beta1,
                                      beta2=cfg.beta2, eps=cfg.eps)
        elif alg == "muon":
            W, self.state = muon_step(W, G, self.state, lr=lr, mu=cfg.mu)
        elif alg == "soap1":
            W, self.state = soap1_step(W, G, self.state, lr=lr, beta1=cfg.beta1,
                                       beta2=cfg.beta2, eps=cfg.eps,
                                       l_literal=cfg.soap_l_literal)
        elif alg == "cosmos":
            W, self.state = cosmos_step(W, G, self.state, lr=lr, gamma=cfg.effective_gamma,
                                        beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
        else:
            W, self.state = cosmos2_step(W, G, self.state, lr=lr, gamma=cfg.effective_gamma,
                                         beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps,
                                         sqrt_m=cfg.cosmos2_sqrt_m)
        return W


def build_layer_optimizers(params, cfg: OptimizerConfig, seed: int = 0) -> dict:
    routes = route_params(params, cfg)
    return {name: LayerOptimizer(a, cfg, derive_seed(seed, i))
            for i, (name, a) in enumerate(routes.items())}
