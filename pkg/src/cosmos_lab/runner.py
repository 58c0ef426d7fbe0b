"""Run configuration, the training loop, sweeps and probes.

Config documents are JSON objects::

    {
      "problem":   {"name": "quadratic", "m": 16, "n": 8, "seed": 0},
      "optimizer": {"name": "cosmos", "lr": 5e-4, "rank": 4},
      "steps": 200,
      "record_every": 1,
      "seed": 0
    }

``problem`` and ``optimizer`` may also be bare names. Missing keys take the
defaults in ``PROBLEM_DEFAULTS`` and ``OPTIMIZER_DEFAULTS``.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError
from .linalg import frobenius_norm, gram_schmidt_qr, jacobi_svd, mat_sgn_exact, ns5
from .optim import OptimizerConfig, build_layer_optimizers, lr_at, route_params
from .problems import (MLPProblem, MatfacProblem, QuadraticProblem, build_problem,
                       finite_diff_grad, grad_rel_error)
from .rng import Rng, derive_seed

PROBLEM_DEFAULTS = {
    "quadratic": {"m": 16, "n": 8, "seed": 0, "cond": 10.0},
    "matfac": {"p": 64, "q": 64, "k": 8, "seed": 0, "noise": 0.01, "init_scale": 0.1},
    "mlp": {"d_in": 32, "d_hidden": 64, "d_out": 4, "n_samples": 512, "batch": 64,
            "seed": 0, "separation": 0.25},
}
_INT_KEYS = {"m", "n", "seed", "p", "q", "k", "d_in", "d_hidden", "d_out", "n_samples", "batch"}

# config key -> OptimizerConfig field
OPTIMIZER_KEYS = {
    "name": "algorithm", "lr": "lr", "lr_adam": "lr_adam", "gamma": "gamma", "rank": "rank",
    "beta1": "beta1", "beta2": "beta2", "eps": "eps", "mu": "mu", "warmup": "warmup_fraction",
    "soap_l_literal": "soap_l_literal", "cosmos2_sqrt_m": "cosmos2_sqrt_m",
}
OPTIMIZER_DEFAULTS = {"lr": 5e-4, "lr_adam": 2e-3, "gamma": "auto", "rank": 4, "beta1": 0.9,
                      "beta2": 0.98, "eps": 1e-8, "mu": 0.9, "warmup": 0.1,
                      "soap_l_literal": False, "cosmos2_sqrt_m": False}
RUN_KEYS = {"problem", "optimizer", "steps", "record_every", "seed", "out"}

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3


@dataclass(frozen=True)
class RunConfig:
    problem: dict
    optimizer: OptimizerConfig
    steps: int
    record_every: int = 1
    seed: int = 0
    out: str | None = None

    def to_dict(self) -> dict:
        opt = {key: getattr(self.optimizer, attr) for key, attr in OPTIMIZER_KEYS.items()}
        d = {"problem": dict(self.problem), "optimizer": opt, "steps": self.steps,
             "record_every": self.record_every, "seed": self.seed}
        if self.out is not None:
            d["out"] = self.out
        return d


@dataclass
class RunRecord:
    step: int
    loss: float
    lr: float
    grad_norms: dict
    update_norms: dict
    wall_time: float = 0.0


@dataclass
class RunResult:
    config: RunConfig
    records: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    final_loss: float = math.nan
    diverged: bool = False


def _check_number(value, path, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if integer and not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    return value


def _parse_problem(raw) -> dict:
    if isinstance(raw, str):
        raw = {"name": raw}
    if not isinstance(raw, dict):
        raise ConfigError("expected an object or a problem name", "problem")
    name = raw.get("name")
    if name not in PROBLEM_DEFAULTS:
        raise ConfigError(f"unknown problem {name!r}; expected one of {sorted(PROBLEM_DEFAULTS)}",
                          "problem.name")
    spec = {"name": name, **PROBLEM_DEFAULTS[name]}
    for key, value in raw.items():
        if key == "name":
            continue
        if key not in PROBLEM_DEFAULTS[name]:
            raise ConfigError("unknown key", f"problem.{key}")
        spec[key] = _check_number(value, f"problem.{key}", integer=key in _INT_KEYS)
    return spec


def _parse_optimizer(raw) -> OptimizerConfig:
    if isinstance(raw, str):
        raw = {"name": raw}
    if not isinstance(raw, dict):
        raise ConfigError("expected an object or an optimizer name", "optimizer")
    values = {"name": raw.get("name", "cosmos"), **OPTIMIZER_DEFAULTS}
    for key, value in raw.items():
        if key not in OPTIMIZER_KEYS:
            raise ConfigError("unknown key", f"optimizer.{key}")
        path = f"optimizer.{key}"
        if key in ("soap_l_literal", "cosmos2_sqrt_m"):
            if not isinstance(value, bool):
                raise ConfigError("expected true or false", path)
        elif key == "name":
            if not isinstance(value, str):
                raise ConfigError("expected a string", path)
        elif not (key == "gamma" and value == "auto"):
            _check_number(value, path, integer=key == "rank")
        values[key] = value
    return OptimizerConfig(**{OPTIMIZER_KEYS[k]: v for k, v in values.items()})


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    for key in doc:
        if key not in RUN_KEYS:
            raise ConfigError("unknown key", key)
    for key in ("problem", "optimizer", "steps"):
        if key not in doc:
            raise ConfigError("missing required key", key)
    steps = _check_number(doc["steps"], "steps", integer=True)
    if steps < 1:
        raise ConfigError("must be >= 1", "steps")
    record_every = _check_number(doc.get("record_every", 1), "record_every", integer=True)
    if record_every < 1:
        raise ConfigError("must be >= 1", "record_every")
    seed = _check_number(doc.get("seed", 0), "seed", integer=True)
    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("expected a path string", "out")
    problem = _parse_problem(doc["problem"])
    optimizer = _parse_optimizer(doc["optimizer"])
    optimizer.schedule(steps, optimizer.lr)  # validates warmup against steps
    route_params(build_problem(problem).manifest, optimizer)  # validates rank per parameter
    return RunConfig(problem, optimizer, steps, record_every, seed, out)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config document, applying defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return config_from_dict(doc)


def train(cfg: RunConfig) -> RunResult:
    """Run the configured optimization and collect records."""
    # overflow is detected through the loss and reported as divergence
    with np.errstate(over="ignore", invalid="ignore"):
        return _train(cfg)


def _train(cfg: RunConfig) -> RunResult:
    problem = build_problem(cfg.problem)
    ocfg = cfg.optimizer
    params = problem.init_params(cfg.seed)
    layers = build_layer_optimizers(problem.manifest, ocfg, seed=derive_seed(cfg.seed, 99))
    schedules = {name: ocfg.schedule(cfg.steps, opt.assignment.base_lr)
                 for name, opt in layers.items()}
    matrix_schedule = ocfg.schedule(cfg.steps, ocfg.lr)
    result = RunResult(cfg)
    names = [p[0] for p in problem.params]
    for t in range(cfg.steps):
        start = time.perf_counter()
        loss, grads = problem.loss_and_grad(params, t)
        grad_norms = {name: frobenius_norm(grads[name]) for name in names}
        if not (math.isfinite(loss) and all(math.isfinite(g) for g in grad_norms.values())):
            result.records.append(RunRecord(t, loss, lr_at(matrix_schedule, t), grad_norms,
                                            {name: math.nan for name in names}))
            result.diverged = True
            result.params = params
            return result
        update_norms = {}
        for name in names:
            W = params[name]
            W_new = layers[name].step(W, grads[name], lr_at(schedules[name], t))
            update_norms[name] = frobenius_norm(W_new - W)
            params[name] = W_new
        if t % cfg.record_every == 0 or t == cfg.steps - 1:
            result.records.append(RunRecord(t, loss, lr_at(matrix_schedule, t), grad_norms,
                                            update_norms, time.perf_counter() - start))
    result.params = params
    result.final_loss = problem.full_loss(params)
    if not math.isfinite(result.final_loss):
        result.diverged = True
    return result


def execute_run(cfg: RunConfig) -> list:
    """Run ``cfg`` and return its records; raises DivergenceError on a non-finite loss.

    The raised error carries the partial records as ``exc.records``.
    """
    result = train(cfg)
    if result.diverged:
        exc = DivergenceError(f"loss became non-finite at step {result.records[-1].step}")
        exc.records = result.records
        raise exc
    return result.records


def _g(x) -> str:
    return format(float(x), ".17g")


def records_csv(records, param_names) -> str:
    """Records as CSV text: ``step,loss,lr,grad_norm_<p>...,update_norm_<p>...``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "loss", "lr"] + [f"grad_norm_{p}" for p in param_names]
                    + [f"update_norm_{p}" for p in param_names])
    for rec in records:
        writer.writerow([rec.step, _g(rec.loss), _g(rec.lr)]
                        + [_g(rec.grad_norms[p]) for p in param_names]
                        + [_g(rec.update_norms[p]) for p in param_names])
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def param_names(cfg: RunConfig) -> list:
    return [p[0] for p in build_problem(cfg.problem).params]


# ---------------------------------------------------------------------------
# sweeps

SUMMARY_COLUMNS = ("run_id", "algorithm", "lr", "lr_adam", "gamma", "rank", "final_loss",
                   "status", "records")


def _set_dotted(doc: dict, key: str, value) -> None:
    parts = key.split(".")
    node = doc
    for part in parts[:-1]:
        child = node.get(part)
        if isinstance(child, str):
            child = {"name": child}
        elif child is None:
            child = {}
        node[part] = child = dict(child)
        node = child
    node[parts[-1]] = value


def expand_sweep(doc) -> list:
    """Expand a sweep document into a list of RunConfigs.

    ``doc`` is either a list of run configs, or ``{"base": {...}, "grid":
    {"optimizer.lr": [...], ...}}`` expanded as a cartesian product in key order.
    """
    if isinstance(doc, dict) and "grid" in doc:
        base = doc.get("base", {})
        grid = doc["grid"]
        if not isinstance(grid, dict) or not grid:
            raise ConfigError("grid must be a non-empty object", "grid")
        docs = []
        for combo in itertools.product(*grid.values()):
            d = json.loads(json.dumps(base))
            for key, value in zip(grid, combo):
                _set_dotted(d, key, value)
            docs.append(d)
    elif isinstance(doc, list):
        docs = doc
    else:
        raise ConfigError("sweep must be a list of configs or an object with 'grid'")
    if not docs:
        raise ConfigError("sweep contains no configs")
    configs = []
    for i, d in enumerate(docs):
        try:
            configs.append(config_from_dict(d))
        except ConfigError as exc:
            raise ConfigError(str(exc), f"runs[{i}]") from exc
    return configs


def _sweep_one(args):
    i, cfg, out_dir = args
    result = train(cfg)
    fname = f"run_{i:03d}.csv"
    if out_dir is not None:
        write_atomic(Path(out_dir) / fname, records_csv(result.records, param_names(cfg)))
    o = cfg.optimizer
    return {"run_id": i, "algorithm": o.algorithm, "lr": o.lr, "lr_adam": o.lr_adam,
            "gamma": o.effective_gamma, "rank": o.rank, "final_loss": result.final_loss,
            "status": "diverged" if result.diverged else "ok", "records": fname}


def sweep(configs, out_dir=None, jobs: int = 1) -> list:
    """Run every config on the shared problem and return one summary row each."""
    configs = list(configs)
    if not configs:
        raise ConfigError("sweep contains no configs")
    first = configs[0].problem
    for i, cfg in enumerate(configs):
        if cfg.problem != first:
            raise ConfigError("all runs in a sweep must share the same problem",
                              f"runs[{i}].problem")
    tasks = [(i, cfg, out_dir) for i, cfg in enumerate(configs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, tasks))
    else:
        rows = [_sweep_one(t) for t in tasks]
    if out_dir is not None:
        write_atomic(Path(out_dir) / "summary.csv", summary_csv(rows))
    return rows


def summary_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow([_g(row[c]) if isinstance(row[c], float) else row[c]
                         for c in SUMMARY_COLUMNS])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# probes

PROBE_COLUMNS = ("sample", "alignment", "sv_min", "sv_max")


def ns5_sample(rows: int, cols: int, seed: int, index: int, ensemble: str = "gaussian"):
    """The ``index``-th matrix of a probe ensemble."""
    X = Rng(derive_seed(seed, rows, cols, index)).normal((rows, cols))
    if ensemble == "gaussian":
        return X
    if ensemble == "orthogonal":
        if rows >= cols:
            return gram_schmidt_qr(X)
        return gram_schmidt_qr(X.T).T
    raise ConfigError(f"unknown ensemble {ensemble!r}", "ensemble")


def alignment(A, B) -> float:
    """Cosine of the angle between A and B under the Frobenius inner product."""
    return float(np.sum(A * B) / (frobenius_norm(A) * frobenius_norm(B)))


def probe_ns5(rows: int = 32, cols: int = 16, samples: int = 100, seed: int = 0,
              ensemble: str = "gaussian") -> list:
    """Compare ns5 of normalized samples with the exact matrix sign."""
    if rows < 1 or cols < 1 or samples < 1:
        raise ConfigError("rows, cols and samples must be positive")
    out = []
    for i in range(samples):
        X = ns5_sample(rows, cols, seed, i, ensemble)
        Y = ns5(X / frobenius_norm(X))
        sv = jacobi_svd(Y)[1]
        out.append({"sample": i, "alignment": alignment(Y, mat_sgn_exact(X)),
                    "sv_min": float(sv[-1]), "sv_max": float(sv[0])})
    return out


def probe_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PROBE_COLUMNS)
    for row in rows:
        writer.writerow([row["sample"]] + [_g(row[c]) for c in PROBE_COLUMNS[1:]])
    return buf.getvalue()


#: Small instances for the finite-difference suite with their relative tolerances.
GRAD_CHECK_SUITE = (
    ("quadratic", lambda s: QuadraticProblem(6, 4, seed=s), 1e-6),
    ("matfac", lambda s: MatfacProblem(6, 5, 2, seed=s), 1e-6),
    ("mlp", lambda s: MLPProblem(4, 6, 3, n_samples=20, batch=5, seed=s), 1e-5),
)


def grad_check(points: int = 10, seed: int = 0, h: float = 1e-5) -> list:
    """Finite-difference check of every built-in problem at seeded points."""
    out = []
    for name, make, tol in GRAD_CHECK_SUITE:
        for i in range(points):
            s = derive_seed(seed, i)
            problem = make(s)
            params = problem.init_params(derive_seed(s, 1))
            batch = i % problem.n_batches
            _, analytic = problem.loss_and_grad(params, batch)
            numeric = finite_diff_grad(problem, params, h, batch)
            err = grad_rel_error(analytic, numeric)
            out.append({"problem": name, "point": i, "rel_error": err, "tol": tol,
                        "passed": err < tol})
    return out
