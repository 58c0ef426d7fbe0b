"""Desk-scale ordering benchmark: COSMOS against MUON and one-sided SOAP.

Each method gets its best final full-data loss over the lr grid. COSMOS
uses the rank ratio r/n = 64/768 (rank 64 on width-768 layers), rounded,
which gives r = 1 on matfac (n = 8) and r = 3 on the MLP hidden layer
(n = 32). Run as a script to rewrite tests/golden/ordering.json.
"""
import json
from pathlib import Path

from cosmos_lab.runner import config_from_dict, sweep

GOLDEN = Path(__file__).parent / "golden" / "ordering.json"
LR_GRID = (2e-4, 5e-4, 1e-3, 2e-3)
METHODS = ("muon", "soap1", "cosmos")
STEPS = 500
PROBLEMS = {
    "matfac": {"problem": {"name": "matfac", "p": 64, "q": 64, "k": 8, "seed": 0},
               "rank": 1},
    "mlp": {"problem": {"name": "mlp", "d_in": 32, "d_hidden": 64, "d_out": 4, "seed": 0},
            "rank": 3},
}
RATIO_BOUND = 1.05


def run_problem(name: str) -> dict:
    spec = PROBLEMS[name]
    configs = [config_from_dict({
        "problem": spec["problem"],
        "optimizer": {"name": alg, "lr": lr, "rank": spec["rank"]},
        "steps": STEPS, "record_every": STEPS, "seed": 0})
        for alg in METHODS for lr in LR_GRID]
    rows = sweep(configs)
    losses = {alg: {} for alg in METHODS}
    for row in rows:
        losses[row["algorithm"]][repr(row["lr"])] = row["final_loss"]
    best = {alg: min(v.values()) for alg, v in losses.items()}
    ratio = best["cosmos"] / min(best["muon"], best["soap1"])
    return {"final_loss": losses, "best": best, "ratio": ratio}


def run_all() -> dict:
    return {name: run_problem(name) for name in PROBLEMS}


if __name__ == "__main__":
    result = run_all()
    GOLDEN.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN.write_text(json.dumps(result, indent=2) + "\n")
    for name, r in result.items():
        print(f"{name}: best {r['best']} ratio {r['ratio']:.4f}")
