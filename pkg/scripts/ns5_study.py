"""Alignment study for ns5 versus the exact matrix sign.

Samples ten independent 100-matrix ensembles per shape with the same
generator as ``cosmos-lab probe-ns5`` and writes the statistics plus the
pinned threshold (study minimum rounded down to three decimals) to
tests/golden/ns5_study.json.
"""
import json
import math
from pathlib import Path

from cosmos_lab.runner import probe_ns5

OUT = Path(__file__).resolve().parents[1] / "tests" / "golden" / "ns5_study.json"
SHAPES = ((32, 16), (16, 8))
SEEDS = range(10)
SAMPLES = 100


def main():
    report = {"samples_per_seed": SAMPLES, "seeds": list(SEEDS), "shapes": {}}
    for rows, cols in SHAPES:
        per_seed = {}
        for seed in SEEDS:
            align = [r["alignment"] for r in probe_ns5(rows, cols, SAMPLES, seed)]
            per_seed[str(seed)] = {"min": min(align), "mean": sum(align) / len(align),
                                   "max": max(align)}
        study_min = min(s["min"] for s in per_seed.values())
        report["shapes"][f"{rows}x{cols}"] = {
            "per_seed": per_seed,
            "study_min": study_min,
            "threshold": math.floor(study_min * 1000) / 1000,
        }
        print(f"{rows}x{cols}: study min {study_min:.6f}")
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(report, indent=2) + "\n")


if __name__ == "__main__":
    main()
