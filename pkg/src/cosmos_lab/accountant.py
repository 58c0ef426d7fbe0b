"""Element counts of optimizer states, per layer and per transformer block.

Counts are exact: dimensions may be ints or :class:`fractions.Fraction`, so
passing ``d = 1`` and ``r = Fraction(1, 20)`` yields the coefficient of d^2
directly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigError

#: Algorithms with their state conventions. ``soap-table`` stores M, V and
#: both Gram factors L (n x n), R (m x m) but no eigenbases.
STATE_ALGORITHMS = ("adam", "muon", "soap1", "soap-table", "cosmos", "cosmos2")
DEFAULT_RANK_RATIO = Fraction(1, 20)


@dataclass(frozen=True)
class LayerShape:
    rows: int
    cols: int
    kind: str = "matrix-hidden"

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise ConfigError(f"layer dimensions must be positive, got {self.rows}x{self.cols}")


@dataclass
class StateBudget:
    algorithm: str
    d: object
    r: object
    per_layer: dict = field(default_factory=dict)

    @property
    def total(self):
        return sum(self.per_layer.values())

    @property
    def coefficient(self) -> Fraction:
        """Total divided by d^2, exactly."""
        return Fraction(self.total) / (Fraction(self.d) ** 2)


def state_elems(algorithm: str, shape: LayerShape, r=None):
    """Number of stored reals for one layer (step counters excluded)."""
    m, n = max(shape.rows, shape.cols), min(shape.rows, shape.cols)
    if algorithm == "adam":
        return 2 * m * n
    if algorithm == "muon":
        return m * n
    if algorithm == "soap1":
        return 2 * m * n + 2 * n * n
    if algorithm == "soap-table":
        return 2 * m * n + n * n + m * m
    if algorithm in ("cosmos", "cosmos2"):
        if r is None or r <= 0 or r > n:
            raise ConfigError(f"rank must satisfy 0 < r <= {n}, got {r}", "rank")
        if algorithm == "cosmos":
            return m * n + n * r + r * r + m * r
        # S, R and V are all r x r
        return m * n + n * r + m * r + 3 * r * r
    raise ConfigError(f"unknown algorithm {algorithm!r}; expected one of {STATE_ALGORITHMS}")


def transformer_layers(d) -> dict:
    """Attention Q, K, V, O (d x d) and MLP W1 (d x 4d), W2 (4d x d)."""
    layers = {name: LayerShape(d, d) for name in ("W_Q", "W_K", "W_V", "W_O")}
    layers["W_1"] = LayerShape(d, 4 * d)
    layers["W_2"] = LayerShape(4 * d, d)
    return layers


def transformer_budget(algorithm: str, d, r=None) -> StateBudget:
    """State budget of one canonical block; ``r`` defaults to round(0.05 d)."""
    if r is None:
        r = DEFAULT_RANK_RATIO * d
        if isinstance(d, int):
            r = max(1, round(r))
    budget = StateBudget(algorithm, d, r)
    for name, shape in transformer_layers(d).items():
        budget.per_layer[name] = state_elems(algorithm, shape, r)
    return budget


def budget_coefficient(algorithm: str, r_ratio=DEFAULT_RANK_RATIO) -> Fraction:
    """Exact coefficient of d^2 with r = r_ratio * d."""
    return transformer_budget(algorithm, Fraction(1), Fraction(r_ratio)).coefficient


LABELS = {
    "adam": "Adam (M, V)",
    "muon": "MUON (M)",
    "soap1": "SOAP one-sided (M, V, L, U)",
    "soap-table": "SOAP table convention (M, V, L, R)",
    "cosmos": "COSMOS (M, U, S, V)",
    "cosmos2": "COSMOS two-sided (M, U, O, S, R, V)",
}
REPORT_COLUMNS = ("algorithm", "state", "elements", "coef_d2", "coef_d2_rounded",
                  "coef_d2_at_r_0.05d")


def memory_report(d: int, r: int) -> list[dict]:
    """One row per algorithm/convention for the canonical block."""
    if d < 1:
        raise ConfigError("d must be >= 1", "d")
    if r < 1:
        raise ConfigError("r must be >= 1", "r")
    rows = []
    for alg in STATE_ALGORITHMS:
        budget = transformer_budget(alg, d, r)
        coef = budget.coefficient
        rows.append({
            "algorithm": alg,
            "state": LABELS[alg],
            "elements": budget.total,
            "coef_d2": coef,
            "coef_d2_rounded": round(coef),
            "coef_d2_at_r_0.05d": budget_coefficient(alg),
        })
    return rows


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{float(value):.6f}"
    return str(value)


def report_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def report_text(rows) -> str:
    cells = [list(REPORT_COLUMNS)] + [[_fmt(row[c]) for c in REPORT_COLUMNS] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(REPORT_COLUMNS))]
    lines = []
    for k, r in enumerate(cells):
        lines.append("  ".join(c.ljust(w) if i < 2 else c.rjust(w)
                               for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
