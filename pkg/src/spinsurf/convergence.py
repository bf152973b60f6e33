"""Refinement ladders and observed convergence orders."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# node counts: 32, 64 and 128 intervals per side
DEFAULT_LADDER = (33, 65, 129)

# default tolerances, overridable per scenario
TOLERANCES = {
    "order": 1.9,
    "unit_drift": 1e-6,
    "exact": 1e-12,
    "quadric": 1e-10,
    "ratio": 3.0,
    "lawson_factor": 3.0,
    "indicator": 1e-12,
    "involution": 1e-10,
}


def observed_order(errors, hs=None) -> np.ndarray:
    """log(e_k / e_{k+1}) / log(h_k / h_{k+1}) for consecutive refinements.

    ``hs`` defaults to a halving ladder. Zero errors give an infinite order.
    """
    e = np.asarray(errors, dtype=float)
    if e.ndim != 1 or e.size < 2:
        raise ValueError("need at least two errors")
    if hs is None:
        h = 0.5 ** np.arange(e.size)
    else:
        h = np.asarray(hs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
    out = np.where((e[:-1] > 0) & (e[1:] == 0), np.inf, out)
    return out


@dataclass
class Study:
    """Values of a named error measure along a refinement ladder."""

    name: str
    sizes: list[int]
    hs: list[float]
    values: list[float] = field(default_factory=list)

    @property
    def orders(self) -> list[float]:
        if len(self.values) < 2:
            return []
        return [float(x) for x in observed_order(self.values, self.hs)]

    @property
    def min_order(self) -> float:
        o = self.orders
        return min(o) if o else float("nan")

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "h": list(self.hs),
            "values": list(self.values),
            "orders": self.orders,
        }


def check(value: float, bound: float, kind: str = "max") -> bool:
    """``value <= bound`` for kind 'max', ``value >= bound`` for kind 'min'."""
    if not np.isfinite(value) and not (kind == "min" and value == np.inf):
        return False
    return value <= bound if kind == "max" else value >= bound
