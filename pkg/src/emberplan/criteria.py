"""Impact criteria registry and multi-criteria cost vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Criterion:
    name: str
    units: str
    description: str = ""


# Default registry: expected burned area, assets hit, money spent.
DEFAULT_CRITERIA: tuple[Criterion, ...] = (
    Criterion("burned_area", "ha", "expected burned area"),
    Criterion("asset_cells", "cell", "expected asset cells burned"),
    Criterion("resource_cost", "EUR", "committed resource cost"),
)


@dataclass(frozen=True)
class CostVector:
    """Values aligned with a criterion tuple; all finite."""

    values: tuple[float, ...]
    criteria: tuple[Criterion, ...] = DEFAULT_CRITERIA

    def __post_init__(self):
        if len(self.values) != len(self.criteria):
            raise ValueError(
                f"{len(self.values)} values for {len(self.criteria)} criteria")
        if not all(np.isfinite(v) for v in self.values):
            raise ValueError(f"non-finite cost vector {self.values}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __getitem__(self, name: str) -> float:
        for crit, v in zip(self.criteria, self.values):
            if crit.name == name:
                return v
        raise KeyError(name)

    def scalarize(self, weights: tuple[float, ...]) -> float:
        if len(weights) != len(self.values):
            raise ValueError("weight count does not match criteria count")
        return float(np.dot(weights, self.values))


def dominates(a: CostVector, b: CostVector) -> bool:
    """Minimization dominance: a <= b everywhere and strictly better somewhere."""
    av, bv = a.as_array(), b.as_array()
    return bool(np.all(av <= bv) and np.any(av < bv))
