"""Scenario designs over the uncertainty space (rule variant x forecast member
x parameters) with factorial and Latin-hypercube construction and weighted
expectation over (possibly partial) coverage."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .criteria import CostVector
from .fire import SpreadRuleVariant

DESIGN_SIZE_CAP = 4096
WEIGHT_TOL = 1e-12


class DesignSizeError(ValueError):
    pass


@dataclass(frozen=True)
class Distribution:
    """uniform(lo, hi) | triangular(lo, mode, hi) | fixed(value)."""

    kind: str
    lo: float = 0.0
    hi: float = 0.0
    mode: float = 0.0
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform", "triangular", "fixed"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "uniform" and self.lo > self.hi:
            raise ValueError("uniform: lo > hi")
        if self.kind == "triangular" and not self.lo <= self.mode <= self.hi:
            raise ValueError("triangular: need lo <= mode <= hi")

    @property
    def is_fixed(self) -> bool:
        return self.kind == "fixed"

    def ppf(self, q: float) -> float:
        """Inverse CDF; q in [0, 1]."""
        if self.kind == "fixed":
            return self.value
        if self.kind == "uniform":
            return self.lo + q * (self.hi - self.lo)
        # triangular
        lo, mode, hi = self.lo, self.mode, self.hi
        if hi == lo:
            return lo
        fc = (mode - lo) / (hi - lo)
        if q < fc:
            return lo + np.sqrt(q * (hi - lo) * (mode - lo))
        return hi - np.sqrt((1 - q) * (hi - lo) * (hi - mode))


def uniform(lo: float, hi: float) -> Distribution:
    return Distribution("uniform", lo=lo, hi=hi)


def triangular(lo: float, mode: float, hi: float) -> Distribution:
    return Distribution("triangular", lo=lo, mode=mode, hi=hi)


def fixed(value: float) -> Distribution:
    return Distribution("fixed", value=value)


@dataclass(frozen=True)
class UncertaintySpace:
    model_variants: tuple[SpreadRuleVariant, ...]
    forecast_members: tuple[tuple[str, float], ...]   # (member id, prior weight)
    parameter_dims: Mapping[str, Distribution]

    def __post_init__(self):
        if not self.model_variants:
            raise ValueError("need at least one model variant")
        if not self.forecast_members:
            raise ValueError("need at least one forecast member")
        if any(w <= 0 for _, w in self.forecast_members):
            raise ValueError("member priors must be positive")

    def continuous_dims(self) -> list[str]:
        return sorted(n for n, d in self.parameter_dims.items() if not d.is_fixed)

    def member_weights(self) -> np.ndarray:
        w = np.array([w for _, w in self.forecast_members], dtype=float)
        return w / w.sum()


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    variant: SpreadRuleVariant
    forecast_member_id: str
    parameters: Mapping[str, float]
    weight: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.weight <= 1.0:
            raise ValueError(f"scenario weight {self.weight} outside (0, 1]")


@dataclass(frozen=True)
class EnsembleDesign:
    scenarios: tuple[Scenario, ...]
    method: str   # FULL_FACTORIAL | LHS | MONTE_CARLO
    seed: int

    def __post_init__(self):
        ids = [s.scenario_id for s in self.scenarios]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate scenario ids")
        total = sum(s.weight for s in self.scenarios)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {total}, expected 1")

    def __len__(self) -> int:
        return len(self.scenarios)

    def by_id(self) -> dict[str, Scenario]:
        return {s.scenario_id: s for s in self.scenarios}

    def to_document(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "scenarios": [
                {
                    "id": s.scenario_id,
                    "variant": s.variant.value,
                    "member": s.forecast_member_id,
                    "parameters": dict(s.parameters),
                    "weight": s.weight,
                    "seed": s.seed,
                }
                for s in self.scenarios
            ],
        }


def design_from_document(doc: Mapping) -> EnsembleDesign:
    scenarios = tuple(
        Scenario(
            scenario_id=s["id"],
            variant=SpreadRuleVariant(s["variant"]),
            forecast_member_id=s["member"],
            parameters=s["parameters"],
            weight=s["weight"],
            seed=s["seed"],
        )
        for s in doc["scenarios"]
    )
    return EnsembleDesign(scenarios=scenarios, method=doc["method"], seed=doc["seed"])


def _scenario_seed(design_seed: int, index: int) -> int:
    x = (design_seed * 0x9E3779B97F4A7C15 + index * 0xBF58476D1CE4E5B9) & (2**64 - 1)
    x ^= x >> 31
    return x & (2**63 - 1)


def enumerate_factorial(space: UncertaintySpace, levels: int,
                        seed: int = 0, size_cap: int = DESIGN_SIZE_CAP) -> EnsembleDesign:
    """Cartesian product design; continuous dims discretized at mid-quantiles."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    cont = space.continuous_dims()
    n = len(space.model_variants) * len(space.forecast_members) * levels ** len(cont)
    if n > size_cap:
        raise DesignSizeError(
            f"factorial design of {len(space.model_variants)} variants x "
            f"{len(space.forecast_members)} members x {levels}^{len(cont)} levels "
            f"= {n} scenarios exceeds cap {size_cap}")

    quantiles = [(i + 0.5) / levels for i in range(levels)]
    member_w = space.member_weights()
    level_mass = (1.0 / levels) ** len(cont)
    variant_mass = 1.0 / len(space.model_variants)

    scenarios = []
    idx = 0
    for variant in space.model_variants:
        for (member_id, _), mw in zip(space.forecast_members, member_w):
            for combo in itertools.product(range(levels), repeat=len(cont)):
                params = {n_: d.value for n_, d in space.parameter_dims.items()
                          if d.is_fixed}
                for dim, li in zip(cont, combo):
                    params[dim] = float(space.parameter_dims[dim].ppf(quantiles[li]))
                scenarios.append(Scenario(
                    scenario_id=f"s{idx:04d}",
                    variant=variant,
                    forecast_member_id=member_id,
                    parameters=params,
                    weight=float(mw * level_mass * variant_mass),
                    seed=_scenario_seed(seed, idx),
                ))
                idx += 1
    # exact renormalization against float drift
    total = sum(s.weight for s in scenarios)
    scenarios = [
        Scenario(s.scenario_id, s.variant, s.forecast_member_id, s.parameters,
                 s.weight / total, s.seed)
        for s in scenarios
    ]
    return EnsembleDesign(scenarios=tuple(scenarios), method="FULL_FACTORIAL", seed=seed)


def sample_lhs(space: UncertaintySpace, n: int, seed: int = 0) -> EnsembleDesign:
    """Latin hypercube: one sample per 1-D stratum [i/n, (i+1)/n) per dim.

    Variants rotate round-robin; members are assigned deterministic shares
    proportional to their priors. Equal scenario weights 1/n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    cont = space.continuous_dims()
    qs = {}
    for dim in cont:
        perm = rng.permutation(n)
        qs[dim] = (perm + rng.uniform(size=n)) / n

    cum = np.cumsum(space.member_weights())
    scenarios = []
    for i in range(n):
        params = {n_: d.value for n_, d in space.parameter_dims.items() if d.is_fixed}
        for dim in cont:
            params[dim] = float(space.parameter_dims[dim].ppf(qs[dim][i]))
        member_idx = int(np.searchsorted(cum, (i + 0.5) / n))
        member_idx = min(member_idx, len(space.forecast_members) - 1)
        scenarios.append(Scenario(
            scenario_id=f"s{i:04d}",
            variant=space.model_variants[i % len(space.model_variants)],
            forecast_member_id=space.forecast_members[member_idx][0],
            parameters=params,
            weight=1.0 / n,
            seed=_scenario_seed(seed, i),
        ))
    return EnsembleDesign(scenarios=tuple(scenarios), method="LHS", seed=seed)


def expectation(values: Mapping[str, CostVector],
                design: EnsembleDesign) -> tuple[CostVector, float]:
    """Weighted mean cost over the covered scenarios.

    Weights renormalize to the covered subset; the second return value is the
    covered-weight fraction of the full design.
    """
    covered = [s for s in design.scenarios if s.scenario_id in values]
    if not covered:
        raise ValueError("expectation over empty coverage")
    total_w = sum(s.weight for s in covered)
    acc = np.zeros(len(next(iter(values.values())).values))
    criteria = None
    for s in covered:
        cv = values[s.scenario_id]
        criteria = cv.criteria
        acc += (s.weight / total_w) * cv.as_array()
    return CostVector(tuple(float(v) for v in acc), criteria), float(total_w)
