"""Run configuration shared by the HTTP service and the command line.

A configuration is a JSON document describing the domain grid, spread
parameters, forecast members, planning horizon, candidate templates, criteria
weights and compute limits. Relative raster paths are resolved against the
config file's directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .ensemble import (
    Distribution,
    EnsembleDesign,
    Scenario,
    UncertaintySpace,
    fixed,
    triangular,
    uniform,
)
from .fire import ForcingSeries, SpreadRuleVariant, initial_state, uniform_wind
from .fusion import IgnitionBelief, uniform_belief
from .planner import (
    CandidateTemplates,
    Horizon,
    PlanningContext,
    WeightedSum,
)
from .raster import GridGeometry, RasterGrid, read_ascii_grid
from .scheduler import ComputeBudget


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MemberSpec:
    member_id: str
    u: float
    v: float
    weight: float


@dataclass(frozen=True)
class RunConfig:
    geom: GridGeometry
    fuel: RasterGrid
    asset_mask: np.ndarray
    params: Mapping[str, float]
    members: tuple[MemberSpec, ...]
    forcing_steps: int
    horizon: Horizon
    templates: CandidateTemplates
    budget_eur: float
    weights: tuple[float, ...]
    variant: SpreadRuleVariant
    seed: int
    deadline_s: float
    workers: int
    ignition_cells: tuple[tuple[int, int], ...] = ()
    source: dict = field(default_factory=dict)

    def digest(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(json.dumps(self.source, sort_keys=True).encode())
        return h.hexdigest()

    @property
    def burnable(self) -> np.ndarray:
        return self.fuel.values > 0

    def forcing_members(self) -> dict[str, ForcingSeries]:
        return {
            m.member_id: uniform_wind(m.u, m.v, self.forcing_steps,
                                      member_id=m.member_id)
            for m in self.members
        }

    def context(self) -> PlanningContext:
        return PlanningContext(
            geom=self.geom,
            fuel_map=self.fuel,
            asset_mask=self.asset_mask,
            forcing_members=self.forcing_members(),
            base_params=dict(self.params),
        )

    def design(self) -> EnsembleDesign:
        """One scenario per forecast member at the configured variant."""
        total = sum(m.weight for m in self.members)
        scenarios = tuple(
            Scenario(
                scenario_id=f"s{i:04d}",
                variant=self.variant,
                forecast_member_id=m.member_id,
                parameters={},
                weight=m.weight / total,
                seed=self.seed + i,
            )
            for i, m in enumerate(self.members)
        )
        return EnsembleDesign(scenarios=scenarios, method="FULL_FACTORIAL",
                              seed=self.seed)

    def uncertainty_space(self) -> UncertaintySpace:
        """Continuous parameter dims from the config; fixed at base values
        unless an explicit distribution is given."""
        dims: dict[str, Distribution] = {}
        spec = self.source.get("uncertainty", {})
        for name in ("p0", "cw", "tau_burn"):
            d = spec.get(name)
            if d is None:
                dims[name] = fixed(float(self.params[name]))
            elif d.get("dist") == "uniform":
                dims[name] = uniform(float(d["lo"]), float(d["hi"]))
            elif d.get("dist") == "triangular":
                dims[name] = triangular(float(d["lo"]), float(d["mode"]),
                                        float(d["hi"]))
            elif d.get("dist") == "fixed":
                dims[name] = fixed(float(d["value"]))
            else:
                raise ConfigError(
                    f"unknown distribution {d.get('dist')!r} for {name!r}")
        return UncertaintySpace(
            model_variants=(self.variant,),
            forecast_members=tuple((m.member_id, m.weight)
                                   for m in self.members),
            parameter_dims=dims,
        )

    def initial_fire_state(self):
        return initial_state(self.geom, self.burnable, list(self.ignition_cells),
                             tau_burn=int(round(self.params["tau_burn"])))

    def initial_belief(self) -> IgnitionBelief:
        return uniform_belief(self.geom, self.burnable)

    def policy(self) -> WeightedSum:
        return WeightedSum(weights=self.weights)

    def compute_budget(self) -> ComputeBudget:
        return ComputeBudget(deadline_s=self.deadline_s, workers=self.workers)


def _require(doc: Mapping, key: str):
    if key not in doc:
        raise ConfigError(f"config missing required key {key!r}")
    return doc[key]


def config_from_document(doc: Mapping, base_dir: str | Path = ".") -> RunConfig:
    base = Path(base_dir)
    try:
        if "fuel" in doc:
            fuel = read_ascii_grid(base / doc["fuel"])
            geom = fuel.geom
        else:
            g = _require(doc, "grid")
            geom = GridGeometry(nrows=int(g["nrows"]), ncols=int(g["ncols"]),
                                cellsize=float(g["cellsize"]),
                                xllcorner=float(g.get("xllcorner", 0.0)),
                                yllcorner=float(g.get("yllcorner", 0.0)))
            fuel = RasterGrid(geom=geom, values=np.ones(geom.shape))
        if "assets" in doc:
            assets_grid = read_ascii_grid(base / doc["assets"])
            if not assets_grid.congruent(fuel):
                raise ConfigError("asset raster geometry differs from fuel grid")
            asset_mask = assets_grid.values > 0
        else:
            asset_mask = np.zeros(geom.shape, dtype=bool)

        params = dict(_require(doc, "params"))
        for k in ("p0", "cw", "tau_burn"):
            if k not in params:
                raise ConfigError(f"params missing {k!r}")

        members = tuple(
            MemberSpec(member_id=m["id"], u=float(m.get("u", 0.0)),
                       v=float(m.get("v", 0.0)),
                       weight=float(m.get("weight", 1.0)))
            for m in _require(doc, "forcing")["members"]
        )
        if not members:
            raise ConfigError("at least one forecast member is required")
        if any(m.weight <= 0 for m in members):
            raise ConfigError("member weights must be > 0")

        h = doc.get("horizon", {})
        horizon = Horizon(t_begin=int(h.get("t_begin", 0)),
                          t_now=int(h.get("t_now", 0)),
                          t_end=int(h.get("t_end", 8)))
        forcing_steps = int(doc.get("forcing", {}).get("steps", horizon.t_end + 1))
        if forcing_steps < horizon.t_end:
            raise ConfigError(
                f"forcing covers {forcing_steps} steps but horizon ends at "
                f"{horizon.t_end}")

        t = doc.get("templates", {})
        templates = CandidateTemplates(
            row_offsets=tuple(t.get("row_offsets", ())),
            col_offsets=tuple(t.get("col_offsets", (1, 2))),
            kappa_fb=float(t.get("kappa_fb", 1.0)),
            sup_top_k=int(t.get("sup_top_k", 0)),
            sup_radius_m=float(t.get("sup_radius_m", 0.0)),
            sup_factor=float(t.get("sup_factor", 0.0)),
            sup_duration=int(t.get("sup_duration", 0)),
            kappa_sup=float(t.get("kappa_sup", 0.0)),
        )

        weights = tuple(float(w) for w in doc.get("weights", (1.0, 1.0, 0.001)))
        if len(weights) != 3 or any(w < 0 for w in weights):
            raise ConfigError("weights must be 3 non-negative numbers")

        return RunConfig(
            geom=geom,
            fuel=fuel,
            asset_mask=asset_mask,
            params=params,
            members=members,
            forcing_steps=forcing_steps,
            horizon=horizon,
            templates=templates,
            budget_eur=float(doc.get("budget_eur", 1e9)),
            weights=weights,
            variant=SpreadRuleVariant(doc.get("variant",
                                              "DETERMINISTIC_THRESHOLD")),
            seed=int(doc.get("seed", 0)),
            deadline_s=float(doc.get("deadline_s", 3600.0)),
            workers=int(doc.get("workers", 1)),
            ignition_cells=tuple((int(r), int(c))
                                 for r, c in doc.get("ignitions", ())),
            source=json.loads(json.dumps(doc)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply dotted key=value overrides; values parsed as JSON when possible."""
    out = json.loads(json.dumps(doc))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key!r} crosses a non-object")
        node[parts[-1]] = value
    return out


def load_config(path: str | Path, overrides: list[str] | None = None) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if overrides:
        doc = apply_overrides(doc, overrides)
    return config_from_document(doc, base_dir=path.parent)
