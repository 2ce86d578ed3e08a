"""Candidate control strategies, multi-criteria evaluation over the scenario
ensemble, Pareto filtering, selection policies and event-triggered replanning.

The planning loop is open-loop with re-solving: pick the best strategy for the
remaining horizon from current information, commit it, and re-run the whole
generate/evaluate/filter/select cycle whenever new information arrives, with
already-executed actions fixed as past. Costs are end-state functionals, so a
replan with no new information reselects the committed strategy's tail.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from . import fire, fusion
from .criteria import DEFAULT_CRITERIA, CostVector, dominates
from .ensemble import EnsembleDesign, Scenario
from .fire import (
    CellState,
    ControlAction,
    ControlKind,
    FireState,
    ForcingSeries,
    ParameterVector,
    SpreadRuleVariant,
)
from .raster import GridGeometry, RasterGrid
from .scheduler import (
    ComputeBudget,
    EvalTask,
    RunProgress,
    RunStatus,
    StrategyEstimate,
    estimate_partial,
    run_with_deadline,
)


@dataclass(frozen=True)
class Horizon:
    t_begin: int
    t_now: int
    t_end: int

    def __post_init__(self):
        if not self.t_begin <= self.t_now <= self.t_end:
            raise ValueError(f"need t_begin <= t_now <= t_end, got {self}")

    @property
    def remaining(self) -> int:
        return self.t_end - self.t_now


@dataclass(frozen=True)
class ControlStrategy:
    strategy_id: str
    actions: tuple[ControlAction, ...]

    @property
    def total_resource_cost(self) -> float:
        return sum(a.resource_cost for a in self.actions)

    def tail(self, t_now: int) -> tuple[ControlAction, ...]:
        return tuple(a for a in self.actions if a.start_step >= t_now)

    def digest(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(repr(self.actions).encode())
        return h.hexdigest()


NULL_STRATEGY_ID = "null"


def null_strategy() -> ControlStrategy:
    return ControlStrategy(strategy_id=NULL_STRATEGY_ID, actions=())


@dataclass(frozen=True)
class CandidateTemplates:
    """Deterministic candidate enumeration knobs."""

    row_offsets: tuple[int, ...] = ()
    col_offsets: tuple[int, ...] = ()
    kappa_fb: float = 1.0            # EUR per firebreak cell
    sup_top_k: int = 0
    sup_radius_m: float = 0.0
    sup_factor: float = 0.0
    sup_duration: int = 0
    kappa_sup: float = 0.0           # EUR per suppression step

    def is_empty(self) -> bool:
        return not self.row_offsets and not self.col_offsets and self.sup_top_k == 0


def _fire_bbox(state: FireState, belief: fusion.IgnitionBelief) -> tuple[int, int, int, int]:
    ignited = state.cell_state >= CellState.BURNING
    if ignited.any():
        rows, cols = np.nonzero(ignited)
        return int(rows.min()), int(rows.max()), int(cols.min()), int(cols.max())
    (r, c), _ = fusion.extract_ignitions(belief, top_k=1)[0]
    return r, r, c, c


def generate_candidates(state: FireState, belief: fusion.IgnitionBelief,
                        budget_eur: float, templates: CandidateTemplates,
                        t_now: int = 0) -> list[ControlStrategy]:
    """Enumerate candidate strategies for the remaining horizon.

    Always includes the null strategy; everything over budget is dropped.
    Ids are stable for identical inputs.
    """
    if budget_eur < 0:
        raise ValueError("budget must be >= 0")
    if templates.is_empty():
        raise ValueError("empty candidate template configuration")
    r_lo, r_hi, c_lo, c_hi = _fire_bbox(state, belief)
    geom = state.geom

    candidates: dict[str, ControlStrategy] = {}

    def _firebreak_line(sid: str, cells: list[tuple[int, int]]):
        cells = [rc for rc in cells if state.cell_state[rc] == CellState.FUEL]
        if not cells:
            return
        action = ControlAction(
            kind=ControlKind.FIREBREAK, start_step=t_now,
            resource_cost=len(cells) * templates.kappa_fb,
            cells=tuple(cells),
        )
        candidates.setdefault(sid, ControlStrategy(sid, (action,)))

    for off in templates.row_offsets:
        for row in {r_lo - off, r_hi + off}:
            if 0 <= row < geom.nrows:
                _firebreak_line(f"fb_row_{row:03d}",
                                [(row, c) for c in range(geom.ncols)])
    for off in templates.col_offsets:
        for col in {c_lo - off, c_hi + off}:
            if 0 <= col < geom.ncols:
                _firebreak_line(f"fb_col_{col:03d}",
                                [(r, col) for r in range(geom.nrows)])

    if templates.sup_top_k > 0:
        X, Y = geom.cell_centers()
        for (r, c), _ in fusion.extract_ignitions(belief, top_k=templates.sup_top_k):
            sid = f"sup_r{r:03d}c{c:03d}"
            action = ControlAction(
                kind=ControlKind.SUPPRESSION, start_step=t_now,
                resource_cost=templates.kappa_sup * templates.sup_duration,
                center=(float(X[r, c]), float(Y[r, c])),
                radius_m=templates.sup_radius_m,
                factor=templates.sup_factor,
                duration=templates.sup_duration,
            )
            candidates.setdefault(sid, ControlStrategy(sid, (action,)))

    feasible = [s for s in candidates.values()
                if s.total_resource_cost <= budget_eur]
    feasible.sort(key=lambda s: s.strategy_id)
    return [null_strategy()] + feasible


# --------------------------------------------------------------------------
# Evaluation

@dataclass(frozen=True)
class PlanningContext:
    """Everything scenario evaluation needs besides the strategy itself."""

    geom: GridGeometry
    fuel_map: RasterGrid                       # per-cell spread factor (>= 0)
    asset_mask: np.ndarray                     # bool, cells that count as assets
    forcing_members: Mapping[str, ForcingSeries]
    base_params: Mapping[str, float]           # defaults for p0 / cw / tau_burn
    ignition_top_k: int = 1

    def params_for(self, scenario: Scenario) -> ParameterVector:
        merged = dict(self.base_params)
        merged.update(scenario.parameters)
        return ParameterVector(
            p0=float(merged["p0"]),
            cw=float(merged["cw"]),
            tau_burn=int(round(merged["tau_burn"])),
            fuel_map=self.fuel_map,
        )

    def forcing_for(self, scenario: Scenario) -> ForcingSeries:
        try:
            return self.forcing_members[scenario.forecast_member_id]
        except KeyError:
            raise KeyError(
                f"scenario {scenario.scenario_id!r} references unknown "
                f"forecast member {scenario.forecast_member_id!r}") from None


def scenario_initial_state(observed: FireState, belief: fusion.IgnitionBelief,
                           params: ParameterVector, top_k: int) -> FireState:
    """Observed fire plus the most likely belief ignition cells set burning."""
    cs = observed.cell_state.copy()
    bt = observed.burn_timer.copy()
    for (r, c), _ in fusion.extract_ignitions(belief, top_k=top_k):
        if cs[r, c] == CellState.FUEL:
            cs[r, c] = CellState.BURNING
            bt[r, c] = params.tau_burn
    return replace(observed, cell_state=cs, burn_timer=bt)


def cost_of_final_state(final: FireState, strategy_cost: float,
                        asset_mask: np.ndarray) -> CostVector:
    ignited = final.cell_state >= CellState.BURNING
    area_ha = float(np.count_nonzero(ignited)) * final.geom.cellsize ** 2 / 1e4
    assets = float(np.count_nonzero(ignited & asset_mask))
    return CostVector((area_ha, assets, float(strategy_cost)), DEFAULT_CRITERIA)


def evaluate_scenario(strategy: ControlStrategy, scenario: Scenario,
                      context: PlanningContext, horizon: Horizon,
                      observed: FireState, belief: fusion.IgnitionBelief) -> CostVector:
    params = context.params_for(scenario)
    state0 = scenario_initial_state(observed, belief, params, context.ignition_top_k)
    try:
        traj = fire.simulate(
            state0=state0,
            forcing=context.forcing_for(scenario),
            params=params,
            variant=scenario.variant,
            horizon=horizon.remaining,
            controls=list(strategy.tail(horizon.t_now)),
            seed=scenario.seed,
        )
    except Exception as exc:
        raise RuntimeError(
            f"evaluation failed for strategy {strategy.strategy_id!r}, "
            f"scenario {scenario.scenario_id!r}: {exc}") from exc
    return cost_of_final_state(traj.final, strategy.total_resource_cost,
                               context.asset_mask)


@dataclass(frozen=True)
class PlanResult:
    estimates: Mapping[str, StrategyEstimate]
    strategies: Mapping[str, ControlStrategy]
    design: EnsembleDesign
    progress: RunProgress

    def expected(self, strategy_id: str) -> CostVector:
        return self.estimates[strategy_id].expected

    def to_document(self) -> dict:
        return {
            "progress": self.progress.to_document(),
            "strategies": {
                sid: {
                    "expected": list(est.expected.values),
                    "criteria": [c.name for c in est.expected.criteria],
                    "covered_fraction": est.covered_fraction,
                    "low_confidence": est.low_confidence,
                    "resource_cost": self.strategies[sid].total_resource_cost,
                    "per_scenario": {k: list(v.values)
                                     for k, v in sorted(est.per_scenario.items())},
                }
                for sid, est in sorted(self.estimates.items())
            },
        }


def evaluate_strategies(strategies: Sequence[ControlStrategy],
                        design: EnsembleDesign,
                        horizon: Horizon,
                        context: PlanningContext,
                        observed: FireState,
                        belief: fusion.IgnitionBelief,
                        budget: ComputeBudget | None = None) -> PlanResult:
    """Evaluate every strategy over the design under the compute budget."""
    if not design.scenarios:
        raise ValueError("empty ensemble design")
    by_id = {s.strategy_id: s for s in strategies}
    scen = design.by_id()
    tasks = [
        EvalTask(strategy_id=sid, scenario_id=s.scenario_id, weight=s.weight)
        for sid in sorted(by_id)
        for s in design.scenarios
    ]
    budget = budget or ComputeBudget(deadline_s=3600.0, workers=1)

    def eval_fn(task: EvalTask) -> CostVector:
        return evaluate_scenario(by_id[task.strategy_id], scen[task.scenario_id],
                                 context, horizon, observed, belief)

    results, progress = run_with_deadline(tasks, budget, eval_fn)
    covered_ids = sorted({tid[0] for tid in results})
    if not covered_ids:
        raise RuntimeError("deadline expired before any evaluation completed")
    estimates = estimate_partial(results, design, covered_ids)
    return PlanResult(estimates=estimates, strategies=by_id,
                      design=design, progress=progress)


def restrict_to_common_coverage(result: PlanResult) -> PlanResult:
    """Re-estimate every strategy on the scenario subset all of them cover.

    Makes deadline-partial results comparable for Pareto filtering at the
    price of a smaller covered fraction.
    """
    common = set.intersection(
        *(set(est.per_scenario) for est in result.estimates.values()))
    if not common:
        raise MixedCoverageError(
            "no scenario was evaluated for every strategy")
    flat = {(sid, scen): est.per_scenario[scen]
            for sid, est in result.estimates.items() for scen in common}
    estimates = estimate_partial(flat, result.design, sorted(result.estimates))
    return replace(result, estimates=estimates)


# --------------------------------------------------------------------------
# Pareto front and selection

class MixedCoverageError(ValueError):
    pass


@dataclass(frozen=True)
class ParetoFront:
    members: tuple[str, ...]                      # nondominated, id order
    dominated_by: Mapping[str, tuple[str, ...]]   # loser -> winners

    def to_document(self) -> dict:
        return {
            "members": list(self.members),
            "dominated_by": {k: list(v) for k, v in sorted(self.dominated_by.items())},
        }


def pareto_filter(result: PlanResult) -> ParetoFront:
    """Nondominated set over expected cost vectors.

    Requires every strategy evaluated on the same covered scenario subset so
    expectations are comparable.
    """
    coverages = {sid: frozenset(est.per_scenario)
                 for sid, est in result.estimates.items()}
    distinct = set(coverages.values())
    if len(distinct) > 1:
        raise MixedCoverageError(
            "strategies cover different scenario subsets; renormalize to a "
            f"common subset first (saw {sorted(len(c) for c in distinct)} covered)")

    ids = sorted(result.estimates)
    vectors = {sid: result.estimates[sid].expected for sid in ids}
    # incremental archive: insert candidates, evicting anything they dominate
    archive: list[str] = []
    dominated_by: dict[str, list[str]] = {}
    for sid in ids:
        v = vectors[sid]
        beaten = False
        for other in archive:
            if dominates(vectors[other], v):
                dominated_by.setdefault(sid, []).append(other)
                beaten = True
        if beaten:
            continue
        evicted = [o for o in archive if dominates(v, vectors[o])]
        for o in evicted:
            dominated_by.setdefault(o, []).append(sid)
            archive.remove(o)
        archive.append(sid)
    # record every dominance pair, not just ones seen during insertion
    for sid in ids:
        winners = [o for o in ids if o != sid and dominates(vectors[o], vectors[sid])]
        if winners:
            dominated_by[sid] = winners
    return ParetoFront(members=tuple(sorted(archive)),
                       dominated_by={k: tuple(v) for k, v in dominated_by.items()})


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedSum:
    weights: tuple[float, ...]


@dataclass(frozen=True)
class Lexicographic:
    order: tuple[str, ...]     # criterion names, most important first


@dataclass(frozen=True)
class OperatorPick:
    strategy_id: str


SelectionPolicy = WeightedSum | Lexicographic | OperatorPick


def select(front: ParetoFront, result: PlanResult,
           policy: SelectionPolicy) -> ControlStrategy:
    """Resolve the vector argmin into one strategy via an explicit policy."""
    if isinstance(policy, OperatorPick):
        if policy.strategy_id not in front.members:
            raise SelectionError(
                f"strategy {policy.strategy_id!r} is not on the Pareto front "
                f"{list(front.members)}")
        return result.strategies[policy.strategy_id]
    if isinstance(policy, WeightedSum):
        def key(sid: str):
            return (result.expected(sid).scalarize(policy.weights), sid)
        best = min(front.members, key=key)
        return result.strategies[best]
    if isinstance(policy, Lexicographic):
        def key(sid: str):
            cv = result.expected(sid)
            return tuple(cv[name] for name in policy.order) + (sid,)
        best = min(front.members, key=key)
        return result.strategies[best]
    raise SelectionError(f"unknown policy {policy!r}")


# --------------------------------------------------------------------------
# Planning session and replanning

class ReplanTrigger(str, Enum):
    NEW_EVIDENCE = "NEW_EVIDENCE"
    TIMER = "TIMER"
    OPERATOR = "OPERATOR"


@dataclass(frozen=True)
class PlanOutcome:
    result: PlanResult
    front: ParetoFront
    selected: ControlStrategy
    trigger: ReplanTrigger | None
    belief_generation: int

    def to_document(self) -> dict:
        return {
            "plan": self.result.to_document(),
            "front": self.front.to_document(),
            "selected": self.selected.strategy_id,
            "selected_digest": self.selected.digest(),
            "trigger": self.trigger.value if self.trigger else None,
            "belief_generation": self.belief_generation,
        }


@dataclass
class PlanningSession:
    """Single-writer state machine for one emergency planning episode."""

    session_id: str
    context: PlanningContext
    horizon: Horizon
    design: EnsembleDesign
    observed: FireState
    belief: fusion.IgnitionBelief
    queue: fusion.ReviewQueue
    templates: CandidateTemplates
    budget_eur: float
    policy: SelectionPolicy
    compute_budget: ComputeBudget | None = None
    committed: ControlStrategy | None = None
    events: list[dict] = field(default_factory=list)

    def _pull_new_evidence(self) -> list[fusion.CitizenReport]:
        return [r for r in self.queue.with_status(fusion.ReportStatus.ACCEPTED)
                if r.report_id not in self.belief.incorporated]

    def plan(self, trigger: ReplanTrigger | None = None) -> PlanOutcome:
        """One full generate / evaluate / filter / select cycle."""
        evidence = self._pull_new_evidence()
        if evidence:
            self.belief = fusion.update_belief(self.belief, reports=evidence)

        past = self.committed.tail(0) if self.committed else ()
        past = tuple(a for a in past if a.start_step < self.horizon.t_now)
        past_cost = sum(a.resource_cost for a in past)

        tails = generate_candidates(
            self.observed, self.belief,
            budget_eur=self.budget_eur - past_cost,
            templates=self.templates,
            t_now=self.horizon.t_now,
        )
        strategies = [
            ControlStrategy(strategy_id=t.strategy_id, actions=past + t.actions)
            for t in tails
        ]
        result = evaluate_strategies(
            strategies, self.design, self.horizon, self.context,
            self.observed, self.belief, budget=self.compute_budget,
        )
        if result.progress.status is not RunStatus.COMPLETED:
            result = restrict_to_common_coverage(result)
        front = pareto_filter(result)
        selected = select(front, result, self.policy)
        outcome = PlanOutcome(
            result=result, front=front, selected=selected, trigger=trigger,
            belief_generation=self.belief.generation,
        )
        self.events.append({
            "trigger": trigger.value if trigger else "INITIAL",
            "selected": selected.strategy_id,
            "belief_generation": self.belief.generation,
        })
        return outcome

    def commit(self, strategy: ControlStrategy) -> None:
        self.committed = strategy

    def replan_on_event(self, trigger: ReplanTrigger) -> PlanOutcome:
        """Re-solve for the remaining horizon on evidence arrival or request."""
        return self.plan(trigger=trigger)
