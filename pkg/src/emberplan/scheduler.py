"""Deadline-aware execution of the strategy x scenario task array.

Dispatch is breadth-first across strategies: every strategy gets its first
scenario before any strategy gets its second, so a partial run still yields a
comparable (if coarse) estimate for each candidate. No task starts after the
deadline; in-flight tasks run to completion. Tasks must be pure, which makes
the result map independent of worker count and completion order.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

from .criteria import CostVector
from .ensemble import EnsembleDesign, expectation

DEADLINE_SLACK_S = 0.1
DEFAULT_MIN_COVERAGE = 0.3


@dataclass(frozen=True)
class ComputeBudget:
    deadline_s: float
    workers: int = 1
    task_timeout_s: float | None = None

    def __post_init__(self):
        if self.deadline_s <= 0:
            raise ValueError("deadline must be > 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class EvalTask:
    strategy_id: str
    scenario_id: str
    weight: float
    est_cost: float = 1.0

    @property
    def task_id(self) -> tuple[str, str]:
        return (self.strategy_id, self.scenario_id)


class RunStatus(str, Enum):
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    DEADLINE_PARTIAL = "DEADLINE_PARTIAL"


@dataclass(frozen=True)
class RunProgress:
    completed: int
    total: int
    per_strategy: Mapping[str, tuple[int, float]]   # id -> (count, covered weight)
    elapsed_s: float
    status: RunStatus

    def to_document(self) -> dict:
        return {
            "completed": self.completed,
            "total": self.total,
            "per_strategy": {k: list(v) for k, v in self.per_strategy.items()},
            "elapsed_s": self.elapsed_s,
            "status": self.status.value,
        }


def schedule(tasks: Sequence[EvalTask]) -> list[EvalTask]:
    """Dispatch order: round-by-round over strategies (progressive coverage).

    Within a strategy, scenarios sort by weight descending then scenario id;
    round r holds the r-th scenario of every strategy, strategies ascending.
    """
    if not tasks:
        raise ValueError("no tasks to schedule")
    ids = [t.task_id for t in tasks]
    if len(ids) != len(set(ids)):
        raise ValueError("duplicate task ids")
    per_strategy: dict[str, list[EvalTask]] = {}
    for t in tasks:
        per_strategy.setdefault(t.strategy_id, []).append(t)
    for lst in per_strategy.values():
        lst.sort(key=lambda t: (-t.weight, t.scenario_id))
    ordered: list[EvalTask] = []
    for round_tasks in schedule_rounds(tasks):
        ordered.extend(round_tasks)
    return ordered


def schedule_rounds(tasks: Sequence[EvalTask]) -> list[list[EvalTask]]:
    """Same order as schedule(), grouped into coverage rounds."""
    per_strategy: dict[str, list[EvalTask]] = {}
    for t in tasks:
        per_strategy.setdefault(t.strategy_id, []).append(t)
    for lst in per_strategy.values():
        lst.sort(key=lambda t: (-t.weight, t.scenario_id))
    rounds: list[list[EvalTask]] = []
    r = 0
    while True:
        round_tasks = [lst[r] for _, lst in sorted(per_strategy.items())
                       if r < len(lst)]
        if not round_tasks:
            break
        rounds.append(round_tasks)
        r += 1
    return rounds


@dataclass
class _RunState:
    lock: threading.Lock = field(default_factory=threading.Lock)
    results: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    completed_order: list = field(default_factory=list)
    per_strategy: dict = field(default_factory=dict)
    started: int = 0


def run_with_deadline(
    tasks: Sequence[EvalTask],
    budget: ComputeBudget,
    eval_fn: Callable[[EvalTask], object],
    on_complete: Callable[[tuple[str, str]], None] | None = None,
) -> tuple[dict[tuple[str, str], object], RunProgress]:
    """Run tasks in dispatch order under the wall-clock deadline.

    Failures are recorded per task without aborting the run (inspect
    progress/failures via the returned RunProgress and result map; failed
    tasks simply have no entry in the result map).
    """
    rounds = schedule_rounds(tasks)
    total = sum(len(r) for r in rounds)
    start = time.monotonic()
    state = _RunState()
    for rnd in rounds:
        for t in rnd:
            state.per_strategy.setdefault(t.strategy_id, (0, 0.0))

    def _run_round(pool: ThreadPoolExecutor, round_tasks: list[EvalTask]) -> None:
        # Rounds act as barriers: no strategy may be two scenarios ahead of
        # another at any point, so partial results stay comparable.
        next_idx = [0]

        def _worker():
            while True:
                with state.lock:
                    if next_idx[0] >= len(round_tasks):
                        return
                    # the very first task always runs so a partial result exists
                    if (state.started > 0
                            and time.monotonic() - start >= budget.deadline_s):
                        return
                    task = round_tasks[next_idx[0]]
                    next_idx[0] += 1
                    state.started += 1
                t0 = time.monotonic()
                try:
                    result = eval_fn(task)
                    err = None
                except Exception as exc:
                    result, err = None, exc
                duration = time.monotonic() - t0
                timed_out = (budget.task_timeout_s is not None
                             and duration > budget.task_timeout_s)
                with state.lock:
                    if err is not None:
                        state.failures[task.task_id] = repr(err)
                    elif timed_out:
                        state.failures[task.task_id] = f"timeout after {duration:.3f}s"
                    else:
                        state.results[task.task_id] = result
                        state.completed_order.append(task.task_id)
                        cnt, w = state.per_strategy[task.strategy_id]
                        state.per_strategy[task.strategy_id] = (cnt + 1, w + task.weight)
                if on_complete is not None and err is None and not timed_out:
                    on_complete(task.task_id)

        futures = [pool.submit(_worker)
                   for _ in range(min(budget.workers, len(round_tasks)))]
        wait(futures)
        for f in futures:
            f.result()

    with ThreadPoolExecutor(max_workers=budget.workers) as pool:
        for rnd in rounds:
            if state.started and time.monotonic() - start >= budget.deadline_s:
                break
            _run_round(pool, rnd)

    elapsed = time.monotonic() - start
    done = len(state.results) + len(state.failures)
    status = RunStatus.COMPLETED if done == total else RunStatus.DEADLINE_PARTIAL
    progress = RunProgress(
        completed=len(state.results),
        total=total,
        per_strategy=dict(state.per_strategy),
        elapsed_s=elapsed,
        status=status,
    )
    # deterministic aggregation order regardless of completion order
    results = {tid: state.results[tid] for tid in sorted(state.results)}
    return results, progress


@dataclass(frozen=True)
class StrategyEstimate:
    expected: CostVector
    covered_fraction: float
    per_scenario: Mapping[str, CostVector]
    low_confidence: bool


def estimate_partial(
    results: Mapping[tuple[str, str], CostVector],
    design: EnsembleDesign,
    strategy_ids: Sequence[str],
    min_coverage: float = DEFAULT_MIN_COVERAGE,
) -> dict[str, StrategyEstimate]:
    """Per-strategy expectation over whatever scenarios completed."""
    out: dict[str, StrategyEstimate] = {}
    for sid in strategy_ids:
        per_scenario = {scen: cv for (s, scen), cv in results.items() if s == sid}
        if not per_scenario:
            raise ValueError(f"strategy {sid!r} has zero completed scenarios")
        expected, frac = expectation(per_scenario, design)
        out[sid] = StrategyEstimate(
            expected=expected,
            covered_fraction=frac,
            per_scenario=per_scenario,
            low_confidence=frac < min_coverage,
        )
    return out
