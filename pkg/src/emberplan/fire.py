"""Raster wildfire cellular automaton in several spread-rule variants.

Cells are UNBURNABLE / FUEL / BURNING / BURNED. A FUEL cell ignites from each
burning neighbor b with probability

    p(b->c) = clamp(p0_eff(c) * F(c) * (1 + cw * max(0, W(c) . e_bc)), 0, 1)

where e_bc is the unit direction from b to c and W(c) the wind at the
receiving cell; contributions combine as P(c) = 1 - prod(1 - p). Stochastic
variants draw one uniform per (seed, step, row, col) from a counter-based
stream, so results do not depend on traversal order or worker count.
Diagonal neighbors are not distance-weighted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum

import numpy as np

from .raster import GridGeometry, RasterGrid


class CellState(IntEnum):
    UNBURNABLE = 0
    FUEL = 1
    BURNING = 2
    BURNED = 3


class SpreadRuleVariant(str, Enum):
    STOCHASTIC_MOORE = "STOCHASTIC_MOORE"
    DETERMINISTIC_THRESHOLD = "DETERMINISTIC_THRESHOLD"
    VON_NEUMANN_STOCHASTIC = "VON_NEUMANN_STOCHASTIC"


VARIANTS: tuple[SpreadRuleVariant, ...] = tuple(SpreadRuleVariant)

_MOORE = tuple((dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)
               if (dr, dc) != (0, 0))
_VON_NEUMANN = ((-1, 0), (1, 0), (0, -1), (0, 1))


class GridMismatchError(ValueError):
    pass


class ControlPlacementError(ValueError):
    pass


@dataclass(frozen=True)
class ParameterVector:
    """Static parametrisation of the spread rule."""

    p0: float
    cw: float
    tau_burn: int
    fuel_map: RasterGrid

    def __post_init__(self):
        if not 0.0 <= self.p0 <= 1.0:
            raise ValueError(f"p0={self.p0} outside [0, 1]")
        if self.cw < 0:
            raise ValueError(f"cw={self.cw} negative")
        if self.tau_burn < 1:
            raise ValueError(f"tau_burn={self.tau_burn} < 1")
        if np.any(self.fuel_map.values < 0):
            raise ValueError("fuel factors must be non-negative")


@dataclass(frozen=True)
class ForcingSeries:
    """Per-step wind; either uniform (T, 2) or per-cell (T, 2, nrows, ncols)."""

    wind: np.ndarray
    member_id: str = "member-0"

    def __post_init__(self):
        w = np.asarray(self.wind, dtype=float)
        if w.ndim not in (2, 4) or w.shape[1] != 2:
            raise ValueError(f"wind shape {w.shape} not (T,2) or (T,2,R,C)")
        if not np.all(np.isfinite(w)):
            raise ValueError("wind contains non-finite values")
        w.flags.writeable = False
        object.__setattr__(self, "wind", w)

    def __len__(self) -> int:
        return self.wind.shape[0]

    def at(self, t: int, geom: GridGeometry) -> tuple[np.ndarray, np.ndarray]:
        w = self.wind[t]
        if w.ndim == 1:
            u = np.full(geom.shape, w[0])
            v = np.full(geom.shape, w[1])
            return u, v
        return w[0], w[1]


def uniform_wind(u: float, v: float, steps: int, member_id: str = "member-0") -> ForcingSeries:
    return ForcingSeries(np.tile([u, v], (steps, 1)), member_id=member_id)


@dataclass(frozen=True)
class ActiveSuppression:
    """Ignition damping within a disk, ticking down one step at a time."""

    center_x: float
    center_y: float
    radius_m: float
    factor: float
    remaining: int


@dataclass(frozen=True)
class FireState:
    geom: GridGeometry
    cell_state: np.ndarray   # int8, CellState codes
    burn_timer: np.ndarray   # int32, >=1 only on BURNING cells
    t: int = 0
    suppressions: tuple[ActiveSuppression, ...] = ()

    def __post_init__(self):
        cs = np.ascontiguousarray(self.cell_state, dtype=np.int8)
        bt = np.ascontiguousarray(self.burn_timer, dtype=np.int32)
        if cs.shape != self.geom.shape or bt.shape != self.geom.shape:
            raise GridMismatchError("state arrays do not match grid shape")
        burning = cs == CellState.BURNING
        if np.any(bt[burning] < 1) or np.any(bt[~burning] != 0):
            raise ValueError("burn timers inconsistent with BURNING mask")
        cs.flags.writeable = False
        bt.flags.writeable = False
        object.__setattr__(self, "cell_state", cs)
        object.__setattr__(self, "burn_timer", bt)

    @property
    def ignited_count(self) -> int:
        """Cells that have ever ignited (BURNING or BURNED)."""
        return int(np.count_nonzero(self.cell_state >= CellState.BURNING))

    def digest(self) -> str:
        import hashlib
        h = hashlib.blake2b(digest_size=16)
        h.update(self.cell_state.tobytes())
        h.update(self.burn_timer.tobytes())
        h.update(repr((self.t, self.suppressions)).encode())
        return h.hexdigest()


def initial_state(geom: GridGeometry, fuel_mask: np.ndarray,
                  ignition_cells: list[tuple[int, int]], tau_burn: int) -> FireState:
    """Start state: fuel where fuel_mask, listed cells burning."""
    cs = np.where(fuel_mask, CellState.FUEL, CellState.UNBURNABLE).astype(np.int8)
    bt = np.zeros(geom.shape, dtype=np.int32)
    for r, c in ignition_cells:
        if not geom.contains_cell(r, c):
            raise ControlPlacementError(f"ignition cell ({r}, {c}) outside grid")
        if cs[r, c] == CellState.FUEL:
            cs[r, c] = CellState.BURNING
            bt[r, c] = tau_burn
    return FireState(geom=geom, cell_state=cs, burn_timer=bt, t=0)


# --------------------------------------------------------------------------
# Counter-based RNG: a SplitMix64-style finalizer over (seed, t, row, col).

_M1 = np.uint64(0x9E3779B97F4A7C15)
_M2 = np.uint64(0xBF58476D1CE4E5B9)
_M3 = np.uint64(0x94D049BB133111EB)


def cell_uniforms(seed: int, t: int, geom: GridGeometry) -> np.ndarray:
    rows = np.arange(geom.nrows, dtype=np.uint64)[:, None]
    cols = np.arange(geom.ncols, dtype=np.uint64)[None, :]
    with np.errstate(over="ignore"):  # modular uint64 arithmetic is intended
        x = (np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * _M1
             + np.uint64(t) * _M2
             + rows * np.uint64(0x2545F4914F6CDD1D)
             + cols * np.uint64(0x27220A95FE8C0045))
        x = np.broadcast_to(x, geom.shape).copy()
        x ^= x >> np.uint64(30)
        x *= _M2
        x ^= x >> np.uint64(27)
        x *= _M3
        x ^= x >> np.uint64(31)
    return (x >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


# --------------------------------------------------------------------------
# Controls

class ControlKind(str, Enum):
    FIREBREAK = "FIREBREAK"
    SUPPRESSION = "SUPPRESSION"


@dataclass(frozen=True)
class ControlAction:
    kind: ControlKind
    start_step: int
    resource_cost: float
    # firebreak
    cells: tuple[tuple[int, int], ...] = ()
    # suppression
    center: tuple[float, float] = (0.0, 0.0)
    radius_m: float = 0.0
    factor: float = 0.0
    duration: int = 0

    def __post_init__(self):
        if self.resource_cost < 0:
            raise ValueError("resource cost must be >= 0")
        if self.kind is ControlKind.SUPPRESSION and not 0.0 <= self.factor < 1.0:
            raise ValueError(f"suppression factor {self.factor} outside [0, 1)")


def apply_control(state: FireState, action: ControlAction) -> FireState:
    """Apply one action; BURNING/BURNED cells are never altered."""
    if action.kind is ControlKind.FIREBREAK:
        cs = state.cell_state.copy()
        for r, c in action.cells:
            if not state.geom.contains_cell(r, c):
                raise ControlPlacementError(f"firebreak cell ({r}, {c}) outside grid")
            if cs[r, c] == CellState.FUEL:
                cs[r, c] = CellState.UNBURNABLE
        return replace(state, cell_state=cs)
    sup = ActiveSuppression(
        center_x=action.center[0], center_y=action.center[1],
        radius_m=action.radius_m, factor=action.factor,
        remaining=action.duration,
    )
    return replace(state, suppressions=state.suppressions + (sup,))


def _suppression_field(state: FireState) -> np.ndarray:
    """Multiplicative damping of p0 per cell from all active suppressions."""
    field_ = np.ones(state.geom.shape)
    if not state.suppressions:
        return field_
    X, Y = state.geom.cell_centers()
    for sup in state.suppressions:
        if sup.remaining <= 0:
            continue
        inside = (X - sup.center_x) ** 2 + (Y - sup.center_y) ** 2 <= sup.radius_m ** 2
        field_[inside] *= sup.factor
    return field_


# --------------------------------------------------------------------------
# Spread rule

def ignition_probability(state: FireState, wind_u: np.ndarray, wind_v: np.ndarray,
                         params: ParameterVector,
                         variant: SpreadRuleVariant) -> np.ndarray:
    """Combined ignition probability P(c) for every cell (0 off FUEL cells)."""
    if wind_u.shape != state.geom.shape or wind_v.shape != state.geom.shape:
        raise GridMismatchError("wind grid does not match state grid")
    offsets = _VON_NEUMANN if variant is SpreadRuleVariant.VON_NEUMANN_STOCHASTIC else _MOORE
    burning = state.cell_state == CellState.BURNING
    fuel = state.cell_state == CellState.FUEL
    p0_eff = params.p0 * _suppression_field(state)
    F = params.fuel_map.values

    prod_not = np.ones(state.geom.shape)
    for dr, dc in offsets:
        # neighbor b sits at c + (dr, dc); shift its BURNING flag onto c
        nb = np.zeros(state.geom.shape, dtype=bool)
        src = nb[max(0, -dr):state.geom.nrows - max(0, dr),
                 max(0, -dc):state.geom.ncols - max(0, dc)]
        src |= burning[max(0, dr):state.geom.nrows - max(0, -dr),
                       max(0, dc):state.geom.ncols - max(0, -dc)]
        # unit direction b -> c in map coordinates (x east, y north)
        norm = math.hypot(dr, dc)
        ex, ey = -dc / norm, dr / norm
        along = np.maximum(0.0, wind_u * ex + wind_v * ey)
        p = np.clip(p0_eff * F * (1.0 + params.cw * along), 0.0, 1.0)
        prod_not = np.where(nb, prod_not * (1.0 - p), prod_not)
    P = 1.0 - prod_not
    P[~fuel] = 0.0
    return P


def step_fire(state: FireState, wind_u: np.ndarray, wind_v: np.ndarray,
              params: ParameterVector, variant: SpreadRuleVariant,
              seed: int) -> FireState:
    """Advance one step: ignite, tick burn timers, tick suppressions."""
    P = ignition_probability(state, wind_u, wind_v, params, variant)
    if variant is SpreadRuleVariant.DETERMINISTIC_THRESHOLD:
        ignite = P >= 0.5
    else:
        u = cell_uniforms(seed, state.t, state.geom)
        ignite = u < P

    cs = state.cell_state.copy()
    bt = state.burn_timer.copy()
    burning = state.cell_state == CellState.BURNING
    bt[burning] -= 1
    done = burning & (bt == 0)
    cs[done] = CellState.BURNED
    cs[ignite] = CellState.BURNING
    bt[ignite] = params.tau_burn

    sups = tuple(
        replace(s, remaining=s.remaining - 1)
        for s in state.suppressions if s.remaining > 1
    )
    return FireState(geom=state.geom, cell_state=cs, burn_timer=bt,
                     t=state.t + 1, suppressions=sups)


@dataclass(frozen=True)
class Trajectory:
    states: tuple[FireState, ...]
    burned_series: tuple[int, ...]   # ignited-ever counts, one per snapshot

    @property
    def final(self) -> FireState:
        return self.states[-1]

    def digest(self) -> str:
        import hashlib
        h = hashlib.blake2b(digest_size=16)
        for s in self.states:
            h.update(s.digest().encode())
        return h.hexdigest()


def simulate(state0: FireState, forcing: ForcingSeries, params: ParameterVector,
             variant: SpreadRuleVariant, horizon: int,
             controls: list[ControlAction] | None = None,
             seed: int = 0) -> Trajectory:
    """Run the automaton for `horizon` steps, applying scheduled controls.

    Controls fire at their start_step before that step's spread. Snapshot at
    index t reflects any controls already applied. Deterministic given seed.
    """
    controls = sorted(controls or [], key=lambda a: (a.start_step, a.kind.value))
    if state0.t + horizon > len(forcing):
        raise ValueError(
            f"horizon {state0.t + horizon} exceeds forcing length {len(forcing)}")
    for a in controls:
        if not state0.t <= a.start_step <= state0.t + horizon:
            raise ValueError(f"control start_step {a.start_step} outside horizon")

    state = state0
    for a in controls:
        if a.start_step == state.t:
            state = apply_control(state, a)
    states = [state]
    for _ in range(horizon):
        wu, wv = forcing.at(state.t, state.geom)
        state = step_fire(state, wu, wv, params, variant, seed)
        for a in controls:
            if a.start_step == state.t:
                state = apply_control(state, a)
        states.append(state)
    return Trajectory(states=tuple(states),
                      burned_series=tuple(s.ignited_count for s in states))


def state_raster(state: FireState) -> RasterGrid:
    """Encode the cell states as a raster (0/1/2/3 per the wire format)."""
    return RasterGrid(geom=state.geom, values=state.cell_state.astype(float))


def state_from_raster(grid: RasterGrid, tau_burn: int = 1) -> FireState:
    cs = grid.values.astype(np.int8)
    bt = np.where(cs == CellState.BURNING, tau_burn, 0).astype(np.int32)
    return FireState(geom=grid.geom, cell_state=cs, burn_timer=bt, t=0)
