"""Typed arrays with units and declarative check bundles.

Arrays carry named axes, an element kind, a unit from a small fixed table and
an optional closed range. Checks are declarative: a contract references
predicates by name in a process-wide registry, so contract documents stay
serializable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

# Exact-match unit vocabulary; no dimensional algebra.
UNIT_TABLE = frozenset({"m", "m/s", "ha", "kg/m2", "1", "cell", "EUR", "person"})


class ElementKind(str, Enum):
    REAL = "real"
    INTEGER = "integer"
    CATEGORICAL = "categorical"
    BOOLEAN = "boolean"


class SemanticError(ValueError):
    """Array or contract construction violated a structural invariant."""


class ConfigurationError(ValueError):
    """A contract references something that does not exist (not a check failure)."""


@dataclass(frozen=True)
class Axis:
    name: str
    size: int

    def __post_init__(self):
        if self.size < 0:
            raise SemanticError(f"axis {self.name!r} has negative size")


_KIND_DTYPES = {
    ElementKind.REAL: np.float64,
    ElementKind.INTEGER: np.int64,
    ElementKind.CATEGORICAL: np.int64,
    ElementKind.BOOLEAN: np.bool_,
}


@dataclass(frozen=True)
class SemanticArray:
    """Dense row-major array with semantic metadata.

    Categorical values are stored as indexes into `labels`. `value_range` is a
    closed interval applying to every non-nodata element.
    """

    axes: tuple[Axis, ...]
    kind: ElementKind
    units: str
    values: np.ndarray
    value_range: tuple[float, float] | None = None
    nodata: float | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.units not in UNIT_TABLE:
            raise SemanticError(f"unknown unit {self.units!r}; allowed: {sorted(UNIT_TABLE)}")
        expected = tuple(a.size for a in self.axes)
        arr = np.ascontiguousarray(self.values, dtype=_KIND_DTYPES[self.kind])
        if arr.shape != expected:
            if int(np.prod(expected)) == arr.size:
                arr = arr.reshape(expected)
            else:
                raise SemanticError(
                    f"value count {arr.size} does not match axes product {expected}"
                )
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if self.kind is ElementKind.CATEGORICAL:
            if self.labels is None:
                raise SemanticError("categorical array requires a label set")
            valid = self._valid_mask()
            if valid.any():
                vals = self.values[valid]
                if vals.min(initial=0) < 0 or vals.max(initial=0) >= len(self.labels):
                    raise SemanticError("categorical value outside declared label set")
        if self.value_range is not None:
            lo, hi = self.value_range
            if lo > hi:
                raise SemanticError("empty range")
            valid = self._valid_mask()
            if valid.any():
                vals = self.values[valid]
                if vals.min() < lo or vals.max() > hi:
                    raise SemanticError(
                        f"value outside declared range [{lo}, {hi}]"
                    )

    def _valid_mask(self) -> np.ndarray:
        if self.nodata is None:
            return np.ones(self.values.shape, dtype=bool)
        return self.values != self.nodata

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def digest(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(repr((self.axes, self.kind.value, self.units, self.value_range,
                       self.nodata, self.labels)).encode())
        h.update(self.values.tobytes())
        return h.hexdigest()

    def with_values(self, values: np.ndarray) -> "SemanticArray":
        return SemanticArray(self.axes, self.kind, self.units, values,
                             self.value_range, self.nodata, self.labels)


def scalar(value: float, units: str = "1", kind: ElementKind = ElementKind.REAL,
           value_range: tuple[float, float] | None = None) -> SemanticArray:
    """Zero-axis convenience constructor."""
    return SemanticArray((), kind, units, np.asarray(value), value_range)


# --------------------------------------------------------------------------
# Signatures

@dataclass(frozen=True)
class SlotSignature:
    """What a module expects or promises on one slot.

    Axis sizes of ``None`` match any size; names must match exactly.
    """

    axes: tuple[tuple[str, int | None], ...]
    kind: ElementKind
    units: str

    def __post_init__(self):
        if self.units not in UNIT_TABLE:
            raise SemanticError(f"unknown unit {self.units!r} in signature")

    def accepts(self, array: SemanticArray) -> str | None:
        """Return a mismatch description, or None when the array conforms."""
        if array.kind is not self.kind:
            return f"kind {array.kind.value} != expected {self.kind.value}"
        if array.units != self.units:
            return f"units {array.units!r} != expected {self.units!r}"
        if len(array.axes) != len(self.axes):
            return f"rank {len(array.axes)} != expected {len(self.axes)}"
        for ax, (name, size) in zip(array.axes, self.axes):
            if ax.name != name:
                return f"axis {ax.name!r} != expected {name!r}"
            if size is not None and ax.size != size:
                return f"axis {name!r} size {ax.size} != expected {size}"
        return None

    def compatible(self, other: "SlotSignature") -> str | None:
        """Producer/consumer compatibility; None when compatible."""
        if self.kind is not other.kind:
            return f"kind {self.kind.value} vs {other.kind.value}"
        if self.units != other.units:
            return f"units {self.units!r} vs {other.units!r}"
        if len(self.axes) != len(other.axes):
            return f"rank {len(self.axes)} vs {len(other.axes)}"
        for (n1, s1), (n2, s2) in zip(self.axes, other.axes):
            if n1 != n2:
                return f"axis {n1!r} vs {n2!r}"
            if s1 is not None and s2 is not None and s1 != s2:
                return f"axis {n1!r} size {s1} vs {s2}"
        return None


# --------------------------------------------------------------------------
# Predicate registry and contracts

# A predicate receives the slot bindings plus its configured params and
# returns (passed, message).
Predicate = Callable[..., tuple[bool, str]]

_PREDICATES: dict[str, Predicate] = {}


def register_predicate(name: str, fn: Predicate | None = None):
    """Register a contract predicate under a stable name (also a decorator)."""
    def _reg(f: Predicate) -> Predicate:
        _PREDICATES[name] = f
        return f
    if fn is not None:
        return _reg(fn)
    return _reg


def predicate_registered(name: str) -> bool:
    return name in _PREDICATES


class Severity(str, Enum):
    FATAL = "fatal"
    WARNING = "warning"


@dataclass(frozen=True)
class Check:
    id: str
    description: str
    predicate_ref: str
    severity: Severity = Severity.FATAL
    params: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Contract:
    preconditions: tuple[Check, ...] = ()
    postconditions: tuple[Check, ...] = ()
    invariants: tuple[Check, ...] = ()

    def __post_init__(self):
        ids = [c.id for c in self.all_checks()]
        if len(ids) != len(set(ids)):
            raise SemanticError("duplicate check ids within a contract")

    def all_checks(self) -> tuple[Check, ...]:
        return self.preconditions + self.postconditions + self.invariants

    def checks_for(self, phase: str) -> tuple[Check, ...]:
        if phase == "pre":
            return self.preconditions + self.invariants
        if phase == "post":
            return self.postconditions + self.invariants
        if phase == "invariant":
            return self.invariants
        raise ValueError(f"unknown phase {phase!r}")


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    severity: Severity
    message: str


@dataclass(frozen=True)
class CheckReport:
    phase: str
    results: tuple[CheckResult, ...]

    @property
    def fatal(self) -> bool:
        return any(not r.passed and r.severity is Severity.FATAL for r in self.results)

    @property
    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(r for r in self.results if not r.passed)


def check_contract(contract: Contract, bindings: Mapping[str, SemanticArray],
                   phase: str) -> CheckReport:
    """Evaluate one phase of a contract against slot bindings."""
    results = []
    for check in contract.checks_for(phase):
        fn = _PREDICATES.get(check.predicate_ref)
        if fn is None:
            raise ConfigurationError(
                f"check {check.id!r}: predicate {check.predicate_ref!r} is not registered"
            )
        slot = check.params.get("slot")
        if slot is not None and slot not in bindings:
            raise ConfigurationError(
                f"check {check.id!r}: slot {slot!r} not present in bindings"
            )
        passed, message = fn(bindings, **dict(check.params))
        results.append(CheckResult(check.id, bool(passed), check.severity, message))
    return CheckReport(phase=phase, results=tuple(results))


# --------------------------------------------------------------------------
# Built-in predicates

@register_predicate("units_equal")
def _units_equal(bindings, *, slot, units, **_):
    arr = bindings[slot]
    ok = arr.units == units
    return ok, f"slot {slot!r} units {arr.units!r}, expected {units!r}"


@register_predicate("kind_is")
def _kind_is(bindings, *, slot, kind, **_):
    arr = bindings[slot]
    ok = arr.kind.value == kind
    return ok, f"slot {slot!r} kind {arr.kind.value}, expected {kind}"


@register_predicate("in_range")
def _in_range(bindings, *, slot, lo=-np.inf, hi=np.inf, **_):
    arr = bindings[slot]
    valid = arr._valid_mask()
    if not valid.any():
        return True, f"slot {slot!r} has no valid values"
    vals = arr.values[valid]
    ok = bool(vals.min() >= lo and vals.max() <= hi)
    return ok, f"slot {slot!r} values in [{vals.min()}, {vals.max()}], required [{lo}, {hi}]"


@register_predicate("non_negative")
def _non_negative(bindings, *, slot, **_):
    return _in_range(bindings, slot=slot, lo=0.0)


@register_predicate("finite")
def _finite(bindings, *, slot, **_):
    arr = bindings[slot]
    vals = arr.values[arr._valid_mask()]
    ok = bool(np.all(np.isfinite(vals.astype(float)))) if vals.size else True
    return ok, f"slot {slot!r} finiteness"


@register_predicate("axes_are")
def _axes_are(bindings, *, slot, axes, **_):
    arr = bindings[slot]
    ok = list(arr.axis_names) == list(axes)
    return ok, f"slot {slot!r} axes {list(arr.axis_names)}, expected {list(axes)}"


@register_predicate("sums_to")
def _sums_to(bindings, *, slot, total, tol=1e-9, **_):
    arr = bindings[slot]
    s = float(arr.values[arr._valid_mask()].sum())
    ok = abs(s - total) <= tol
    return ok, f"slot {slot!r} sums to {s}, expected {total} ± {tol}"
