"""Composition and contract-checked execution of data-transform graphs.

A graph wires module output slots to input slots. Composition validates the
wiring (acyclicity, single producers, signature compatibility) before any
execution; running the composed pipeline checks each module's contract around
its transform and records a provenance trace.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .semarray import (
    Check,
    CheckReport,
    ConfigurationError,
    Contract,
    ElementKind,
    SemanticArray,
    Severity,
    SlotSignature,
    check_contract,
    predicate_registered,
)

Transform = Callable[[Mapping[str, SemanticArray]], Mapping[str, SemanticArray]]

_TRANSFORMS: dict[str, Transform] = {}


def register_transform(name: str, fn: Transform | None = None):
    def _reg(f: Transform) -> Transform:
        _TRANSFORMS[name] = f
        return f
    if fn is not None:
        return _reg(fn)
    return _reg


class CompositionError(ValueError):
    """Graph wiring is invalid; raised before any execution."""


class ModuleExecutionError(RuntimeError):
    def __init__(self, module_id: str, cause: BaseException):
        super().__init__(f"module {module_id!r} raised {cause!r}")
        self.module_id = module_id
        self.cause = cause


class ContractViolation(RuntimeError):
    """Fatal check failure in enforce mode."""

    def __init__(self, module_id: str, report: CheckReport, trace: "ProvenanceTrace"):
        failed = [r.check_id for r in report.failures]
        super().__init__(f"module {module_id!r} failed {report.phase}-checks {failed}")
        self.module_id = module_id
        self.report = report
        self.trace = trace


@dataclass(frozen=True)
class DtmModule:
    """One typed transform with its semantic signatures and contract."""

    id: str
    variant_tag: str
    input_slots: Mapping[str, SlotSignature]
    output_slots: Mapping[str, SlotSignature]
    contract: Contract
    transform_ref: str

    def __post_init__(self):
        overlap = set(self.input_slots) & set(self.output_slots)
        if overlap:
            raise CompositionError(f"module {self.id!r}: slot names reused: {sorted(overlap)}")
        declared = set(self.input_slots) | set(self.output_slots)
        for check in self.contract.all_checks():
            if not predicate_registered(check.predicate_ref):
                raise ConfigurationError(
                    f"module {self.id!r} check {check.id!r}: "
                    f"unregistered predicate {check.predicate_ref!r}"
                )
            slot = check.params.get("slot")
            if slot is not None and slot not in declared:
                raise CompositionError(
                    f"module {self.id!r} check {check.id!r} references "
                    f"undeclared slot {slot!r}"
                )


@dataclass(frozen=True)
class Edge:
    producer: str
    out_slot: str
    consumer: str
    in_slot: str


@dataclass(frozen=True)
class DtmGraph:
    nodes: tuple[DtmModule, ...]
    edges: tuple[Edge, ...]
    # externally bound inputs: (module_id, in_slot) -> source name
    sources: Mapping[tuple[str, str], str] = field(default_factory=dict)
    # exported outputs: export name -> (module_id, out_slot)
    sinks: Mapping[str, tuple[str, str]] = field(default_factory=dict)


@dataclass(frozen=True)
class Pipeline:
    graph: DtmGraph
    order: tuple[str, ...]

    @property
    def modules(self) -> dict[str, DtmModule]:
        return {m.id: m for m in self.graph.nodes}


@dataclass(frozen=True)
class TraceRecord:
    module_id: str
    variant_tag: str
    input_digests: Mapping[str, str]
    output_digests: Mapping[str, str]
    check_results: tuple[CheckReport, ...]
    wall_time_s: float


@dataclass
class ProvenanceTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def digest(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        for rec in self.records:
            h.update(rec.module_id.encode())
            h.update(json.dumps(sorted(rec.output_digests.items())).encode())
        return h.hexdigest()


def compose(graph: DtmGraph) -> Pipeline:
    """Validate wiring and return a topologically ordered pipeline.

    Fails (CompositionError) on cycles, dangling or doubly-fed slots and
    signature mismatches; never executes a transform.
    """
    modules = {m.id: m for m in graph.nodes}
    if len(modules) != len(graph.nodes):
        raise CompositionError("duplicate module ids")

    producers: dict[tuple[str, str], Edge] = {}
    for e in graph.edges:
        if e.producer not in modules or e.consumer not in modules:
            raise CompositionError(f"edge references unknown module: {e}")
        if e.out_slot not in modules[e.producer].output_slots:
            raise CompositionError(
                f"module {e.producer!r} has no output slot {e.out_slot!r}")
        if e.in_slot not in modules[e.consumer].input_slots:
            raise CompositionError(
                f"module {e.consumer!r} has no input slot {e.in_slot!r}")
        key = (e.consumer, e.in_slot)
        if key in producers or key in graph.sources:
            raise CompositionError(f"slot {key} has more than one producer/binding")
        producers[key] = e

    for mod in graph.nodes:
        for slot in mod.input_slots:
            key = (mod.id, slot)
            if key not in producers and key not in graph.sources:
                raise CompositionError(f"dangling input slot {key}: no producer or binding")

    for name, (mid, slot) in graph.sinks.items():
        if mid not in modules or slot not in modules[mid].output_slots:
            raise CompositionError(f"sink {name!r} references unknown slot ({mid}, {slot})")

    for e in graph.edges:
        out_sig = modules[e.producer].output_slots[e.out_slot]
        in_sig = modules[e.consumer].input_slots[e.in_slot]
        mismatch = out_sig.compatible(in_sig)
        if mismatch:
            raise CompositionError(
                f"signature mismatch on {e.producer}.{e.out_slot} -> "
                f"{e.consumer}.{e.in_slot}: {mismatch} "
                f"(producer {out_sig}, consumer {in_sig})"
            )

    # Kahn topological sort, deterministic by module id.
    deps: dict[str, set[str]] = {m.id: set() for m in graph.nodes}
    for e in graph.edges:
        deps[e.consumer].add(e.producer)
    order: list[str] = []
    ready = sorted(m for m, d in deps.items() if not d)
    pending = {m: set(d) for m, d in deps.items() if d}
    while ready:
        nxt = ready.pop(0)
        order.append(nxt)
        newly = []
        for m, d in list(pending.items()):
            d.discard(nxt)
            if not d:
                newly.append(m)
                del pending[m]
        ready = sorted(ready + newly)
    if pending:
        raise CompositionError(f"cycle detected among modules {sorted(pending)}")
    return Pipeline(graph=graph, order=tuple(order))


def run_pipeline(pipeline: Pipeline, inputs: Mapping[str, SemanticArray],
                 mode: str = "enforce") -> tuple[dict[str, SemanticArray], ProvenanceTrace]:
    """Execute a composed pipeline over externally bound inputs.

    mode="enforce" halts at the first fatal check failure (ContractViolation
    carries the partial trace); mode="audit" runs everything and collects
    failures in the trace. Warning-severity failures never halt.
    """
    if mode not in ("enforce", "audit"):
        raise ValueError(f"unknown mode {mode!r}")
    graph = pipeline.graph
    modules = pipeline.modules
    for (mid, slot), name in graph.sources.items():
        if name not in inputs:
            raise ValueError(f"source {name!r} (for {mid}.{slot}) not bound")

    slot_values: dict[tuple[str, str], SemanticArray] = {}
    trace = ProvenanceTrace()
    prod_of: dict[tuple[str, str], tuple[str, str]] = {
        (e.consumer, e.in_slot): (e.producer, e.out_slot) for e in graph.edges
    }

    for mid in pipeline.order:
        mod = modules[mid]
        bindings: dict[str, SemanticArray] = {}
        for slot, sig in mod.input_slots.items():
            key = (mid, slot)
            if key in graph.sources:
                arr = inputs[graph.sources[key]]
            else:
                arr = slot_values[prod_of[key]]
            mismatch = sig.accepts(arr)
            if mismatch:
                report = CheckReport(phase="pre", results=(
                    _signature_failure(slot, mismatch),))
                if mode == "enforce":
                    raise ContractViolation(mid, report, trace)
                trace.records.append(_failed_record(mod, report))
                bindings = None
                break
            bindings[slot] = arr
        if bindings is None:
            continue

        t0 = time.perf_counter()
        reports = [check_contract(mod.contract, bindings, "pre")]
        if reports[-1].fatal and mode == "enforce":
            raise ContractViolation(mid, reports[-1], trace)

        fn = _TRANSFORMS.get(mod.transform_ref)
        if fn is None:
            raise ConfigurationError(
                f"module {mid!r}: transform {mod.transform_ref!r} is not registered")
        try:
            outputs = dict(fn(bindings))
        except Exception as exc:  # transform panic -> wrapped with module id
            raise ModuleExecutionError(mid, exc) from exc

        missing = set(mod.output_slots) - set(outputs)
        if missing:
            raise ModuleExecutionError(
                mid, ValueError(f"transform omitted output slots {sorted(missing)}"))
        for slot, sig in mod.output_slots.items():
            mismatch = sig.accepts(outputs[slot])
            if mismatch:
                report = CheckReport(phase="post", results=(
                    _signature_failure(slot, mismatch),))
                if mode == "enforce":
                    raise ContractViolation(mid, report, trace)
                reports.append(report)

        post_bindings = dict(bindings)
        post_bindings.update(outputs)
        reports.append(check_contract(mod.contract, post_bindings, "post"))
        wall = time.perf_counter() - t0

        record = TraceRecord(
            module_id=mid,
            variant_tag=mod.variant_tag,
            input_digests={s: a.digest() for s, a in bindings.items()},
            output_digests={s: a.digest() for s, a in outputs.items()},
            check_results=tuple(reports),
            wall_time_s=wall,
        )
        trace.records.append(record)
        if reports[-1].fatal and mode == "enforce":
            raise ContractViolation(mid, reports[-1], trace)

        for slot, arr in outputs.items():
            slot_values[(mid, slot)] = arr

    exported = {name: slot_values[key] for name, key in graph.sinks.items()
                if key in slot_values}
    return exported, trace


def _signature_failure(slot: str, mismatch: str):
    from .semarray import CheckResult
    return CheckResult(
        check_id=f"__signature__{slot}", passed=False,
        severity=Severity.FATAL,
        message=f"slot {slot!r}: {mismatch}",
    )


def _failed_record(mod: DtmModule, report: CheckReport) -> TraceRecord:
    return TraceRecord(module_id=mod.id, variant_tag=mod.variant_tag,
                       input_digests={}, output_digests={},
                       check_results=(report,), wall_time_s=0.0)


# --------------------------------------------------------------------------
# JSON configuration loading

def _sig_from_doc(doc: Mapping) -> SlotSignature:
    axes = tuple((a["name"], a.get("size")) for a in doc.get("axes", []))
    return SlotSignature(axes=axes, kind=ElementKind(doc.get("kind", "real")),
                         units=doc.get("units", "1"))


def _checks_from_doc(docs) -> tuple[Check, ...]:
    out = []
    for d in docs or []:
        out.append(Check(
            id=d["id"],
            description=d.get("description", ""),
            predicate_ref=d["predicate"],
            severity=Severity(d.get("severity", "fatal")),
            params=d.get("params", {}),
        ))
    return tuple(out)


def graph_from_document(doc: Mapping) -> DtmGraph:
    """Build a graph from its JSON document form (see README for the schema)."""
    nodes = []
    for nd in doc.get("modules", []):
        nodes.append(DtmModule(
            id=nd["id"],
            variant_tag=nd.get("variant", "default"),
            input_slots={k: _sig_from_doc(v) for k, v in nd.get("inputs", {}).items()},
            output_slots={k: _sig_from_doc(v) for k, v in nd.get("outputs", {}).items()},
            contract=Contract(
                preconditions=_checks_from_doc(nd.get("contract", {}).get("pre")),
                postconditions=_checks_from_doc(nd.get("contract", {}).get("post")),
                invariants=_checks_from_doc(nd.get("contract", {}).get("invariant")),
            ),
            transform_ref=nd["transform"],
        ))
    edges = tuple(
        Edge(producer=e["from"].split(".")[0], out_slot=e["from"].split(".")[1],
             consumer=e["to"].split(".")[0], in_slot=e["to"].split(".")[1])
        for e in doc.get("edges", [])
    )
    sources = {tuple(k.split(".")): v for k, v in doc.get("sources", {}).items()}
    sinks = {k: tuple(v.split(".")) for k, v in doc.get("sinks", {}).items()}
    return DtmGraph(nodes=tuple(nodes), edges=edges, sources=sources, sinks=sinks)


# A few transforms usable from configs; all use slot names x/(a,b) -> y.

@register_transform("identity")
def _identity(bindings):
    return {"y": bindings["x"]}


@register_transform("negate")
def _negate(bindings):
    x = bindings["x"]
    return {"y": x.with_values(-x.values)}


@register_transform("add")
def _add(bindings):
    a, b = bindings["a"], bindings["b"]
    return {"y": a.with_values(a.values + b.values)}


@register_transform("halve")
def _halve(bindings):
    x = bindings["x"]
    return {"y": x.with_values(x.values * 0.5)}
