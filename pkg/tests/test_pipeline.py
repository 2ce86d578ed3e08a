import numpy as np
import pytest

from emberplan.pipeline import (
    CompositionError,
    ContractViolation,
    DtmGraph,
    DtmModule,
    Edge,
    ModuleExecutionError,
    compose,
    graph_from_document,
    register_transform,
    run_pipeline,
)
from emberplan.semarray import (
    Axis,
    Check,
    Contract,
    ElementKind,
    SemanticArray,
    SlotSignature,
)


def sig(units="1", size=3):
    return SlotSignature(axes=(("i", size),), kind=ElementKind.REAL, units=units)


def arr(values, units="1"):
    values = np.asarray(values, dtype=float)
    return SemanticArray(axes=(Axis("i", values.shape[0]),),
                         kind=ElementKind.REAL, units=units, values=values)


def identity_module(mid, units="1", contract=None):
    return DtmModule(
        id=mid, variant_tag="v1",
        input_slots={"x": sig(units)},
        output_slots={"y": sig(units)},
        contract=contract or Contract(),
        transform_ref="identity",
    )


def chain_graph(*mods, sink="out"):
    edges = tuple(Edge(a.id, "y", b.id, "x") for a, b in zip(mods, mods[1:]))
    return DtmGraph(
        nodes=mods, edges=edges,
        sources={(mods[0].id, "x"): "input"},
        sinks={sink: (mods[-1].id, "y")},
    )


class TestCompose:
    def test_single_module_pipeline(self):
        p = compose(chain_graph(identity_module("a")))
        assert p.order == ("a",)

    def test_chain_topological_order(self):
        # oracle: the only valid order of a 3-node chain is [a, b, c]
        p = compose(chain_graph(identity_module("a"), identity_module("b"),
                                identity_module("c")))
        assert p.order == ("a", "b", "c")

    def test_unit_mismatch_names_both_units(self):
        a = identity_module("a", units="m")
        b = identity_module("b", units="m/s")
        with pytest.raises(CompositionError) as exc:
            compose(chain_graph(a, b))
        assert "'m'" in str(exc.value) and "'m/s'" in str(exc.value)

    def test_cycle_detected(self):
        a, b = identity_module("a"), identity_module("b")
        g = DtmGraph(nodes=(a, b),
                     edges=(Edge("a", "y", "b", "x"), Edge("b", "y", "a", "x")),
                     sources={}, sinks={})
        with pytest.raises(CompositionError, match="cycle"):
            compose(g)

    def test_dangling_slot(self):
        g = DtmGraph(nodes=(identity_module("a"),), edges=(), sources={}, sinks={})
        with pytest.raises(CompositionError, match="dangling"):
            compose(g)

    def test_double_fed_slot(self):
        a, b, c = identity_module("a"), identity_module("b"), identity_module("c")
        g = DtmGraph(nodes=(a, b, c),
                     edges=(Edge("a", "y", "c", "x"), Edge("b", "y", "c", "x")),
                     sources={("a", "x"): "i1", ("b", "x"): "i2"}, sinks={})
        with pytest.raises(CompositionError, match="more than one"):
            compose(g)


class TestRunPipeline:
    def test_identity_bit_exact(self):
        p = compose(chain_graph(identity_module("a")))
        x = arr([1.0, 2.0, 3.0])
        out, trace = run_pipeline(p, {"input": x})
        assert out["out"].digest() == x.digest()
        assert len(trace.records) == 1

    def test_purity_identical_digests(self):
        p = compose(chain_graph(identity_module("a"), identity_module("b")))
        x = arr([0.5, 0.25, 0.125])
        out1, t1 = run_pipeline(p, {"input": x})
        out2, t2 = run_pipeline(p, {"input": x})
        assert out1["out"].digest() == out2["out"].digest()
        assert t1.digest() == t2.digest()

    @pytest.fixture
    def failing_middle(self):
        bad = Contract(postconditions=(
            Check("nonneg", "", "non_negative", params={"slot": "y"}),
        ))
        return chain_graph(
            identity_module("a"),
            DtmModule(id="b", variant_tag="v1",
                      input_slots={"x": sig()}, output_slots={"y": sig()},
                      contract=bad, transform_ref="negate"),
            identity_module("c"),
        )

    def test_enforce_halts_at_offending_module(self, failing_middle):
        p = compose(failing_middle)
        with pytest.raises(ContractViolation) as exc:
            run_pipeline(p, {"input": arr([1.0, 2.0, 3.0])}, mode="enforce")
        assert exc.value.module_id == "b"
        assert "nonneg" in str(exc.value)
        # halt ordering: executed modules are a prefix of the topological order
        executed = [r.module_id for r in exc.value.trace.records]
        assert executed == ["a", "b"][:len(executed)]
        assert "c" not in executed

    def test_audit_collects_failure_and_runs_all(self, failing_middle):
        p = compose(failing_middle)
        out, trace = run_pipeline(p, {"input": arr([1.0, 2.0, 3.0])}, mode="audit")
        assert [r.module_id for r in trace.records] == ["a", "b", "c"]
        failures = [res for rec in trace.records for rep in rec.check_results
                    for res in rep.results if not res.passed]
        assert len(failures) == 1

    def test_transform_exception_wrapped_with_module_id(self):
        @register_transform("boom")
        def _boom(bindings):
            raise RuntimeError("kaput")

        mod = DtmModule(id="bad", variant_tag="v1",
                        input_slots={"x": sig()}, output_slots={"y": sig()},
                        contract=Contract(), transform_ref="boom")
        p = compose(chain_graph(mod))
        with pytest.raises(ModuleExecutionError, match="bad"):
            run_pipeline(p, {"input": arr([1.0, 2.0, 3.0])})

    def test_runtime_signature_enforcement_on_external_input(self):
        p = compose(chain_graph(identity_module("a", units="m/s")))
        with pytest.raises(ContractViolation):
            run_pipeline(p, {"input": arr([1.0, 2.0, 3.0], units="m")})


class TestRandomCompatibleGraphs:
    """Signature soundness: composed -> no wiring mismatch ever at run time."""

    def test_random_chains_never_mismatch(self):
        rng = np.random.default_rng(7)
        units_pool = ["m", "m/s", "ha", "1"]
        for trial in range(50):
            n = int(rng.integers(1, 6))
            units = str(rng.choice(units_pool))
            mods = [identity_module(f"m{trial}_{i}", units=units) for i in range(n)]
            p = compose(chain_graph(*mods))
            x = arr(rng.uniform(size=3), units=units)
            out, trace = run_pipeline(p, {"input": x})
            assert len(trace.records) == n
            assert out["out"].digest() == x.digest()


class TestDocumentLoading:
    DOC = {
        "modules": [
            {"id": "a", "transform": "identity",
             "inputs": {"x": {"axes": [{"name": "i", "size": 3}], "units": "m"}},
             "outputs": {"y": {"axes": [{"name": "i", "size": 3}], "units": "m"}},
             "contract": {"pre": [{"id": "finite-x", "predicate": "finite",
                                   "params": {"slot": "x"}}]}},
        ],
        "edges": [],
        "sources": {"a.x": "input"},
        "sinks": {"out": "a.y"},
    }

    def test_round_trip(self):
        g = graph_from_document(self.DOC)
        p = compose(g)
        out, _ = run_pipeline(p, {"input": arr([1.0, 2.0, 3.0], units="m")})
        assert list(out["out"].values) == [1.0, 2.0, 3.0]
