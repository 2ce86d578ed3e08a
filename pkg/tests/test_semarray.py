import numpy as np
import pytest

from emberplan.semarray import (
    Axis,
    Check,
    CheckReport,
    ConfigurationError,
    Contract,
    ElementKind,
    SemanticArray,
    SemanticError,
    Severity,
    SlotSignature,
    check_contract,
)


def arr(values, units="1", kind=ElementKind.REAL, **kw):
    values = np.asarray(values, dtype=float)
    axes = tuple(Axis(f"ax{i}", s) for i, s in enumerate(values.shape))
    return SemanticArray(axes=axes, kind=kind, units=units, values=values, **kw)


class TestSemanticArray:
    def test_axis_product_must_match_value_count(self):
        with pytest.raises(SemanticError, match="value count"):
            SemanticArray(axes=(Axis("row", 2), Axis("col", 3)),
                          kind=ElementKind.REAL, units="1",
                          values=np.zeros(5))

    def test_range_enforced_on_non_nodata_values(self):
        with pytest.raises(SemanticError, match="range"):
            arr([0.5, 1.5], value_range=(0.0, 1.0))
        a = arr([0.5, -9999.0], value_range=(0.0, 1.0), nodata=-9999.0)
        assert a.values[1] == -9999.0

    def test_categorical_requires_declared_labels(self):
        with pytest.raises(SemanticError, match="label"):
            arr([0, 1], kind=ElementKind.CATEGORICAL)
        with pytest.raises(SemanticError, match="label"):
            arr([0, 5], kind=ElementKind.CATEGORICAL, labels=("a", "b"))
        a = arr([0, 1], kind=ElementKind.CATEGORICAL, labels=("a", "b"))
        assert a.labels == ("a", "b")

    def test_unknown_unit_rejected(self):
        with pytest.raises(SemanticError, match="unit"):
            arr([1.0], units="furlong")

    def test_digest_stable_and_content_sensitive(self):
        a = arr([1.0, 2.0], units="m")
        b = arr([1.0, 2.0], units="m")
        c = arr([1.0, 3.0], units="m")
        assert a.digest() == b.digest()
        assert a.digest() != c.digest()

    def test_values_frozen(self):
        a = arr([1.0])
        with pytest.raises(ValueError):
            a.values[0] = 2.0


class TestSignature:
    def test_accepts_matching_array(self):
        sig = SlotSignature(axes=(("ax0", 2),), kind=ElementKind.REAL, units="m")
        assert sig.accepts(arr([1.0, 2.0], units="m")) is None

    def test_rejects_unit_mismatch_with_both_units_named(self):
        sig = SlotSignature(axes=(("ax0", None),), kind=ElementKind.REAL, units="m/s")
        msg = sig.accepts(arr([1.0], units="m"))
        assert "m/s" in msg and "'m'" in msg

    def test_wildcard_size(self):
        sig = SlotSignature(axes=(("ax0", None),), kind=ElementKind.REAL, units="1")
        assert sig.accepts(arr([1.0, 2.0, 3.0])) is None

    def test_producer_consumer_compatibility(self):
        a = SlotSignature(axes=(("row", 4),), kind=ElementKind.REAL, units="m")
        b = SlotSignature(axes=(("row", None),), kind=ElementKind.REAL, units="m")
        assert a.compatible(b) is None
        c = SlotSignature(axes=(("row", 4),), kind=ElementKind.REAL, units="m/s")
        assert "units" in a.compatible(c)


class TestCheckContract:
    def test_empty_contract_vacuous(self):
        report = check_contract(Contract(), {"x": arr([1.0])}, "pre")
        assert report.results == ()
        assert report.fatal is False

    def test_units_precondition_passes_on_identity(self):
        contract = Contract(preconditions=(
            Check("wind-units", "wind in m/s", "units_equal",
                  params={"slot": "wind", "units": "m/s"}),
        ))
        report = check_contract(contract, {"wind": arr([3.0], units="m/s")}, "pre")
        assert report.results[0].passed

    def test_negative_value_fails_fatal(self):
        contract = Contract(postconditions=(
            Check("nonneg", "burned_area non-negative", "non_negative",
                  params={"slot": "burned_area"}),
        ))
        report = check_contract(contract, {"burned_area": arr([-1.0], units="ha")}, "post")
        assert not report.results[0].passed
        assert report.fatal is True

    def test_warning_failure_not_fatal(self):
        contract = Contract(postconditions=(
            Check("soft", "", "non_negative", severity=Severity.WARNING,
                  params={"slot": "x"}),
        ))
        report = check_contract(contract, {"x": arr([-1.0])}, "post")
        assert report.failures and report.fatal is False

    def test_unresolved_predicate_is_configuration_error(self):
        contract = Contract(preconditions=(
            Check("bad", "", "no_such_predicate", params={"slot": "x"}),
        ))
        with pytest.raises(ConfigurationError):
            check_contract(contract, {"x": arr([1.0])}, "pre")

    def test_missing_slot_is_configuration_error(self):
        contract = Contract(preconditions=(
            Check("c", "", "non_negative", params={"slot": "absent"}),
        ))
        with pytest.raises(ConfigurationError):
            check_contract(contract, {"x": arr([1.0])}, "pre")

    def test_duplicate_check_ids_rejected(self):
        with pytest.raises(SemanticError, match="duplicate"):
            Contract(preconditions=(
                Check("c", "", "non_negative", params={"slot": "x"}),
                Check("c", "", "finite", params={"slot": "x"}),
            ))
