"""Component contract: meta validation and effective trigger/persistence."""

import pytest

from cosim.api import EVENT_BASED, HYBRID, TIME_BASED, OutputBundle, SimulatorMeta
from cosim.errors import MetaError, ProtocolError


def meta_payload(ctype="time-based", **model_overrides):
    model = {
        "public": True,
        "params": [],
        "attrs": ["out"],
        "trigger": [],
        "non_persistent": [],
    }
    model.update(model_overrides)
    return {"api_version": "1.0", "component_type": ctype, "models": {"M": model}}


class TestMetaValidation:
    def test_valid_time_based(self):
        meta = SimulatorMeta.from_payload(meta_payload())
        assert meta.component_type == TIME_BASED
        assert meta.models["M"].attrs == ("out",)

    def test_unknown_component_type(self):
        with pytest.raises(MetaError, match="component_type"):
            SimulatorMeta.from_payload(meta_payload(ctype="continuous"))

    def test_trigger_must_be_subset_of_attrs(self):
        with pytest.raises(MetaError, match="trigger must be a subset"):
            SimulatorMeta.from_payload(
                meta_payload(ctype="hybrid", trigger=["nope"])
            )

    def test_non_persistent_must_be_subset_of_attrs(self):
        with pytest.raises(MetaError, match="non_persistent must be a subset"):
            SimulatorMeta.from_payload(
                meta_payload(ctype="hybrid", non_persistent=["nope"])
            )

    def test_time_based_must_not_declare_trigger(self):
        with pytest.raises(MetaError, match="time-based components must not declare trigger"):
            SimulatorMeta.from_payload(meta_payload(trigger=["out"]))

    def test_time_based_must_not_declare_non_persistent(self):
        with pytest.raises(MetaError, match="must not declare non_persistent"):
            SimulatorMeta.from_payload(meta_payload(non_persistent=["out"]))

    def test_at_least_one_public_model(self):
        with pytest.raises(MetaError, match="public"):
            SimulatorMeta.from_payload(meta_payload(public=False))

    def test_models_required(self):
        with pytest.raises(MetaError, match="models"):
            SimulatorMeta.from_payload({"api_version": "1.0", "component_type": "hybrid", "models": {}})

    def test_duplicate_attrs_rejected(self):
        with pytest.raises(MetaError, match="duplicates"):
            SimulatorMeta.from_payload(meta_payload(attrs=["out", "out"]))


class TestEffectiveSemantics:
    def test_event_based_triggers_on_everything(self):
        meta = SimulatorMeta.from_payload(
            meta_payload(ctype=EVENT_BASED, attrs=["a", "b"])
        )
        assert meta.effective_trigger("M") == {"a", "b"}
        assert meta.effective_non_persistent("M") == {"a", "b"}

    def test_time_based_triggers_on_nothing(self):
        meta = SimulatorMeta.from_payload(meta_payload(attrs=["a", "b"]))
        assert meta.effective_trigger("M") == frozenset()
        assert meta.effective_non_persistent("M") == frozenset()

    def test_hybrid_lists_apply_verbatim(self):
        meta = SimulatorMeta.from_payload(
            meta_payload(ctype=HYBRID, attrs=["a", "b"], trigger=["a"], non_persistent=["b"])
        )
        assert meta.effective_trigger("M") == {"a"}
        assert meta.effective_non_persistent("M") == {"b"}

    def test_roundtrip_payload(self):
        payload = meta_payload(ctype=HYBRID, attrs=["a", "b"], trigger=["a"])
        meta = SimulatorMeta.from_payload(payload)
        assert SimulatorMeta.from_payload(meta.to_payload()) == meta


class TestOutputBundle:
    def test_plain_dict_data(self):
        bundle = OutputBundle.from_payload({"data": {"E-0": {"out": 1}}, "output_time": 7})
        assert bundle.data == {"E-0": {"out": 1}}
        assert bundle.output_time == 7

    def test_output_time_must_be_int(self):
        with pytest.raises(ProtocolError, match="output_time"):
            OutputBundle.from_payload({"data": {}, "output_time": 1.5})

    def test_absent_output_time(self):
        assert OutputBundle.from_payload({"data": {}}).output_time is None
