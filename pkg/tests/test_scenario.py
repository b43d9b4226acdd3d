import json
from pathlib import Path

import pytest

from navsec.scenario import Params, Scenario, ScenarioInvalid

BUNDLED = sorted((Path(__file__).parent.parent / "src" / "navsec" / "scenarios").glob("*.json"))


def minimal(**extra):
    raw = {"name": "t", "nodes": [
        {"id": "n1", "role": "navaid", "position": [0, 0, 0], "protocols": ["p4"]},
        {"id": "c1", "role": "client", "position": [100, 0, 0],
         "ranging": [{"protocol": "p4", "navaid": "n1", "at_ns": 1000}]},
    ]}
    raw.update(extra)
    return raw


def reasons(raw):
    with pytest.raises(ScenarioInvalid) as exc:
        Scenario.from_dict(raw)
    return " | ".join(exc.value.reasons)


@pytest.mark.parametrize("path", BUNDLED, ids=lambda p: p.stem)
def test_bundled_round_trip(path):
    sc = Scenario.load(path)
    assert Scenario.from_dict(json.loads(sc.to_json())) == sc


def test_defaults_fill_in():
    sc = Scenario.from_dict(minimal())
    assert sc.params == Params()
    assert sc.backend == "test"
    assert sc.node("c1").clock == {"bias_ns": 0, "drift": 0.0, "quantization_ns": 1}
    assert [n.id for n in sc.by_role("navaid")] == ["n1"]


def test_resolved_tolerances():
    sc = Scenario.from_dict(minimal(params={"freshness_window_ns": 3000}))
    assert sc.nonce_expiry_ns == 6000
    assert sc.clock_tolerance_ns == 2


def test_all_errors_reported_together():
    text = reasons({"name": "", "nodes": [{"id": "waytoolongid", "role": "bogus", "position": [0, 0]}],
                    "params": {"foo": 1}, "extra": True})
    for bit in ("name", "unknown param 'foo'", "id must be", "role must be", "position", "unknown top-level"):
        assert bit in text


@pytest.mark.parametrize("mutate, needle", [
    (lambda r: r["nodes"][1]["ranging"][0].update(navaid="zz"), "unknown node"),
    (lambda r: r["nodes"][1]["ranging"][0].update(navaid="c1"), "not a navaid"),
    (lambda r: r["nodes"][0].update(protocols=["p5"]), "does not serve p4"),
    (lambda r: r["nodes"].append(dict(r["nodes"][0])), "duplicate node id"),
    (lambda r: r["nodes"][0].update(capabilities=[{"type": "replay"}]), "only attackers"),
    (lambda r: r["nodes"][0].update(clock={"quantization_ns": 0}), "quantization"),
    (lambda r: r["nodes"][0].update(clock={"bias_ns": -5}), "bias >= 0"),
    (lambda r: r.update(duration_ns=0), "duration_ns"),
    (lambda r: r.update(backend="quantum"), "backend"),
    (lambda r: r.update(params={"detection_ratio": -1}), "detection_ratio"),
    (lambda r: r.update(params={"client_clock_bound_ns": 1.5}), "client_clock_bound_ns"),
    (lambda r: r.update(channels={"loss": [{"probability": 2}]}), "probability"),
    (lambda r: r.update(schema="navsec.scenario/9"), "schema"),
])
def test_invalid_inputs(mutate, needle):
    raw = minimal()
    mutate(raw)
    assert needle in reasons(raw)


def test_bad_json_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ScenarioInvalid, match="invalid JSON"):
        Scenario.load(p)


def test_not_an_object():
    assert "JSON object" in reasons([1, 2, 3])
