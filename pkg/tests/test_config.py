import copy
import json

import pytest

from pseudosim.config import ConfigError, load_scenario
from pseudosim.strategy import PeriodicPolicy, SegmentPolicy


def minimal_config(**over):
    cfg = {
        "name": "unit",
        "seed": 1,
        "duration_s": 10.0,
        "tick_s": 0.1,
        "road": {
            "segments": [
                {"id": "a", "start": [0.0, 0.0], "end": [500.0, 0.0], "speed_limit_mps": 30.0},
            ]
        },
        "fleet": [
            {"vehicle_id": 1, "route": ["a"], "speed_mps": 10.0},
        ],
    }
    cfg.update(over)
    return cfg


def violations_of(cfg, **kw):
    with pytest.raises(ConfigError) as err:
        load_scenario(cfg, **kw)
    return err.value.violations


def test_minimal_config_defaults():
    cfg = load_scenario(minimal_config())
    assert cfg.name == "unit"
    assert cfg.tick_s == 0.1
    assert cfg.beaconing.cam_freq_hz == 10.0
    assert cfg.beaconing.loss_rate == 0.0
    assert isinstance(cfg.policy.policy, PeriodicPolicy)
    assert cfg.pool.size == 20 and cfg.pool.min_concurrent_valid == 2
    assert cfg.pool.selection == "no_reuse"
    assert cfg.sba.at_lifetime_s == 600.0
    assert cfg.adversary.coverage == "full"
    assert cfg.locks.events == ()
    assert cfg.fleet[0].length_m == 4.5
    assert cfg.fleet[0].clock_skew_s == 0.0


def test_accepts_dict_path_and_json_text(tmp_path):
    obj = minimal_config()
    from_dict = load_scenario(obj)
    from_text = load_scenario(json.dumps(obj))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(obj))
    from_path = load_scenario(path)
    assert from_dict.digest() == from_text.digest() == from_path.digest()


def test_digest_ignores_key_order_and_fills_defaults():
    obj = minimal_config()
    reordered = dict(reversed(list(obj.items())))
    assert load_scenario(obj).digest() == load_scenario(reordered).digest()

    # explicitly writing a default value changes nothing
    explicit = minimal_config(tick_s=0.1, pool={"size": 20})
    assert load_scenario(explicit).digest() == load_scenario(minimal_config()).digest()


def test_with_seed_changes_only_seed():
    base = load_scenario(minimal_config())
    reseeded = base.with_seed(99)
    assert reseeded.seed == 99
    assert reseeded.digest() != base.digest()
    a, b = base.canonical_dict(), reseeded.canonical_dict()
    a.pop("seed"), b.pop("seed")
    assert a == b


def test_unknown_fields_strict_vs_lenient():
    cfg = minimal_config(extra_knob=1)
    cfg["beaconing"] = {"cam_freq_hz": 10.0, "mystery": 2}
    v = violations_of(cfg)
    assert "extra_knob: unknown field" in v
    assert "beaconing.mystery: unknown field" in v

    loaded = load_scenario(cfg, strict=False)
    assert loaded.beaconing.cam_freq_hz == 10.0


def test_lenient_mode_still_validates_values():
    cfg = minimal_config(duration_s=-5.0)
    v = violations_of(cfg, strict=False)
    assert any(s.startswith("duration_s:") for s in v)


def test_missing_required_fields():
    v = violations_of({"name": "x"})
    assert "seed: required" in v
    assert "duration_s: required" in v
    assert "fleet: must be a non-empty array" in v
    assert "road.segments: must be a non-empty array" in v


def test_violations_are_sorted_and_complete():
    cfg = minimal_config(seed=-1, tick_s=20.0)
    cfg["fleet"][0]["speed_mps"] = 0.0
    v = violations_of(cfg)
    assert v == sorted(v)
    assert v == [
        "beaconing.cam_freq_hz: beacon period must be a whole number of ticks",
        "fleet[0].speed_mps: must be > 0.0",
        "seed: must be >= 0",
        "tick_s: must not exceed duration_s",
    ]


def test_beacon_period_must_align_to_ticks():
    ok = minimal_config()
    ok["beaconing"] = {"cam_freq_hz": 5.0}  # 0.2 s period on 0.1 s ticks
    load_scenario(ok)

    bad = minimal_config()
    bad["beaconing"] = {"cam_freq_hz": 3.0}
    v = violations_of(bad)
    assert "beaconing.cam_freq_hz: beacon period must be a whole number of ticks" in v

    too_fast = minimal_config()
    too_fast["beaconing"] = {"cam_freq_hz": 20.0}
    v = violations_of(too_fast)
    assert any(s.startswith("beaconing.cam_freq_hz:") for s in v)


def test_loss_rate_upper_bound():
    cfg = minimal_config()
    cfg["beaconing"] = {"loss_rate": 1.0}
    v = violations_of(cfg)
    assert "beaconing.loss_rate: must be <= 0.999" in v


def test_route_contiguity_checked_per_vehicle():
    cfg = minimal_config()
    cfg["road"]["segments"].append(
        {"id": "b", "start": [600.0, 0.0], "end": [700.0, 0.0], "speed_limit_mps": 30.0}
    )
    cfg["fleet"][0]["route"] = ["a", "b"]  # 100 m hole between the segments
    v = violations_of(cfg)
    assert any(s.startswith("fleet[0].route:") and "route break" in s for s in v)


def test_duplicate_vehicle_ids_rejected():
    cfg = minimal_config()
    cfg["fleet"].append({"vehicle_id": 1, "route": ["a"], "speed_mps": 5.0})
    v = violations_of(cfg)
    assert "fleet[1].vehicle_id: duplicate vehicle id 1" in v


def test_departure_inside_run():
    cfg = minimal_config()
    cfg["fleet"][0]["depart_s"] = 10.0  # duration is 10
    v = violations_of(cfg)
    assert "fleet[0].depart_s: must be before the end of the run" in v


def test_policy_kind_specific_fields():
    cfg = minimal_config(policy={"kind": "periodic", "window_s": 5.0})
    v = violations_of(cfg)
    assert "policy.window_s: not a periodic policy field" in v

    cfg = minimal_config(policy={"kind": "segment", "second_change_min_m": 900.0,
                                 "second_change_max_m": 850.0})
    v = violations_of(cfg)
    assert "policy.second_change_max_m: must be >= second_change_min_m" in v

    cfg = minimal_config(policy={"kind": "nope"})
    v = violations_of(cfg)
    assert any(s.startswith("policy.kind:") for s in v)

    loaded = load_scenario(minimal_config(policy={"kind": "segment"}))
    assert isinstance(loaded.policy.policy, SegmentPolicy)
    assert loaded.policy.policy.second_change_max_m == 1500.0


def test_network_triggered_fraction_bounds():
    cfg = minimal_config(policy={"kind": "network_triggered", "max_silent_fraction": 1.5})
    v = violations_of(cfg)
    assert "policy.max_silent_fraction: must be <= 1.0" in v


def test_pool_bounds():
    cfg = minimal_config(pool={"size": 2, "min_concurrent_valid": 3})
    v = violations_of(cfg)
    assert "pool.size: must be >= min_concurrent_valid" in v

    cfg = minimal_config(pool={"min_concurrent_valid": 1})
    v = violations_of(cfg)
    assert "pool.min_concurrent_valid: must be >= 2" in v


def test_lock_event_validation():
    base = {"vehicle_id": 1, "t": 1.0, "app_id": "hd-map", "duration_s": 10.0}

    cfg = minimal_config(locks={"events": [dict(base, duration_s=255.1)]})
    v = violations_of(cfg)
    assert "locks.events[0].duration_s: must be <= 255.0" in v

    cfg = minimal_config(locks={"events": [dict(base, t=10.0)]})
    v = violations_of(cfg)
    assert "locks.events[0].t: must be before the end of the run" in v

    cfg = minimal_config(locks={"events": [dict(base, vehicle_id=9)]})
    v = violations_of(cfg)
    assert "locks.events[0].vehicle_id: no such vehicle 9" in v

    loaded = load_scenario(minimal_config(locks={"events": [base]}))
    assert loaded.locks.events[0].app_id == "hd-map"


def test_adversary_coverage_posts():
    cfg = minimal_config(adversary={"coverage": [{"x": 0.0, "y": 0.0, "radius_m": 100.0}]})
    loaded = load_scenario(cfg)
    assert loaded.adversary.coverage == ((0.0, 0.0, 100.0),)

    cfg = minimal_config(adversary={"coverage": "partial"})
    v = violations_of(cfg)
    assert 'adversary.coverage: must be "full" or an array of posts' in v

    cfg = minimal_config(adversary={"coverage": [{"x": 0.0, "y": 0.0, "radius_m": 0.0}]})
    v = violations_of(cfg)
    assert "adversary.coverage[0].radius_m: must be > 0.0" in v


def test_clock_skew_may_be_negative():
    cfg = minimal_config()
    cfg["fleet"][0]["clock_skew_s"] = -0.4
    assert load_scenario(cfg).fleet[0].clock_skew_s == -0.4


def test_bad_json_and_non_object(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_scenario("{not json")
    assert err.value.violations[0].startswith("json:")

    # strings that do not look like JSON objects are treated as paths
    listy = tmp_path / "listy.json"
    listy.write_text("[1, 2]")
    with pytest.raises(ConfigError) as err:
        load_scenario(listy)
    assert err.value.violations == ["config: must be a JSON object"]


def test_config_error_message_joins_violations():
    try:
        load_scenario(minimal_config(seed=-1, duration_s=0.0))
    except ConfigError as err:
        assert "seed: must be >= 0" in str(err)
        assert ";" in str(err)
    else:
        pytest.fail("expected ConfigError")


def test_checked_in_scenarios_all_load(scenarios_dir):
    for path in sorted(scenarios_dir.glob("*.json")):
        cfg = load_scenario(path)
        assert cfg.digest()


def test_loading_does_not_mutate_source_dict():
    obj = minimal_config()
    snapshot = copy.deepcopy(obj)
    load_scenario(obj)
    assert obj == snapshot
