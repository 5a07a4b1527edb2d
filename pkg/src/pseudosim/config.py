"""Scenario configuration: JSON schema, strict validation, canonical form.

Configs are plain JSON. Validation is strict: unknown fields are rejected and
every violation is reported as ``field: message`` so a bad file fails loudly
and completely rather than one complaint at a time. The canonical form (all
defaults materialized, keys sorted) is what gets digested into run summaries,
so two configs that mean the same thing hash the same.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from .mobility import RoadNetwork, RoadNetworkError, RoadSegment
from .sba import SCHEME_ASYMMETRIC, SCHEME_MAC
from .strategy import (
    ChangePolicy,
    NetworkTriggeredPolicy,
    PeriodicPolicy,
    SegmentPolicy,
    SynchronizedPolicy,
    SELECTION_NO_REUSE,
    SELECTION_ROUND_ROBIN,
)

MAX_CAM_FREQ_HZ = 10.0
MAX_LOCK_EVENT_S = 255.0


class ConfigError(ValueError):
    """Carries every violation found, not just the first."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class VehicleSpec:
    vehicle_id: int
    route: tuple[str, ...]
    speed_mps: float
    depart_s: float = 0.0
    length_m: float = 4.5
    width_m: float = 1.8
    clock_skew_s: float = 0.0


@dataclass(frozen=True)
class BeaconingConfig:
    cam_freq_hz: float = 10.0
    denm_interval_s: Optional[float] = None
    radio_range_m: float = 300.0
    ldm_timeout_s: float = 1.5
    positioning_sigma_m: float = 1.0
    loss_rate: float = 0.0


@dataclass(frozen=True)
class PolicyConfig:
    policy: ChangePolicy = field(default_factory=PeriodicPolicy)
    silence_s: float = 0.0
    notify_deactivation: bool = False


@dataclass(frozen=True)
class PoolConfig:
    size: int = 20
    min_concurrent_valid: int = 2
    selection: str = SELECTION_NO_REUSE


@dataclass(frozen=True)
class SbaSettings:
    token_ttl_s: float = 300.0
    sig_scheme: str = SCHEME_MAC
    ec_lifetime_s: float = 86400.0
    at_lifetime_s: float = 600.0
    at_stagger_s: float = 0.0
    at_batch_cap: int = 64


@dataclass(frozen=True)
class LockEvent:
    vehicle_id: int
    t: float
    app_id: str
    duration_s: float


@dataclass(frozen=True)
class LockConfig:
    renewal_threshold: int = 3
    validator_awareness_min: float = 0.8
    events: tuple[LockEvent, ...] = ()


@dataclass(frozen=True)
class AdversaryConfig:
    coverage: Union[str, tuple] = "full"  # "full" or tuple of (x, y, radius_m)
    sigma0_m: float = 1.0
    beta_m_per_s: float = 2.0
    no_match_cost: float = 50.0
    max_gap_s: float = 30.0
    use_quasi_identifiers: bool = True
    anonymity_region_m: float = 500.0


@dataclass
class ScenarioConfig:
    name: str
    seed: int
    duration_s: float
    tick_s: float
    road: RoadNetwork
    fleet: tuple[VehicleSpec, ...]
    beaconing: BeaconingConfig
    policy: PolicyConfig
    pool: PoolConfig
    sba: SbaSettings
    locks: LockConfig
    adversary: AdversaryConfig

    def canonical_dict(self) -> dict:
        """Fully-defaulted plain-dict form; key order fixed by json sort."""
        pol = self.policy.policy
        policy_obj: dict[str, Any] = {"kind": pol.kind}
        if isinstance(pol, PeriodicPolicy):
            policy_obj["interval_s"] = pol.interval_s
        elif isinstance(pol, SegmentPolicy):
            policy_obj.update(
                second_change_min_m=pol.second_change_min_m,
                second_change_max_m=pol.second_change_max_m,
                subsequent_min_distance_m=pol.subsequent_min_distance_m,
                subsequent_time_min_s=pol.subsequent_time_min_s,
                subsequent_time_max_s=pol.subsequent_time_max_s,
            )
        elif isinstance(pol, SynchronizedPolicy):
            policy_obj.update(interval_s=pol.interval_s, window_s=pol.window_s)
        elif isinstance(pol, NetworkTriggeredPolicy):
            policy_obj.update(
                min_interval_s=pol.min_interval_s,
                coordination_interval_s=pol.coordination_interval_s,
                max_silent_fraction=pol.max_silent_fraction,
            )
        policy_obj["silence_s"] = self.policy.silence_s
        policy_obj["notify_deactivation"] = self.policy.notify_deactivation

        coverage = self.adversary.coverage
        if coverage != "full":
            coverage = [
                {"x": c[0], "y": c[1], "radius_m": c[2]} for c in coverage
            ]
        return {
            "name": self.name,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "tick_s": self.tick_s,
            "road": {
                "segments": [
                    {
                        "id": seg.segment_id,
                        "start": list(seg.start),
                        "end": list(seg.end),
                        "speed_limit_mps": seg.speed_limit_mps,
                    }
                    for seg in sorted(
                        self.road.segments.values(), key=lambda s: s.segment_id
                    )
                ]
            },
            "fleet": [
                {
                    "vehicle_id": v.vehicle_id,
                    "route": list(v.route),
                    "speed_mps": v.speed_mps,
                    "depart_s": v.depart_s,
                    "length_m": v.length_m,
                    "width_m": v.width_m,
                    "clock_skew_s": v.clock_skew_s,
                }
                for v in self.fleet
            ],
            "beaconing": {
                "cam_freq_hz": self.beaconing.cam_freq_hz,
                "denm_interval_s": self.beaconing.denm_interval_s,
                "radio_range_m": self.beaconing.radio_range_m,
                "ldm_timeout_s": self.beaconing.ldm_timeout_s,
                "positioning_sigma_m": self.beaconing.positioning_sigma_m,
                "loss_rate": self.beaconing.loss_rate,
            },
            "policy": policy_obj,
            "pool": {
                "size": self.pool.size,
                "min_concurrent_valid": self.pool.min_concurrent_valid,
                "selection": self.pool.selection,
            },
            "sba": {
                "token_ttl_s": self.sba.token_ttl_s,
                "sig_scheme": self.sba.sig_scheme,
                "ec_lifetime_s": self.sba.ec_lifetime_s,
                "at_lifetime_s": self.sba.at_lifetime_s,
                "at_stagger_s": self.sba.at_stagger_s,
                "at_batch_cap": self.sba.at_batch_cap,
            },
            "locks": {
                "renewal_threshold": self.locks.renewal_threshold,
                "validator_awareness_min": self.locks.validator_awareness_min,
                "events": [
                    {
                        "vehicle_id": e.vehicle_id,
                        "t": e.t,
                        "app_id": e.app_id,
                        "duration_s": e.duration_s,
                    }
                    for e in self.locks.events
                ],
            },
            "adversary": {
                "coverage": coverage,
                "sigma0_m": self.adversary.sigma0_m,
                "beta_m_per_s": self.adversary.beta_m_per_s,
                "no_match_cost": self.adversary.no_match_cost,
                "max_gap_s": self.adversary.max_gap_s,
                "use_quasi_identifiers": self.adversary.use_quasi_identifiers,
                "anonymity_region_m": self.adversary.anonymity_region_m,
            },
        }

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_seed(self, seed: int) -> "ScenarioConfig":
        obj = self.canonical_dict()
        obj["seed"] = int(seed)
        return load_scenario(obj)


# --- parsing helpers ----------------------------------------------------------


class _Ctx:
    def __init__(self, strict: bool = True):
        self.strict = strict
        self.violations: list[str] = []

    def err(self, path: str, message: str, *, unknown: bool = False) -> None:
        if unknown and not self.strict:
            return
        self.violations.append(f"{path}: {message}")


def _join(path: str, key: str) -> str:
    # top-level fields have an empty parent path
    return f"{path}.{key}" if path else key


def _section(obj: Any, path: str, allowed: set[str], ctx: _Ctx) -> dict:
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        ctx.err(path, "must be an object")
        return {}
    for key in sorted(obj):
        if key not in allowed:
            ctx.err(_join(path, key), "unknown field", unknown=True)
    return obj


def _num(obj: dict, key: str, path: str, ctx: _Ctx, default=None, *,
         required=False, minimum=None, maximum=None, exclusive_min=None,
         allow_none=False):
    if key not in obj or obj[key] is None:
        if key in obj and obj[key] is None and allow_none:
            return None
        if required:
            ctx.err(_join(path, key), "required")
            return default
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        ctx.err(_join(path, key), "must be a number")
        return default
    value = float(value)
    if not math.isfinite(value):
        ctx.err(_join(path, key), "must be finite")
        return default
    if exclusive_min is not None and value <= exclusive_min:
        ctx.err(_join(path, key), f"must be > {exclusive_min}")
        return default
    if minimum is not None and value < minimum:
        ctx.err(_join(path, key), f"must be >= {minimum}")
        return default
    if maximum is not None and value > maximum:
        ctx.err(_join(path, key), f"must be <= {maximum}")
        return default
    return value


def _int(obj: dict, key: str, path: str, ctx: _Ctx, default=None, *,
         required=False, minimum=None):
    if key not in obj:
        if required:
            ctx.err(_join(path, key), "required")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        ctx.err(_join(path, key), "must be an integer")
        return default
    if minimum is not None and value < minimum:
        ctx.err(_join(path, key), f"must be >= {minimum}")
        return default
    return value


def _bool(obj: dict, key: str, path: str, ctx: _Ctx, default: bool) -> bool:
    if key not in obj:
        return default
    value = obj[key]
    if not isinstance(value, bool):
        ctx.err(_join(path, key), "must be a boolean")
        return default
    return value


def _str_choice(obj: dict, key: str, path: str, ctx: _Ctx, default: str,
                choices: tuple[str, ...]) -> str:
    value = obj.get(key, default)
    if not isinstance(value, str) or value not in choices:
        ctx.err(_join(path, key), f"must be one of {list(choices)}")
        return default
    return value


def _parse_policy(obj: Optional[dict], ctx: _Ctx) -> PolicyConfig:
    allowed = {
        "kind", "silence_s", "notify_deactivation",
        "interval_s", "window_s",
        "second_change_min_m", "second_change_max_m",
        "subsequent_min_distance_m", "subsequent_time_min_s", "subsequent_time_max_s",
        "min_interval_s", "coordination_interval_s", "max_silent_fraction",
    }
    obj = _section(obj, "policy", allowed, ctx)
    kind = _str_choice(
        obj, "kind", "policy", ctx, "periodic",
        ("periodic", "segment", "synchronized", "network_triggered"),
    )
    silence_s = _num(obj, "silence_s", "policy", ctx, default=0.0, minimum=0.0)
    notify = _bool(obj, "notify_deactivation", "policy", ctx, default=False)

    def reject_foreign(own: set[str]) -> None:
        foreign = set(obj) - own - {"kind", "silence_s", "notify_deactivation"}
        for key in sorted(foreign):
            ctx.err(f"policy.{key}", f"not a {kind} policy field")

    policy: ChangePolicy
    if kind == "periodic":
        reject_foreign({"interval_s"})
        policy = PeriodicPolicy(
            interval_s=_num(obj, "interval_s", "policy", ctx, default=300.0, exclusive_min=0.0)
        )
    elif kind == "segment":
        reject_foreign({
            "second_change_min_m", "second_change_max_m",
            "subsequent_min_distance_m", "subsequent_time_min_s", "subsequent_time_max_s",
        })
        lo = _num(obj, "second_change_min_m", "policy", ctx, default=800.0, exclusive_min=0.0)
        hi = _num(obj, "second_change_max_m", "policy", ctx, default=1500.0, exclusive_min=0.0)
        tlo = _num(obj, "subsequent_time_min_s", "policy", ctx, default=120.0, exclusive_min=0.0)
        thi = _num(obj, "subsequent_time_max_s", "policy", ctx, default=360.0, exclusive_min=0.0)
        if hi < lo:
            ctx.err("policy.second_change_max_m", "must be >= second_change_min_m")
        if thi < tlo:
            ctx.err("policy.subsequent_time_max_s", "must be >= subsequent_time_min_s")
        policy = SegmentPolicy(
            second_change_min_m=lo,
            second_change_max_m=hi,
            subsequent_min_distance_m=_num(
                obj, "subsequent_min_distance_m", "policy", ctx, default=800.0, exclusive_min=0.0
            ),
            subsequent_time_min_s=tlo,
            subsequent_time_max_s=thi,
        )
    elif kind == "synchronized":
        reject_foreign({"interval_s", "window_s"})
        policy = SynchronizedPolicy(
            interval_s=_num(obj, "interval_s", "policy", ctx, default=300.0, exclusive_min=0.0),
            window_s=_num(obj, "window_s", "policy", ctx, default=10.0, exclusive_min=0.0),
        )
    else:
        reject_foreign({"min_interval_s", "coordination_interval_s", "max_silent_fraction"})
        policy = NetworkTriggeredPolicy(
            min_interval_s=_num(obj, "min_interval_s", "policy", ctx, default=300.0, exclusive_min=0.0),
            coordination_interval_s=_num(
                obj, "coordination_interval_s", "policy", ctx, default=1.0, exclusive_min=0.0
            ),
            max_silent_fraction=_num(
                obj, "max_silent_fraction", "policy", ctx, default=0.5, minimum=0.0, maximum=1.0
            ),
        )
    return PolicyConfig(policy=policy, silence_s=silence_s, notify_deactivation=notify)


def _parse_road(obj: Optional[dict], ctx: _Ctx) -> Optional[RoadNetwork]:
    obj = _section(obj, "road", {"segments"}, ctx)
    rows = obj.get("segments")
    if not isinstance(rows, list) or not rows:
        ctx.err("road.segments", "must be a non-empty array")
        return None
    segments = []
    for i, row in enumerate(rows):
        path = f"road.segments[{i}]"
        row = _section(row, path, {"id", "start", "end", "speed_limit_mps"}, ctx)
        sid = row.get("id")
        if not isinstance(sid, str) or not sid:
            ctx.err(f"{path}.id", "must be a non-empty string")
            continue
        try:
            start = (float(row["start"][0]), float(row["start"][1]))
            end = (float(row["end"][0]), float(row["end"][1]))
        except (KeyError, TypeError, ValueError, IndexError):
            ctx.err(path, "start/end must be [x, y] pairs")
            continue
        limit = _num(row, "speed_limit_mps", path, ctx, default=None, required=True, exclusive_min=0.0)
        if limit is None:
            continue
        segments.append(RoadSegment(sid, start, end, limit))
    if ctx.violations:
        # cheap structural errors first; skip network build on broken input
        return None
    try:
        return RoadNetwork.build(segments)
    except RoadNetworkError as exc:
        ctx.err("road", str(exc))
        return None


def _parse_fleet(
    rows: Any, road: Optional[RoadNetwork], duration_s: Optional[float], ctx: _Ctx
) -> tuple[VehicleSpec, ...]:
    if not isinstance(rows, list) or not rows:
        ctx.err("fleet", "must be a non-empty array")
        return ()
    fleet = []
    seen: set[int] = set()
    allowed = {
        "vehicle_id", "route", "speed_mps", "depart_s",
        "length_m", "width_m", "clock_skew_s",
    }
    for i, row in enumerate(rows):
        path = f"fleet[{i}]"
        row = _section(row, path, allowed, ctx)
        vid = _int(row, "vehicle_id", path, ctx, required=True, minimum=0)
        if vid is None:
            continue
        if vid in seen:
            ctx.err(f"{path}.vehicle_id", f"duplicate vehicle id {vid}")
            continue
        seen.add(vid)
        route = row.get("route")
        if not isinstance(route, list) or not all(isinstance(s, str) for s in route) or not route:
            ctx.err(f"{path}.route", "must be a non-empty array of segment ids")
            continue
        if road is not None:
            try:
                road.validate_route(route)
            except RoadNetworkError as exc:
                ctx.err(f"{path}.route", str(exc))
                continue
        speed = _num(row, "speed_mps", path, ctx, required=True, exclusive_min=0.0)
        depart = _num(row, "depart_s", path, ctx, default=0.0, minimum=0.0)
        if duration_s is not None and depart is not None and depart >= duration_s:
            ctx.err(f"{path}.depart_s", "must be before the end of the run")
        if speed is None or depart is None:
            continue
        fleet.append(
            VehicleSpec(
                vehicle_id=vid,
                route=tuple(route),
                speed_mps=speed,
                depart_s=depart,
                length_m=_num(row, "length_m", path, ctx, default=4.5, exclusive_min=0.0),
                width_m=_num(row, "width_m", path, ctx, default=1.8, exclusive_min=0.0),
                clock_skew_s=_num(row, "clock_skew_s", path, ctx, default=0.0),
            )
        )
    return tuple(fleet)


def _parse_adversary(obj: Optional[dict], ctx: _Ctx) -> AdversaryConfig:
    allowed = {
        "coverage", "sigma0_m", "beta_m_per_s", "no_match_cost",
        "max_gap_s", "use_quasi_identifiers", "anonymity_region_m",
    }
    obj = _section(obj, "adversary", allowed, ctx)
    coverage: Union[str, tuple] = "full"
    raw = obj.get("coverage", "full")
    if raw == "full":
        coverage = "full"
    elif isinstance(raw, list):
        posts = []
        for i, row in enumerate(raw):
            path = f"adversary.coverage[{i}]"
            row = _section(row, path, {"x", "y", "radius_m"}, ctx)
            x = _num(row, "x", path, ctx, required=True)
            y = _num(row, "y", path, ctx, required=True)
            r = _num(row, "radius_m", path, ctx, required=True, exclusive_min=0.0)
            if None not in (x, y, r):
                posts.append((x, y, r))
        coverage = tuple(posts)
    else:
        ctx.err("adversary.coverage", 'must be "full" or an array of posts')
    return AdversaryConfig(
        coverage=coverage,
        sigma0_m=_num(obj, "sigma0_m", "adversary", ctx, default=1.0, exclusive_min=0.0),
        beta_m_per_s=_num(obj, "beta_m_per_s", "adversary", ctx, default=2.0, minimum=0.0),
        no_match_cost=_num(obj, "no_match_cost", "adversary", ctx, default=50.0, exclusive_min=0.0),
        max_gap_s=_num(obj, "max_gap_s", "adversary", ctx, default=30.0, exclusive_min=0.0),
        use_quasi_identifiers=_bool(obj, "use_quasi_identifiers", "adversary", ctx, default=True),
        anonymity_region_m=_num(
            obj, "anonymity_region_m", "adversary", ctx, default=500.0, exclusive_min=0.0
        ),
    )


_TOP_LEVEL = {
    "name", "seed", "duration_s", "tick_s", "road", "fleet",
    "beaconing", "policy", "pool", "sba", "locks", "adversary",
}


def load_scenario(
    source: Union[str, os.PathLike, dict], *, strict: bool = True
) -> ScenarioConfig:
    """Parse and validate a scenario from a path, JSON text, or dict.

    Raises ``ConfigError`` listing every violation when anything is wrong.
    With ``strict=False`` unknown fields are tolerated instead of rejected;
    every other rule still applies.
    """
    if isinstance(source, dict):
        raw: Any = source
    else:
        text = None
        if isinstance(source, os.PathLike) or (
            isinstance(source, str) and not source.lstrip().startswith("{")
        ):
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = source
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"json: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config: must be a JSON object"])

    ctx = _Ctx(strict=strict)
    _section(raw, "", _TOP_LEVEL, ctx)

    name = raw.get("name", "scenario")
    if not isinstance(name, str) or not name:
        ctx.err("name", "must be a non-empty string")
        name = "scenario"
    seed = _int(raw, "seed", "", ctx, required=True, minimum=0)
    duration_s = _num(raw, "duration_s", "", ctx, required=True, exclusive_min=0.0)
    tick_s = _num(raw, "tick_s", "", ctx, default=0.05, exclusive_min=0.0)
    if duration_s is not None and tick_s is not None and tick_s > duration_s:
        ctx.err("tick_s", "must not exceed duration_s")

    road = _parse_road(raw.get("road"), ctx)
    fleet = _parse_fleet(raw.get("fleet"), road, duration_s, ctx)

    b = _section(
        raw.get("beaconing"), "beaconing",
        {"cam_freq_hz", "denm_interval_s", "radio_range_m", "ldm_timeout_s",
         "positioning_sigma_m", "loss_rate"},
        ctx,
    )
    cam_freq = _num(
        b, "cam_freq_hz", "beaconing", ctx, default=10.0,
        exclusive_min=0.0, maximum=MAX_CAM_FREQ_HZ,
    )
    beaconing = BeaconingConfig(
        cam_freq_hz=cam_freq,
        denm_interval_s=_num(
            b, "denm_interval_s", "beaconing", ctx, default=None,
            exclusive_min=0.0, allow_none=True,
        ),
        radio_range_m=_num(b, "radio_range_m", "beaconing", ctx, default=300.0, exclusive_min=0.0),
        ldm_timeout_s=_num(b, "ldm_timeout_s", "beaconing", ctx, default=1.5, exclusive_min=0.0),
        positioning_sigma_m=_num(b, "positioning_sigma_m", "beaconing", ctx, default=1.0, minimum=0.0),
        loss_rate=_num(b, "loss_rate", "beaconing", ctx, default=0.0, minimum=0.0, maximum=0.999),
    )
    if cam_freq is not None and tick_s is not None:
        period = 1.0 / cam_freq
        ratio = period / tick_s
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            ctx.err("beaconing.cam_freq_hz", "beacon period must be a whole number of ticks")

    policy = _parse_policy(raw.get("policy"), ctx)

    p = _section(raw.get("pool"), "pool", {"size", "min_concurrent_valid", "selection"}, ctx)
    min_valid = _int(p, "min_concurrent_valid", "pool", ctx, default=2, minimum=2)
    size = _int(p, "size", "pool", ctx, default=20, minimum=1)
    if size is not None and min_valid is not None and size < min_valid:
        ctx.err("pool.size", "must be >= min_concurrent_valid")
    pool = PoolConfig(
        size=size if size is not None else 20,
        min_concurrent_valid=min_valid if min_valid is not None else 2,
        selection=_str_choice(
            p, "selection", "pool", ctx, SELECTION_NO_REUSE,
            (SELECTION_NO_REUSE, SELECTION_ROUND_ROBIN),
        ),
    )

    s = _section(
        raw.get("sba"), "sba",
        {"token_ttl_s", "sig_scheme", "ec_lifetime_s", "at_lifetime_s",
         "at_stagger_s", "at_batch_cap"},
        ctx,
    )
    sba = SbaSettings(
        token_ttl_s=_num(s, "token_ttl_s", "sba", ctx, default=300.0, exclusive_min=0.0),
        sig_scheme=_str_choice(
            s, "sig_scheme", "sba", ctx, SCHEME_MAC, (SCHEME_MAC, SCHEME_ASYMMETRIC)
        ),
        ec_lifetime_s=_num(s, "ec_lifetime_s", "sba", ctx, default=86400.0, exclusive_min=0.0),
        at_lifetime_s=_num(s, "at_lifetime_s", "sba", ctx, default=600.0, exclusive_min=0.0),
        at_stagger_s=_num(s, "at_stagger_s", "sba", ctx, default=0.0, minimum=0.0),
        at_batch_cap=_int(s, "at_batch_cap", "sba", ctx, default=64, minimum=1),
    )

    l = _section(
        raw.get("locks"), "locks",
        {"renewal_threshold", "validator_awareness_min", "events"}, ctx,
    )
    events = []
    rows = l.get("events", [])
    if not isinstance(rows, list):
        ctx.err("locks.events", "must be an array")
        rows = []
    fleet_ids = {v.vehicle_id for v in fleet}
    for i, row in enumerate(rows):
        path = f"locks.events[{i}]"
        row = _section(row, path, {"vehicle_id", "t", "app_id", "duration_s"}, ctx)
        vid = _int(row, "vehicle_id", path, ctx, required=True, minimum=0)
        t = _num(row, "t", path, ctx, required=True, minimum=0.0)
        dur = _num(
            row, "duration_s", path, ctx, required=True,
            exclusive_min=0.0, maximum=MAX_LOCK_EVENT_S,
        )
        app = row.get("app_id")
        if not isinstance(app, str) or not app:
            ctx.err(f"{path}.app_id", "must be a non-empty string")
            app = None
        if vid is not None and fleet and vid not in fleet_ids:
            ctx.err(f"{path}.vehicle_id", f"no such vehicle {vid}")
            continue
        if None in (vid, t, dur, app):
            continue
        if duration_s is not None and t >= duration_s:
            ctx.err(f"{path}.t", "must be before the end of the run")
            continue
        events.append(LockEvent(vehicle_id=vid, t=t, app_id=app, duration_s=dur))
    locks = LockConfig(
        renewal_threshold=_int(l, "renewal_threshold", "locks", ctx, default=3, minimum=1),
        validator_awareness_min=_num(
            l, "validator_awareness_min", "locks", ctx, default=0.8, minimum=0.0, maximum=1.0
        ),
        events=tuple(events),
    )

    adversary = _parse_adversary(raw.get("adversary"), ctx)

    if ctx.violations:
        raise ConfigError(sorted(ctx.violations))

    return ScenarioConfig(
        name=name,
        seed=seed,
        duration_s=duration_s,
        tick_s=tick_s,
        road=road,
        fleet=fleet,
        beaconing=beaconing,
        policy=policy,
        pool=pool,
        sba=sba,
        locks=locks,
        adversary=adversary,
    )
