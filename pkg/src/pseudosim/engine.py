"""Deterministic tick loop tying mobility, credentials, beaconing and attack.

Each tick runs five phases in a fixed order: mobility, change strategy, core
network housekeeping, beaconing, and message ingest. All randomness comes from
named streams forked off the run seed, and all schedules live on the integer
tick grid, so the same config and seed reproduce a run byte for byte, whatever
the host or degree of parallelism around it.

Failures inside a run (denied tokens, starved pools, rejected locks) never
raise out of the loop; they become counters in the run summary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from . import adversary as adv
from . import beaconing as bcn
from . import mobility as mob
from . import strategy as strat
from .config import ScenarioConfig, VehicleSpec, load_scenario
from .sba import (
    AppScope,
    EnrollmentCertificate,
    SbaConfig,
    SbaError,
    ServiceBasedCore,
    ServiceReject,
    Supi,
)
from .seeds import fork_generator

TRIGGER_INITIAL = "initial"
TRIGGER_TICKET_EXPIRY = "ticket_expiry"


@dataclass
class _Vehicle:
    spec: VehicleSpec
    depart_tick: int
    cursor: mob.RouteCursor
    kin: mob.Kinematics
    trip: mob.TripState
    pool: strat.PseudonymPool
    locks: strat.LockLedger
    cert: EnrollmentCertificate
    supi: Supi
    session_token: object
    trigger: strat.TriggerState = field(default_factory=strat.TriggerState)
    active: dict = field(default_factory=dict)  # AppScope -> AuthorizationTicket
    station_ids: dict = field(default_factory=dict)  # AppScope -> str
    ldm: bcn.LocalDynamicMap = None
    silence_until_tick: int = -1
    last_cam_tick: Optional[int] = None
    last_change_tick: int = 0
    pending_notices: list = field(default_factory=list)
    done: bool = False

    def silent(self, tick: int) -> bool:
        return tick < self.silence_until_tick


@dataclass
class RunResult:
    config: ScenarioConfig
    summary: dict
    metrics: adv.AttackMetrics
    linkage: adv.LinkageResult
    store: adv.ObservationStore
    change_records: list
    trace_rows: Optional[list]

    def summary_json(self) -> str:
        return json.dumps(self.summary, sort_keys=True, indent=2) + "\n"


class SimulationEngine:
    def __init__(self, config: ScenarioConfig, *, collect_trace: bool = False):
        self.cfg = config
        self.collect_trace = collect_trace
        self.tick_s = config.tick_s
        self.n_ticks = int(round(config.duration_s / config.tick_s))
        self.cam_period_ticks = int(round((1.0 / config.beaconing.cam_freq_hz) / config.tick_s))
        self.denm_period_ticks = (
            max(1, int(round(config.beaconing.denm_interval_s / config.tick_s)))
            if config.beaconing.denm_interval_s is not None
            else None
        )
        self.scopes = [AppScope.CAM] + (
            [AppScope.DENM] if self.denm_period_ticks is not None else []
        )

        self.rng_identity = fork_generator(config.seed, "identity")
        self.rng_strategy = fork_generator(config.seed, "strategy")
        self.rng_noise = fork_generator(config.seed, "noise")
        self.rng_loss = fork_generator(config.seed, "loss")

        self.core = ServiceBasedCore(
            config.seed,
            SbaConfig(
                token_ttl_s=config.sba.token_ttl_s,
                sig_scheme=config.sba.sig_scheme,
                ec_lifetime_s=config.sba.ec_lifetime_s,
                at_lifetime_s=config.sba.at_lifetime_s,
                at_stagger_s=config.sba.at_stagger_s,
                at_batch_cap=config.sba.at_batch_cap,
            ),
        )
        posts = (
            None
            if config.adversary.coverage == "full"
            else [adv.CoveragePost(x, y, r) for (x, y, r) in config.adversary.coverage]
        )
        self.eavesdropper = adv.Eavesdropper(posts)
        self.model = adv.MotionModel(
            sigma0_m=config.adversary.sigma0_m,
            beta_m_per_s=config.adversary.beta_m_per_s,
            no_match_cost=config.adversary.no_match_cost,
            max_gap_s=config.adversary.max_gap_s,
        )

        self.vehicles: dict[int, _Vehicle] = {}
        self._departures: dict[int, list[VehicleSpec]] = {}
        for spec in config.fleet:
            tick = int(round(spec.depart_s / config.tick_s))
            self._departures.setdefault(tick, []).append(spec)
        self._lock_events: dict[int, list] = {}
        for ev in config.locks.events:
            self._lock_events.setdefault(int(round(ev.t / config.tick_s)), []).append(ev)

        # ground truth
        self.owner_of: dict[str, int] = {}
        self.active_ids: set[str] = set()
        self.change_records: list[strat.ChangeRecord] = []
        self.initial_activations = 0
        self.silence_of: dict[int, list] = {}
        self.emit_span: dict[str, tuple[float, float]] = {}  # station -> first/last CAM t

        self.counters: dict[str, int] = {}
        self.changes_by_trigger: dict[str, int] = {}
        self.min_valid_tickets: Optional[int] = None
        self.sybil_violations = 0
        self.locks_granted = 0
        self.locks_denied = 0
        self.awareness_sum = 0.0
        self.awareness_samples = 0
        self.ghost_ticks = 0
        self.ghost_entries_total = 0
        self.missing_ticks = 0
        self.missing_total = 0
        self.trace_rows: Optional[list] = [] if collect_trace else None
        self._silence_ticks_total = 0

        ntp = config.policy.policy
        self._coordination_ticks = (
            max(1, int(round(ntp.coordination_interval_s / config.tick_s)))
            if isinstance(ntp, strat.NetworkTriggeredPolicy)
            else None
        )

    def bump(self, key: str, by: int = 1) -> None:
        self.counters[key] = self.counters.get(key, 0) + by

    # --- vehicle lifecycle ------------------------------------------------

    def _admit(self, spec: VehicleSpec, tick: int) -> None:
        now = tick * self.tick_s
        supi = Supi(bytes(self.rng_identity.bytes(16)))
        self.core.add_subscriber(supi)
        nonce = bytes(self.rng_identity.bytes(12))
        cert = self.core.enroll_vehicle(supi, nonce, now)
        token = self.core.request_v2x_token(now)
        outcome = self.core.invoke_v2x_service(token, now)
        if isinstance(outcome, ServiceReject):  # fresh token; should not happen
            self.bump("admission_service_rejects")
        pool = strat.PseudonymPool(
            selection=self.cfg.pool.selection,
            min_concurrent_valid=self.cfg.pool.min_concurrent_valid,
            target_size=self.cfg.pool.size,
            scopes=self.scopes,
        )
        veh = _Vehicle(
            spec=spec,
            depart_tick=tick,
            cursor=mob.RouteCursor(self.cfg.road, spec.route),
            kin=mob.Kinematics(position=(0.0, 0.0), velocity=(0.0, 0.0)),
            trip=mob.TripState(trip_start_time=now),
            pool=pool,
            locks=strat.LockLedger(renewal_threshold=self.cfg.locks.renewal_threshold),
            cert=cert,
            supi=supi,
            session_token=token,
            ldm=bcn.LocalDynamicMap(timeout_s=self.cfg.beaconing.ldm_timeout_s),
            last_change_tick=tick,
        )
        seg = veh.cursor.segment
        speed = min(spec.speed_mps, seg.speed_limit_mps)
        d = seg.direction
        veh.kin = mob.Kinematics(
            position=veh.cursor.position(), velocity=(d[0] * speed, d[1] * speed)
        )
        self.vehicles[spec.vehicle_id] = veh
        for scope in self.scopes:
            self._replenish(veh, scope, now, to_target=True)
        self._execute_change(veh, tick, TRIGGER_INITIAL)

    def _finish_trip(self, veh: _Vehicle, tick: int) -> None:
        now = tick * self.tick_s
        if self.cfg.policy.notify_deactivation:
            for scope in self.scopes:
                sid = veh.station_ids.get(scope)
                if sid is not None:
                    veh.pending_notices.append(bcn.DeactivationNotice(sid, now, scope))
        for scope in self.scopes:
            sid = veh.station_ids.get(scope)
            if sid is not None:
                self.active_ids.discard(sid)
        veh.done = True
        self.bump("trips_completed")

    # --- pseudonym changes --------------------------------------------------

    def _replenish(self, veh: _Vehicle, scope: AppScope, now: float, *, to_target: bool) -> None:
        guard = 0
        while guard < 16:
            guard += 1
            if to_target:
                if veh.pool.replenish_need(scope, now) <= 0:
                    return
            elif not veh.pool.needs_replenish(scope, now):
                return
            try:
                added = strat.replenish_pool(veh.pool, scope, veh.cert, self.core, now)
            except SbaError as exc:
                self.bump(f"replenish_failed_{exc.reason}")
                return
            if added <= 0:
                return
            self.bump("pool_replenishments")

    def _touch_session(self, veh: _Vehicle, now: float) -> None:
        outcome = self.core.invoke_v2x_service(veh.session_token, now)
        if isinstance(outcome, ServiceReject) and outcome.reregister:
            try:
                veh.session_token = self.core.request_v2x_token(now)
            except SbaError:
                self.bump("session_renewal_failed")
                return
            self.bump("session_renewals")
            self.core.invoke_v2x_service(veh.session_token, now)

    def _execute_change(self, veh: _Vehicle, tick: int, trigger: str) -> bool:
        now = tick * self.tick_s
        plan = strat.plan_change(veh.pool, now)
        if plan is None:
            self.bump("change_starved")
            return False
        self._touch_session(veh, now)
        old_ids = {s.value: veh.station_ids[s] for s in self.scopes if s in veh.station_ids}
        if self.cfg.policy.notify_deactivation and old_ids:
            for scope in self.scopes:
                sid = veh.station_ids.get(scope)
                if sid is not None:
                    veh.pending_notices.append(bcn.DeactivationNotice(sid, now, scope))
        new_ids = {}
        for scope in self.scopes:
            old_sid = veh.station_ids.get(scope)
            if old_sid is not None:
                self.active_ids.discard(old_sid)
            ticket = plan[scope]
            veh.pool.activate(scope, ticket)
            sid = bcn.station_id_for(ticket, scope)
            if sid in self.owner_of and self.owner_of[sid] != veh.spec.vehicle_id:
                raise RuntimeError(f"station id collision on {sid}")
            self.owner_of[sid] = veh.spec.vehicle_id
            self.active_ids.add(sid)
            veh.active[scope] = ticket
            veh.station_ids[scope] = sid
            new_ids[scope.value] = sid

        silence_s = self.cfg.policy.silence_s
        if old_ids:
            if silence_s > 0.0:
                veh.silence_until_tick = tick + int(round(silence_s / self.tick_s))
                self._silence_ticks_total += veh.silence_until_tick - tick
            self.silence_of.setdefault(veh.spec.vehicle_id, []).append(
                (now, now + silence_s, veh.kin.position)
            )
            self.change_records.append(
                strat.ChangeRecord(
                    t=now,
                    vehicle_id=veh.spec.vehicle_id,
                    trigger=trigger,
                    old_ids=old_ids,
                    new_ids=new_ids,
                    position=veh.kin.position,
                    silence_s=silence_s,
                    threshold_distance_m=veh.trigger.threshold_distance_m,
                    threshold_time_s=veh.trigger.threshold_time_s,
                )
            )
            self.changes_by_trigger[trigger] = self.changes_by_trigger.get(trigger, 0) + 1
        else:
            self.initial_activations += 1
        veh.trip.note_change()
        veh.trigger = strat.rearm_trigger(
            self.cfg.policy.policy, veh.trip.changes_this_trip, self.rng_strategy
        )
        veh.last_change_tick = tick
        for scope in self.scopes:
            self._replenish(veh, scope, now, to_target=False)
        return True

    # --- per-tick phases -----------------------------------------------------

    def _phase_mobility(self, tick: int) -> None:
        for spec in self._departures.pop(tick, ()):
            self._admit(spec, tick)
        for vid in sorted(self.vehicles):
            veh = self.vehicles[vid]
            if veh.done or tick <= veh.depart_tick:
                continue
            speed = min(veh.spec.speed_mps, veh.cursor.segment.speed_limit_mps)
            veh.kin, moved = mob.step_kinematics(veh.cursor, speed, self.tick_s)
            veh.trip.advance(moved, self.tick_s)
            veh.trip.time_since_change_s = (tick - veh.last_change_tick) * self.tick_s
            if veh.cursor.done:
                self._finish_trip(veh, tick)

    def _awareness_validator(self, veh: _Vehicle, tick: int):
        def validate(app_id: str, now: float) -> bool:
            sample = self._quality_for(veh, now)
            if sample is None or sample[1] == 0:
                return True
            return sample[0].awareness_ratio >= self.cfg.locks.validator_awareness_min

        return validate

    def _phase_strategy(self, tick: int) -> None:
        now = tick * self.tick_s
        if self._coordination_ticks is not None and tick % self._coordination_ticks == 0:
            self._coordinate(tick)
        for vid in sorted(self.vehicles):
            veh = self.vehicles[vid]
            if veh.done:
                continue
            veh.locks.sweep(now)
            for ev in self._lock_events.get(tick, ()):
                if ev.vehicle_id != vid:
                    continue
                valid_until = min(
                    (t.valid_until for t in veh.active.values()), default=now
                )
                decision = veh.locks.request(
                    ev.app_id,
                    ev.duration_s,
                    now,
                    valid_until,
                    validator=self._awareness_validator(veh, tick),
                )
                if decision.granted:
                    self.locks_granted += 1
                    self.bump("locks_granted")
                else:
                    self.locks_denied += 1
                    self.bump(f"lock_denied_{decision.reason}")
            if veh.silent(tick):
                continue
            expired = any(
                not t.is_valid_at(now) for t in veh.active.values()
            )
            locked = veh.locks.locked(now)
            if expired and not locked:
                self._execute_change(veh, tick, TRIGGER_TICKET_EXPIRY)
                continue
            wants = strat.evaluate_change_trigger(
                self.cfg.policy.policy,
                veh.trip,
                veh.trigger,
                now,
                clock_skew_s=veh.spec.clock_skew_s,
                boundary_tol_s=self.tick_s / 2.0,
            )
            if not wants:
                continue
            if locked:
                self.bump("change_deferred_lock")
                continue
            if self._execute_change(veh, tick, self.cfg.policy.policy.kind):
                veh.trigger.pending_command = False

    def _coordinate(self, tick: int) -> None:
        now = tick * self.tick_s
        policy = self.cfg.policy.policy
        candidates = []
        for vid in sorted(self.vehicles):
            veh = self.vehicles[vid]
            if veh.done:
                continue
            candidates.append(
                strat.CoordinationCandidate(
                    vehicle_id=vid,
                    last_change_time=veh.last_change_tick * self.tick_s,
                    ready=not veh.locks.locked(now),
                    due=(tick - veh.last_change_tick) * self.tick_s
                    >= policy.min_interval_s - 1e-9,
                    silent=veh.silent(tick),
                )
            )
        for vid in strat.coordinate_network_change(candidates, policy.max_silent_fraction):
            self.vehicles[vid].trigger.pending_command = True
            self.bump("coordinator_commands")

    def _phase_sba(self, tick: int) -> None:
        now = tick * self.tick_s
        for vid in sorted(self.vehicles):
            veh = self.vehicles[vid]
            if veh.done:
                continue
            for scope in self.scopes:
                self._replenish(veh, scope, now, to_target=False)
            count = veh.pool.min_valid_count(now)
            if self.min_valid_tickets is None or count < self.min_valid_tickets:
                self.min_valid_tickets = count

    def _phase_beaconing(self, tick: int) -> list:
        now = tick * self.tick_s
        emissions: list[tuple[int, object]] = []
        sigma = self.cfg.beaconing.positioning_sigma_m
        emitted_ids: dict[tuple[int, str], set] = {}
        for vid in sorted(self.vehicles):
            veh = self.vehicles[vid]
            for notice in veh.pending_notices:
                emissions.append((vid, notice))
                self.bump("notices_sent")
            veh.pending_notices.clear()
            if veh.done or veh.silent(tick):
                continue
            cam_due = (
                veh.last_cam_tick is None
                or tick - veh.last_cam_tick >= self.cam_period_ticks
            )
            if cam_due:
                ticket = veh.active.get(AppScope.CAM)
                if ticket is not None and ticket.is_valid_at(now):
                    pos = mob.positioning_noise(veh.kin.position, sigma, self.rng_noise)
                    cam = bcn.Cam(
                        station_id=veh.station_ids[AppScope.CAM],
                        t=now,
                        position=pos,
                        velocity=veh.kin.velocity,
                        quasi_ids=(veh.spec.length_m, veh.spec.width_m),
                    )
                    emissions.append((vid, cam))
                    veh.last_cam_tick = tick
                    emitted_ids.setdefault((vid, "CAM"), set()).add(cam.station_id)
                    self.bump("cams_sent")
                    first, _ = self.emit_span.get(cam.station_id, (now, now))
                    self.emit_span[cam.station_id] = (first, now)
            if (
                self.denm_period_ticks is not None
                and (tick - veh.depart_tick) % self.denm_period_ticks == 0
            ):
                ticket = veh.active.get(AppScope.DENM)
                if ticket is not None and ticket.is_valid_at(now):
                    pos = mob.positioning_noise(veh.kin.position, sigma, self.rng_noise)
                    denm = bcn.Denm(
                        station_id=veh.station_ids[AppScope.DENM],
                        t=now,
                        position=pos,
                        event_type="hazard",
                    )
                    emissions.append((vid, denm))
                    emitted_ids.setdefault((vid, "DENM"), set()).add(denm.station_id)
                    self.bump("denms_sent")
        # one active identifier per vehicle per application at any instant
        for ids in emitted_ids.values():
            if len(ids) > 1:
                self.sybil_violations += 1
        return emissions

    def _phase_ingest(self, tick: int, emissions: list) -> None:
        now = tick * self.tick_s
        loss = self.cfg.beaconing.loss_rate
        rng = self.rng_loss
        radio = self.cfg.beaconing.radio_range_m
        receivers = sorted(
            vid for vid, v in self.vehicles.items() if not v.done
        )
        positions = {vid: self.vehicles[vid].kin.position for vid in receivers}
        # deletions land before refreshes; within a kind, sender id then emission order
        kind_rank = {bcn.DeactivationNotice: 0, bcn.Cam: 1, bcn.Denm: 2}
        ordered = sorted(
            enumerate(emissions),
            key=lambda kv: (kind_rank[type(kv[1][1])], kv[1][0], kv[0]),
        )
        for _, (sender_id, msg) in ordered:
            sender_pos = self.vehicles[sender_id].kin.position
            if isinstance(msg, bcn.DeactivationNotice):
                self.eavesdropper.hear_notice(
                    adv.NoticeSighting(msg.t, msg.station_id, msg.scope.value),
                    sender_pos,
                )
            else:
                self.eavesdropper.hear(
                    adv.Observation(
                        t=msg.t,
                        station_id=msg.station_id,
                        scope=msg.scope.value,
                        position=msg.position,
                        velocity=msg.velocity if isinstance(msg, bcn.Cam) else (0.0, 0.0),
                        quasi_ids=msg.quasi_ids if isinstance(msg, bcn.Cam) else None,
                    ),
                    sender_pos,
                )
            if self.trace_rows is not None:
                self.trace_rows.append(_trace_row(sender_id, msg))
            for rid in receivers:
                if rid == sender_id:
                    continue
                if math.dist(positions[rid], sender_pos) > radio:
                    continue
                if loss > 0.0 and rng.random() < loss:
                    self.bump("messages_lost")
                    continue
                self.vehicles[rid].ldm.receive(msg, now)
        # receiver-side upkeep and truth-referenced quality sampling
        any_ghost = False
        any_missing = False
        for vid in receivers:
            veh = self.vehicles[vid]
            veh.ldm.evict_expired(now)
            sample = self._quality_for(veh, now)
            if sample is None:
                continue
            quality, n_neighbors = sample
            if n_neighbors > 0:
                self.awareness_sum += quality.awareness_ratio
                self.awareness_samples += 1
            if quality.ghost_count > 0:
                any_ghost = True
                self.ghost_entries_total += quality.ghost_count
            if quality.missing_count > 0:
                any_missing = True
                self.missing_total += quality.missing_count
        if any_ghost:
            self.ghost_ticks += 1
        if any_missing:
            self.missing_ticks += 1

    def _quality_for(self, veh: _Vehicle, now: float):
        positions = {
            vid: v.kin.position
            for vid, v in self.vehicles.items()
            if not v.done and vid != veh.spec.vehicle_id
        }
        neighbors = mob.region_query(
            positions, veh.kin.position, self.cfg.beaconing.radio_range_m
        )
        if not neighbors and not veh.ldm.live_entries(now):
            return None
        quality = bcn.ldm_quality(
            veh.ldm,
            neighbors,
            self.owner_of,
            frozenset(self.active_ids),
            now,
        )
        return quality, len(neighbors)

    # --- run -------------------------------------------------------------------

    def run(self) -> RunResult:
        for tick in range(self.n_ticks):
            self._phase_mobility(tick)
            self._phase_strategy(tick)
            self._phase_sba(tick)
            emissions = self._phase_beaconing(tick)
            self._phase_ingest(tick, emissions)

        store = self.eavesdropper.store
        store.finalize()
        linkage = adv.link(
            store,
            self.model,
            use_quasi_identifiers=self.cfg.adversary.use_quasi_identifiers,
        )
        truth_pairs = []
        for rec in self.change_records:
            for scope_value, old in sorted(rec.old_ids.items()):
                new = rec.new_ids.get(scope_value)
                if new is not None:
                    truth_pairs.append((old, new))
        truth = adv.TruthData(
            owner_of=self.owner_of,
            truth_pairs=truth_pairs,
            changes=self.change_records,
            silence_of=self.silence_of,
        )
        metrics = adv.evaluate_attack(
            linkage, truth, anonymity_region_m=self.cfg.adversary.anonymity_region_m
        )
        summary = self._summary(metrics)
        return RunResult(
            config=self.cfg,
            summary=summary,
            metrics=metrics,
            linkage=linkage,
            store=store,
            change_records=self.change_records,
            trace_rows=self.trace_rows,
        )

    def _max_switch_gap(self) -> Optional[float]:
        worst: Optional[float] = None
        for rec in self.change_records:
            old = rec.old_ids.get(AppScope.CAM.value)
            new = rec.new_ids.get(AppScope.CAM.value)
            if old is None or new is None:
                continue
            if old not in self.emit_span or new not in self.emit_span:
                continue
            gap = self.emit_span[new][0] - self.emit_span[old][1]
            if worst is None or gap > worst:
                worst = gap
        return worst

    def _summary(self, metrics: adv.AttackMetrics) -> dict:
        mean_awareness = (
            self.awareness_sum / self.awareness_samples
            if self.awareness_samples
            else None
        )
        return {
            "scenario": self.cfg.name,
            "seed": self.cfg.seed,
            "config_digest": self.cfg.digest(),
            "n_ticks": self.n_ticks,
            "tick_s": self.tick_s,
            "n_vehicles": len(self.cfg.fleet),
            "n_changes": len(self.change_records),
            "n_initial_activations": self.initial_activations,
            "changes_by_trigger": dict(sorted(self.changes_by_trigger.items())),
            "privacy": metrics.to_obj(),
            "safety": {
                "mean_awareness_ratio": mean_awareness,
                "awareness_samples": self.awareness_samples,
                "ghost_ticks": self.ghost_ticks,
                "ghost_entries_total": self.ghost_entries_total,
                "missing_ticks": self.missing_ticks,
                "missing_total": self.missing_total,
                "silence_blind_s": self._silence_ticks_total * self.tick_s,
                "max_stack_switch_gap_s": self._max_switch_gap(),
                "min_valid_tickets": self.min_valid_tickets,
                "sybil_violations": self.sybil_violations,
                "locks_granted": self.locks_granted,
                "locks_denied": self.locks_denied,
            },
            "counters": dict(sorted({**self.counters, **self.core.counters}.items())),
        }


def _trace_row(sender_id: int, msg) -> dict:
    if isinstance(msg, bcn.DeactivationNotice):
        return {
            "kind": "notice",
            "t": msg.t,
            "station_id": msg.station_id,
            "scope": msg.scope.value,
            "sender_vehicle_id": sender_id,
        }
    row = {
        "kind": msg.scope.value,
        "t": msg.t,
        "station_id": msg.station_id,
        "x": msg.position[0],
        "y": msg.position[1],
        "vx": msg.velocity[0] if isinstance(msg, bcn.Cam) else 0.0,
        "vy": msg.velocity[1] if isinstance(msg, bcn.Cam) else 0.0,
        "sender_vehicle_id": sender_id,
    }
    row["quasi_ids"] = list(msg.quasi_ids) if isinstance(msg, bcn.Cam) else None
    return row


def run_scenario(
    source: Union[ScenarioConfig, dict, str],
    *,
    seed_override: Optional[int] = None,
    collect_trace: bool = False,
) -> RunResult:
    """Load (if needed), optionally re-seed, and run one scenario."""
    config = source if isinstance(source, ScenarioConfig) else load_scenario(source)
    if seed_override is not None:
        config = config.with_seed(seed_override)
    return SimulationEngine(config, collect_trace=collect_trace).run()


def run_job(config_dict: dict) -> tuple[str, dict]:
    """Worker entry point for process pools: returns (summary json, summary)."""
    result = run_scenario(config_dict)
    return result.summary_json(), result.summary
