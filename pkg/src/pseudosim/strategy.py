"""Pseudonym change policies, identifier locks and ticket pools.

A vehicle holds a pool of authorization tickets per application scope and
activates one at a time; policies decide when to swap, locks let safety
applications briefly pin the current identifier, and a network coordinator can
synchronize swaps across a region. All decision logic is pure and unit-level;
the engine wires it to vehicles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .sba import AppScope, AuthorizationTicket

_EPS = 1e-9

MAX_SINGLE_LOCK_S = 255.0
MAX_CUMULATIVE_LOCK_S = 900.0

SECOND_CHANGE_MIN_M = 800.0
SECOND_CHANGE_MAX_M = 1500.0
SUBSEQUENT_MIN_DISTANCE_M = 800.0
SUBSEQUENT_TIME_MIN_S = 120.0
SUBSEQUENT_TIME_MAX_S = 360.0


# --- policies ----------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicPolicy:
    """Fixed-interval change; default mirrors the common 5-minute profile."""

    interval_s: float = 300.0

    kind = "periodic"


@dataclass(frozen=True)
class SegmentPolicy:
    """Trip-segment profile: change at trip start, again within a sampled
    800-1500 m of the start, then whenever at least 800 m and a sampled
    2-6 minutes have both passed since the previous change."""

    second_change_min_m: float = SECOND_CHANGE_MIN_M
    second_change_max_m: float = SECOND_CHANGE_MAX_M
    subsequent_min_distance_m: float = SUBSEQUENT_MIN_DISTANCE_M
    subsequent_time_min_s: float = SUBSEQUENT_TIME_MIN_S
    subsequent_time_max_s: float = SUBSEQUENT_TIME_MAX_S

    kind = "segment"


@dataclass(frozen=True)
class SynchronizedPolicy:
    """Change at shared window boundaries, every ``interval_s`` per vehicle.

    Each vehicle evaluates boundaries on its own (possibly skewed) clock, so
    a nonzero skew spreads one logical boundary over real time."""

    interval_s: float = 300.0
    window_s: float = 10.0

    kind = "synchronized"


@dataclass(frozen=True)
class NetworkTriggeredPolicy:
    """Changes happen only on coordinator command."""

    min_interval_s: float = 300.0
    coordination_interval_s: float = 1.0
    max_silent_fraction: float = 0.5

    kind = "network_triggered"


ChangePolicy = Union[PeriodicPolicy, SegmentPolicy, SynchronizedPolicy, NetworkTriggeredPolicy]


@dataclass
class TriggerState:
    """Per-vehicle sampled thresholds and pending coordinator commands."""

    threshold_distance_m: Optional[float] = None
    threshold_time_s: Optional[float] = None
    pending_command: bool = False


def sample_segment_thresholds(
    rng: np.random.Generator, changes_done: int, policy: SegmentPolicy
) -> TriggerState:
    """Draw the thresholds that arm the next segment-policy change.

    After the trip-start change the next trigger is a distance from trip
    start, uniform on [second_change_min_m, second_change_max_m]. After the
    second change every subsequent trigger needs the fixed minimum distance
    plus an elapsed time uniform on [subsequent_time_min_s,
    subsequent_time_max_s], both measured since the last change.
    """
    if changes_done <= 0:
        return TriggerState()
    if changes_done == 1:
        return TriggerState(
            threshold_distance_m=float(
                rng.uniform(policy.second_change_min_m, policy.second_change_max_m)
            )
        )
    return TriggerState(
        threshold_distance_m=policy.subsequent_min_distance_m,
        threshold_time_s=float(
            rng.uniform(policy.subsequent_time_min_s, policy.subsequent_time_max_s)
        ),
    )


def rearm_trigger(
    policy: ChangePolicy, changes_done: int, rng: np.random.Generator
) -> TriggerState:
    """State for the next change decision, sampled right after a change."""
    if isinstance(policy, SegmentPolicy):
        return sample_segment_thresholds(rng, changes_done, policy)
    return TriggerState()


def _at_window_boundary(local_time: float, window_s: float, tol_s: float) -> bool:
    frac = math.fmod(local_time, window_s)
    if frac < 0.0:
        frac += window_s
    return frac <= tol_s or window_s - frac <= tol_s


def evaluate_change_trigger(
    policy: ChangePolicy,
    trip,
    trigger: TriggerState,
    now: float,
    *,
    clock_skew_s: float = 0.0,
    boundary_tol_s: float = 1e-6,
) -> bool:
    """Does this vehicle want to change its pseudonyms right now?

    ``trip`` supplies the odometers (see ``mobility.TripState``). The call is
    pure: executing the change and re-arming the trigger are separate steps.
    """
    if isinstance(policy, PeriodicPolicy):
        if trip.changes_this_trip == 0:
            return True
        return trip.time_since_change_s >= policy.interval_s - _EPS
    if isinstance(policy, SegmentPolicy):
        if trip.changes_this_trip == 0:
            return True
        if trip.changes_this_trip == 1:
            assert trigger.threshold_distance_m is not None
            return trip.odometer_trip_m >= trigger.threshold_distance_m - _EPS
        assert trigger.threshold_distance_m is not None
        assert trigger.threshold_time_s is not None
        return (
            trip.odometer_since_change_m >= trigger.threshold_distance_m - _EPS
            and trip.time_since_change_s >= trigger.threshold_time_s - _EPS
        )
    if isinstance(policy, SynchronizedPolicy):
        if trip.changes_this_trip == 0:
            return True
        if trip.time_since_change_s < policy.interval_s - _EPS:
            return False
        return _at_window_boundary(now + clock_skew_s, policy.window_s, boundary_tol_s)
    if isinstance(policy, NetworkTriggeredPolicy):
        if trip.changes_this_trip == 0:
            return True
        return trigger.pending_command
    raise TypeError(f"unknown policy {policy!r}")


# --- identifier locks ---------------------------------------------------------


@dataclass(frozen=True)
class LockGrant:
    app_id: str
    granted_at: float
    expires_at: float


@dataclass(frozen=True)
class LockDecision:
    granted: bool
    lock: Optional[LockGrant] = None
    reason: Optional[str] = None


class LockLedger:
    """Tracks identifier locks for one vehicle and enforces the caps.

    A single lock may not exceed 255 s, and a continuous run of locked time
    (locks chained without a strict gap) may not exceed 900 s. After
    ``renewal_threshold`` consecutive grants to the same application inside
    one run, further grants need the network validator's approval. Both the
    run clock and the renewal counts reset once a strict gap in coverage
    appears.
    """

    def __init__(self, renewal_threshold: int = 3):
        self.renewal_threshold = int(renewal_threshold)
        self.active: list[LockGrant] = []
        self.renewal_counts: dict[str, int] = {}
        self.chain_start: Optional[float] = None
        self.chain_end: Optional[float] = None

    def sweep(self, now: float) -> None:
        """Housekeeping at a time step: drop expired locks, reset broken chains."""
        self.active = [l for l in self.active if l.expires_at > now]
        if self.chain_end is not None and now > self.chain_end + _EPS:
            self.chain_start = None
            self.chain_end = None
            self.renewal_counts = {}

    def locked(self, now: float) -> bool:
        return any(l.granted_at <= now < l.expires_at for l in self.active)

    def request(
        self,
        app_id: str,
        duration_s: float,
        now: float,
        pseudonym_valid_until: float,
        validator: Optional[Callable[[str, float], bool]] = None,
    ) -> LockDecision:
        """Grant or deny one lock request.

        Denial reasons: ``invalid_duration``, ``over_max_single``,
        ``over_cumulative``, ``past_pseudonym_validity``, ``network_rejected``.
        """
        self.sweep(now)
        if duration_s <= 0.0:
            return LockDecision(False, reason="invalid_duration")
        if duration_s > MAX_SINGLE_LOCK_S:
            return LockDecision(False, reason="over_max_single")
        start = self.chain_start if self.chain_start is not None else now
        expires = now + duration_s
        if expires - start > MAX_CUMULATIVE_LOCK_S + _EPS:
            return LockDecision(False, reason="over_cumulative")
        if expires > pseudonym_valid_until + _EPS:
            return LockDecision(False, reason="past_pseudonym_validity")
        count = self.renewal_counts.get(app_id, 0)
        if count >= self.renewal_threshold:
            if validator is None or not validator(app_id, now):
                return LockDecision(False, reason="network_rejected")
        grant = LockGrant(app_id=app_id, granted_at=now, expires_at=expires)
        self.active.append(grant)
        self.chain_start = start
        self.chain_end = expires if self.chain_end is None else max(self.chain_end, expires)
        self.renewal_counts[app_id] = count + 1
        return LockDecision(True, lock=grant)


# --- ticket pools -------------------------------------------------------------

SELECTION_ROUND_ROBIN = "round_robin"
SELECTION_NO_REUSE = "no_reuse"


class PoolError(ValueError):
    pass


@dataclass
class _ScopePool:
    tickets: list[AuthorizationTicket] = field(default_factory=list)
    ids: set = field(default_factory=set)
    retired: set = field(default_factory=set)
    active_at_id: Optional[str] = None
    cursor: int = -1


class PseudonymPool:
    """Per-scope ticket inventory with a pluggable selection discipline.

    ``round_robin`` cycles through still-valid tickets and may re-activate a
    previously used one; ``no_reuse`` never re-activates a retired ticket.
    Either way the pool must keep at least ``min_concurrent_valid`` valid
    tickets on hand, and replenishment tops it back up to ``target_size``.
    """

    def __init__(
        self,
        selection: str,
        min_concurrent_valid: int,
        target_size: int,
        scopes: Sequence[AppScope],
    ):
        if selection not in (SELECTION_ROUND_ROBIN, SELECTION_NO_REUSE):
            raise PoolError(f"unknown selection discipline {selection!r}")
        if min_concurrent_valid < 2:
            raise PoolError("min_concurrent_valid must be at least 2")
        if target_size < min_concurrent_valid:
            raise PoolError("target_size must be >= min_concurrent_valid")
        self.selection = selection
        self.min_concurrent_valid = int(min_concurrent_valid)
        self.target_size = int(target_size)
        self._scopes: dict[AppScope, _ScopePool] = {s: _ScopePool() for s in scopes}

    @property
    def scopes(self) -> list[AppScope]:
        return list(self._scopes)

    def add_batch(self, scope: AppScope, batch: Sequence[AuthorizationTicket]) -> None:
        pool = self._scopes[scope]
        for t in batch:
            if t.at_id in pool.ids:
                raise PoolError(f"duplicate ticket {t.at_id}")
            pool.ids.add(t.at_id)
            pool.tickets.append(t)

    def _usable(self, pool: _ScopePool, t: AuthorizationTicket, now: float) -> bool:
        if not t.is_valid_at(now):
            return False
        if self.selection == SELECTION_NO_REUSE and t.at_id in pool.retired:
            return False
        return True

    def valid_tickets(self, scope: AppScope, now: float) -> list[AuthorizationTicket]:
        pool = self._scopes[scope]
        return [t for t in pool.tickets if self._usable(pool, t, now)]

    def valid_count(self, scope: AppScope, now: float) -> int:
        return len(self.valid_tickets(scope, now))

    def min_valid_count(self, now: float) -> int:
        return min(self.valid_count(s, now) for s in self._scopes)

    def active_ticket(self, scope: AppScope, now: float) -> Optional[AuthorizationTicket]:
        pool = self._scopes[scope]
        if pool.active_at_id is None:
            return None
        for t in pool.tickets:
            if t.at_id == pool.active_at_id and t.is_valid_at(now):
                return t
        return None

    def select_next(self, scope: AppScope, now: float) -> Optional[AuthorizationTicket]:
        """Pick the replacement ticket without activating it yet.

        Never returns the currently active ticket (a change must change the
        identifier). Returns None when the discipline has nothing to offer.
        """
        pool = self._scopes[scope]
        if self.selection == SELECTION_NO_REUSE:
            for t in pool.tickets:
                if self._usable(pool, t, now) and t.at_id != pool.active_at_id:
                    return t
            return None
        n = len(pool.tickets)
        for step in range(1, n + 1):
            idx = (pool.cursor + step) % n
            t = pool.tickets[idx]
            if self._usable(pool, t, now) and t.at_id != pool.active_at_id:
                return t
        return None

    def activate(self, scope: AppScope, ticket: AuthorizationTicket) -> None:
        pool = self._scopes[scope]
        if ticket.at_id not in pool.ids:
            raise PoolError(f"ticket {ticket.at_id} not in pool")
        if pool.active_at_id is not None:
            pool.retired.add(pool.active_at_id)
        pool.active_at_id = ticket.at_id
        pool.cursor = next(
            i for i, t in enumerate(pool.tickets) if t.at_id == ticket.at_id
        )

    def retire_active(self, scope: AppScope) -> Optional[str]:
        pool = self._scopes[scope]
        old = pool.active_at_id
        if old is not None:
            pool.retired.add(old)
            pool.active_at_id = None
        return old

    def needs_replenish(self, scope: AppScope, now: float) -> bool:
        return self.valid_count(scope, now) < self.min_concurrent_valid

    def replenish_need(self, scope: AppScope, now: float) -> int:
        return max(0, self.target_size - self.valid_count(scope, now))


def replenish_pool(pool: PseudonymPool, scope: AppScope, cert, core, now: float) -> int:
    """Top a scope back up to the pool's target size via the core.

    Returns the number of tickets added. Provisioning failures propagate and
    leave the pool unchanged.
    """
    need = pool.replenish_need(scope, now)
    if need <= 0:
        return 0
    need = min(need, core.config.at_batch_cap)
    batch = core.provision_ticket_batch(cert, need, (scope.value,), now)
    pool.add_batch(scope, batch)
    return len(batch)


# --- change planning and records ---------------------------------------------


def plan_change(
    pool: PseudonymPool, now: float
) -> Optional[dict[AppScope, AuthorizationTicket]]:
    """Choose replacement tickets for every scope, atomically.

    Returns None (and selects nothing) when any scope is starved: a change
    must swap the whole identifier stack or not happen at all.
    """
    plan: dict[AppScope, AuthorizationTicket] = {}
    for scope in pool.scopes:
        pick = pool.select_next(scope, now)
        if pick is None:
            return None
        plan[scope] = pick
    return plan


@dataclass(frozen=True)
class ChangeRecord:
    """Ground-truth record of one executed pseudonym change."""

    t: float
    vehicle_id: int
    trigger: str
    old_ids: dict
    new_ids: dict
    position: tuple[float, float]
    silence_s: float
    threshold_distance_m: Optional[float] = None
    threshold_time_s: Optional[float] = None


# --- network coordination ------------------------------------------------------


@dataclass(frozen=True)
class CoordinationCandidate:
    vehicle_id: int
    last_change_time: float
    ready: bool  # no active locks
    due: bool  # min interval since last change has elapsed
    silent: bool  # currently in a silence period


def coordinate_network_change(
    candidates: Sequence[CoordinationCandidate], max_silent_fraction: float
) -> list[int]:
    """Pick which vehicles a coordinator commands to change this round.

    At most ``floor(max_silent_fraction * population) - currently_silent``
    commands go out, to the ready-and-due vehicles that changed longest ago;
    ties fall back to the lower vehicle id.
    """
    population = len(candidates)
    if population == 0:
        return []
    silent = sum(1 for c in candidates if c.silent)
    budget = int(math.floor(max_silent_fraction * population)) - silent
    if budget <= 0:
        return []
    eligible = sorted(
        (c for c in candidates if c.ready and c.due and not c.silent),
        key=lambda c: (c.last_change_time, c.vehicle_id),
    )
    return [c.vehicle_id for c in eligible[:budget]]
