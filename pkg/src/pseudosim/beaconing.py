"""Broadcast messages and the receiver-side local dynamic map.

Cooperative awareness messages (CAMs) and event notifications (DENMs) are
signed under per-application pseudonyms derived from authorization tickets.
Receivers fold them into a local dynamic map (LDM) whose entries age out; the
quality metrics here (ghost, missing, awareness) measure what identifier
churn does to that picture.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .sba import AppScope, AuthorizationTicket

Point = tuple[float, float]


def station_id_for(ticket: AuthorizationTicket, scope: AppScope) -> str:
    """Over-the-air identifier bound to (ticket, application).

    Distinct scopes under one ticket yield unlinkable identifiers, which is
    what keeps a vehicle's CAM stream and DENM stream syntactically separate.
    """
    raw = f"{ticket.at_id}|{scope.value}".encode()
    return hashlib.sha256(raw).hexdigest()[:16]


@dataclass(frozen=True)
class Cam:
    station_id: str
    t: float
    position: Point
    velocity: Point
    quasi_ids: tuple[float, float]  # vehicle length, width as broadcast

    scope = AppScope.CAM


@dataclass(frozen=True)
class Denm:
    station_id: str
    t: float
    position: Point
    event_type: str

    scope = AppScope.DENM


@dataclass(frozen=True)
class DeactivationNotice:
    """Tells receivers an identifier is retiring so they can drop its entry.

    Sent at the moment of a pseudonym change, before any silence starts."""

    station_id: str
    t: float
    scope: AppScope


Message = Union[Cam, Denm, DeactivationNotice]


@dataclass
class LdmEntry:
    station_id: str
    scope: AppScope
    last_seen: float
    position: Point
    velocity: Point


class LocalDynamicMap:
    """Per-receiver table of currently known stations."""

    def __init__(self, timeout_s: float = 1.5):
        self.timeout_s = float(timeout_s)
        self._entries: dict[str, LdmEntry] = {}

    def receive(self, msg: Message, now: float) -> None:
        if isinstance(msg, DeactivationNotice):
            self._entries.pop(msg.station_id, None)
            return
        if isinstance(msg, Cam):
            entry = LdmEntry(msg.station_id, AppScope.CAM, now, msg.position, msg.velocity)
        else:
            entry = LdmEntry(msg.station_id, AppScope.DENM, now, msg.position, (0.0, 0.0))
        self._entries[msg.station_id] = entry

    def evict_expired(self, now: float) -> int:
        dead = [
            sid for sid, e in self._entries.items() if now - e.last_seen > self.timeout_s
        ]
        for sid in dead:
            del self._entries[sid]
        return len(dead)

    def live_entries(self, now: float) -> list[LdmEntry]:
        return [
            e for e in self._entries.values() if now - e.last_seen <= self.timeout_s
        ]

    def __len__(self) -> int:
        return len(self._entries)


@dataclass(frozen=True)
class LdmQuality:
    ghost_count: int
    missing_count: int
    awareness_ratio: float


def ldm_quality(
    ldm: LocalDynamicMap,
    neighbor_ids: Sequence[int],
    owner_of: Mapping[str, int],
    active_station_ids: frozenset[str],
    now: float,
) -> LdmQuality:
    """Score one receiver's LDM against ground truth at time ``now``.

    Only cooperative-awareness entries count: DENMs describe events, not
    neighbors. A ghost is a live entry whose identifier is no longer active
    anywhere (its owner moved on). A neighbor is missing when no live entry
    belongs to it, and awareness is the fraction of neighbors represented by
    exactly one live entry. With no neighbors in range awareness is 1.0.
    """
    live = [e for e in ldm.live_entries(now) if e.scope == AppScope.CAM]
    ghost = sum(1 for e in live if e.station_id not in active_station_ids)
    per_neighbor: dict[int, int] = {vid: 0 for vid in neighbor_ids}
    for e in live:
        owner = owner_of.get(e.station_id)
        if owner in per_neighbor:
            per_neighbor[owner] += 1
    missing = sum(1 for c in per_neighbor.values() if c == 0)
    if per_neighbor:
        aware = sum(1 for c in per_neighbor.values() if c == 1)
        ratio = aware / len(per_neighbor)
    else:
        ratio = 1.0
    return LdmQuality(ghost_count=ghost, missing_count=missing, awareness_ratio=ratio)
