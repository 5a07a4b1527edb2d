"""Road network, vehicle kinematics and trip bookkeeping.

Geometry is 2D planar, metres. Roads are polylines of straight segments;
vehicles follow a route (an ordered list of segment ids) at the speed the
engine hands them each step. There is no lane model and no car-following;
trajectories only need to be plausible enough to carry identifiers around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

Point = tuple[float, float]

_JOIN_TOL = 1e-9


@dataclass(frozen=True)
class RoadSegment:
    segment_id: str
    start: Point
    end: Point
    speed_limit_mps: float

    @property
    def length_m(self) -> float:
        return math.dist(self.start, self.end)

    @property
    def direction(self) -> Point:
        # unit vector; zero-length segments are rejected at network build
        dx = self.end[0] - self.start[0]
        dy = self.end[1] - self.start[1]
        n = math.hypot(dx, dy)
        return (dx / n, dy / n)


class RoadNetworkError(ValueError):
    pass


@dataclass
class RoadNetwork:
    """Validated set of segments addressable by id."""

    segments: dict[str, RoadSegment]

    @staticmethod
    def build(segments: Iterable[RoadSegment]) -> "RoadNetwork":
        by_id: dict[str, RoadSegment] = {}
        for seg in segments:
            if seg.segment_id in by_id:
                raise RoadNetworkError(f"duplicate segment id {seg.segment_id!r}")
            if seg.length_m <= 0.0:
                raise RoadNetworkError(f"segment {seg.segment_id!r} has zero length")
            if seg.speed_limit_mps <= 0.0:
                raise RoadNetworkError(f"segment {seg.segment_id!r} speed limit must be positive")
            by_id[seg.segment_id] = seg
        if not by_id:
            raise RoadNetworkError("network has no segments")
        return RoadNetwork(segments=by_id)

    def validate_route(self, route: Sequence[str]) -> None:
        """A route must exist and be contiguous end-to-start."""
        if not route:
            raise RoadNetworkError("route is empty")
        for sid in route:
            if sid not in self.segments:
                raise RoadNetworkError(f"route references unknown segment {sid!r}")
        for prev, nxt in zip(route, route[1:]):
            a = self.segments[prev].end
            b = self.segments[nxt].start
            if math.dist(a, b) > _JOIN_TOL:
                raise RoadNetworkError(
                    f"route break between {prev!r} and {nxt!r}: {a} vs {b}"
                )

    def intersections(self) -> list[Point]:
        """Endpoints shared by more than one segment, sorted for determinism."""
        counts: dict[Point, int] = {}
        for seg in self.segments.values():
            for p in (seg.start, seg.end):
                counts[p] = counts.get(p, 0) + 1
        return sorted(p for p, c in counts.items() if c >= 2)


@dataclass
class Kinematics:
    position: Point
    velocity: Point

    @property
    def speed(self) -> float:
        return math.hypot(self.velocity[0], self.velocity[1])


@dataclass
class RouteCursor:
    """Position along a route, advanced in distance increments."""

    network: RoadNetwork
    route: tuple[str, ...]
    seg_index: int = 0
    offset_m: float = 0.0
    done: bool = False

    def __post_init__(self):
        self.network.validate_route(self.route)

    @property
    def segment(self) -> RoadSegment:
        return self.network.segments[self.route[self.seg_index]]

    def position(self) -> Point:
        seg = self.segment
        d = seg.direction
        return (seg.start[0] + d[0] * self.offset_m, seg.start[1] + d[1] * self.offset_m)

    def heading(self) -> Point:
        return self.segment.direction

    def advance(self, distance_m: float) -> float:
        """Move forward, spilling over segment ends; returns distance moved.

        The cursor clamps at the end of the final segment and flips ``done``;
        the returned value is then shorter than requested.
        """
        if distance_m < 0.0:
            raise ValueError("cannot advance backwards")
        moved = 0.0
        remaining = distance_m
        while remaining > 0.0 and not self.done:
            seg_len = self.segment.length_m
            room = seg_len - self.offset_m
            if remaining < room:
                self.offset_m += remaining
                moved += remaining
                remaining = 0.0
            else:
                moved += room
                remaining -= room
                if self.seg_index + 1 < len(self.route):
                    self.seg_index += 1
                    self.offset_m = 0.0
                else:
                    self.offset_m = seg_len
                    self.done = True
        return moved


def step_kinematics(cursor: RouteCursor, speed_mps: float, dt_s: float) -> tuple[Kinematics, float]:
    """Advance one tick at the given speed; returns new state and metres moved."""
    moved = cursor.advance(speed_mps * dt_s)
    d = cursor.heading()
    vel = (0.0, 0.0) if cursor.done else (d[0] * speed_mps, d[1] * speed_mps)
    return Kinematics(position=cursor.position(), velocity=vel), moved


@dataclass
class TripState:
    """Odometers the change policies consult. Distances in metres, times in seconds."""

    trip_start_time: float
    odometer_trip_m: float = 0.0
    odometer_since_change_m: float = 0.0
    time_since_change_s: float = 0.0
    changes_this_trip: int = 0

    def advance(self, distance_m: float, dt_s: float) -> None:
        self.odometer_trip_m += distance_m
        self.odometer_since_change_m += distance_m
        self.time_since_change_s += dt_s

    def note_change(self) -> None:
        self.odometer_since_change_m = 0.0
        self.time_since_change_s = 0.0
        self.changes_this_trip += 1


def region_query(
    positions: Mapping[int, Point], center: Point, radius_m: float
) -> list[int]:
    """Ids of vehicles within the closed ball, ascending, self included if present."""
    out = [
        vid
        for vid, pos in positions.items()
        if math.dist(pos, center) <= radius_m
    ]
    return sorted(out)


def positioning_noise(
    position: Point, sigma_m: float, rng: np.random.Generator
) -> Point:
    """Gaussian measurement error. sigma 0 is exact and consumes no randomness."""
    if sigma_m == 0.0:
        return position
    dx, dy = rng.normal(0.0, sigma_m, size=2)
    return (position[0] + dx, position[1] + dy)
