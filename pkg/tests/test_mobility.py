import numpy as np
import pytest

from pseudosim.mobility import (
    RoadNetwork,
    RoadNetworkError,
    RoadSegment,
    RouteCursor,
    TripState,
    positioning_noise,
    region_query,
    step_kinematics,
)


def two_segment_network():
    return RoadNetwork.build([
        RoadSegment("a", (0.0, 0.0), (100.0, 0.0), 30.0),
        RoadSegment("b", (100.0, 0.0), (100.0, 50.0), 20.0),
    ])


def test_segment_geometry():
    seg = RoadSegment("s", (0.0, 0.0), (3.0, 4.0), 10.0)
    assert seg.length_m == 5.0
    assert seg.direction == (0.6, 0.8)


def test_build_rejects_bad_networks():
    with pytest.raises(RoadNetworkError, match="no segments"):
        RoadNetwork.build([])
    with pytest.raises(RoadNetworkError, match="duplicate"):
        RoadNetwork.build([
            RoadSegment("a", (0, 0), (1, 0), 10.0),
            RoadSegment("a", (1, 0), (2, 0), 10.0),
        ])
    with pytest.raises(RoadNetworkError, match="zero length"):
        RoadNetwork.build([RoadSegment("a", (1, 1), (1, 1), 10.0)])
    with pytest.raises(RoadNetworkError, match="speed limit"):
        RoadNetwork.build([RoadSegment("a", (0, 0), (1, 0), 0.0)])


def test_validate_route():
    net = two_segment_network()
    net.validate_route(["a", "b"])
    with pytest.raises(RoadNetworkError, match="unknown segment"):
        net.validate_route(["a", "zz"])
    with pytest.raises(RoadNetworkError, match="route break"):
        net.validate_route(["b", "a"])
    with pytest.raises(RoadNetworkError, match="empty"):
        net.validate_route([])


def test_intersections_sorted():
    net = RoadNetwork.build([
        RoadSegment("a", (0.0, 0.0), (1.0, 0.0), 10.0),
        RoadSegment("b", (1.0, 0.0), (2.0, 0.0), 10.0),
        RoadSegment("c", (2.0, 0.0), (0.0, 0.0), 10.0),
    ])
    assert net.intersections() == [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]


def test_cursor_spillover_and_done():
    net = two_segment_network()
    cur = RouteCursor(net, ("a", "b"))
    assert cur.position() == (0.0, 0.0)

    moved = cur.advance(130.0)  # 100 on "a", 30 into "b"
    assert moved == 130.0
    assert cur.seg_index == 1
    assert cur.offset_m == 30.0
    assert cur.position() == (100.0, 30.0)
    assert not cur.done

    moved = cur.advance(100.0)  # only 20 m of road left
    assert moved == 20.0
    assert cur.done
    assert cur.position() == (100.0, 50.0)

    assert cur.advance(10.0) == 0.0  # parked


def test_cursor_rejects_negative_advance():
    cur = RouteCursor(two_segment_network(), ("a",))
    with pytest.raises(ValueError):
        cur.advance(-1.0)


def test_cursor_validates_route_on_build():
    with pytest.raises(RoadNetworkError):
        RouteCursor(two_segment_network(), ("b", "a"))


def test_step_kinematics():
    net = two_segment_network()
    cur = RouteCursor(net, ("a", "b"))
    kin, moved = step_kinematics(cur, 10.0, 0.5)
    assert moved == 5.0
    assert kin.position == (5.0, 0.0)
    assert kin.velocity == (10.0, 0.0)
    assert kin.speed == 10.0

    # velocity turns with the segment
    cur.advance(95.0)
    kin, _ = step_kinematics(cur, 10.0, 0.5)
    assert kin.velocity == (0.0, 10.0)

    # parked vehicles report zero velocity
    cur.advance(1000.0)
    kin, moved = step_kinematics(cur, 10.0, 0.5)
    assert moved == 0.0
    assert kin.velocity == (0.0, 0.0)


def test_trip_state_odometers():
    trip = TripState(trip_start_time=5.0)
    trip.advance(10.0, 1.0)
    trip.advance(10.0, 1.0)
    assert trip.odometer_trip_m == 20.0
    assert trip.odometer_since_change_m == 20.0
    assert trip.time_since_change_s == 2.0

    trip.note_change()
    assert trip.changes_this_trip == 1
    assert trip.odometer_trip_m == 20.0  # trip odometer survives the change
    assert trip.odometer_since_change_m == 0.0
    assert trip.time_since_change_s == 0.0


def test_region_query_closed_ball():
    positions = {3: (3.0, 4.0), 1: (0.0, 0.0), 2: (10.0, 0.0)}
    # (3,4) is at distance exactly 5: included
    assert region_query(positions, (0.0, 0.0), 5.0) == [1, 3]
    assert region_query(positions, (0.0, 0.0), 4.9) == [1]
    assert region_query({}, (0.0, 0.0), 5.0) == []


def test_positioning_noise_sigma_zero_consumes_nothing():
    rng = np.random.default_rng(0)
    before = rng.bit_generator.state
    assert positioning_noise((1.0, 2.0), 0.0, rng) == (1.0, 2.0)
    assert rng.bit_generator.state == before


def test_positioning_noise_deterministic():
    a = positioning_noise((0.0, 0.0), 1.0, np.random.default_rng(7))
    b = positioning_noise((0.0, 0.0), 1.0, np.random.default_rng(7))
    assert a == b
    assert a != (0.0, 0.0)
