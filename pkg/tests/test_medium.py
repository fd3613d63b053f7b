import math

import pytest
from hypothesis import given, strategies as st

from tschsim.mac import Frame, FrameKind, BROADCAST
from tschsim.medium import Position, RadioMedium, Transmission, UnknownNodeError

# Default six-node layout: two redundant paths 2-9-3 and 2-10-3.
PAPER_POSITIONS = {
    1: Position(-30.0, 20.0),
    2: Position(80.0, 0.0),
    3: Position(0.0, 0.0),
    4: Position(-30.0, -20.0),
    9: Position(40.0, 20.0),
    10: Position(40.0, -20.0),
}


def frame(src, dst=BROADCAST):
    return Frame(FrameKind.DATA, src, dst)


def medium(positions=None, **kw):
    return RadioMedium(positions or PAPER_POSITIONS, **kw)


def test_in_range_transmission_is_delivered():
    m = medium({1: Position(0, 0), 2: Position(40, 20)})
    # independent check: Euclidean distance must be under the 50 m disk
    assert math.hypot(40, 20) < 50
    got = m.deliver([Transmission(1, 20, frame(1))], listener=2)
    assert got is not None and got.sender == 1


def test_out_of_range_transmission_is_not_delivered():
    m = medium({1: Position(0, 0), 2: Position(80, 0)})
    assert math.hypot(80, 0) > 50
    assert m.deliver([Transmission(1, 20, frame(1))], listener=2) is None


def test_two_in_range_senders_collide():
    m = medium({1: Position(0, 0), 2: Position(10, 0), 3: Position(5, 3)})
    tx_set = [Transmission(1, 20, frame(1)), Transmission(2, 20, frame(2))]
    assert m.deliver(tx_set, listener=3) is None


def test_at_most_one_frame_delivered_even_with_remote_interferer():
    # the far transmitter is outside interference range: not audible
    m = medium({1: Position(0, 0), 2: Position(30, 0), 3: Position(500, 0)})
    tx_set = [Transmission(1, 20, frame(1)), Transmission(3, 20, frame(3))]
    got = m.deliver(tx_set, listener=2)
    assert got is not None and got.sender == 1


def test_audible_but_undecodable_sender_jams_without_delivering():
    m = medium(
        {1: Position(0, 0), 2: Position(55, 0)},
        tx_range=50,
        interference_range=60,
    )
    assert m.deliver([Transmission(1, 20, frame(1))], listener=2) is None


def test_tx_range_must_not_exceed_interference_range():
    with pytest.raises(ValueError):
        medium(tx_range=60, interference_range=50)


def test_default_topology_neighbor_sets():
    m = medium()
    # distances computed independently of the medium
    d = lambda a, b: PAPER_POSITIONS[a].distance_to(PAPER_POSITIONS[b])
    assert d(2, 9) < 50 and d(2, 10) < 50 and d(2, 3) > 50
    assert m.neighbors(2) == {9, 10}
    assert m.neighbors(3) == {1, 4, 9, 10}
    assert 3 not in m.neighbors(2)


def test_lone_node_has_no_neighbors():
    m = medium({7: Position(0, 0)})
    assert m.neighbors(7) == set()


def test_neighbors_of_removed_node_errors():
    m = medium()
    m.remove_node(10)
    with pytest.raises(UnknownNodeError):
        m.neighbors(10)
    assert 10 not in m.neighbors(2)


def test_neighbors_of_unknown_node_errors():
    with pytest.raises(UnknownNodeError):
        medium().neighbors(77)


def test_position_requires_finite_coordinates():
    with pytest.raises(ValueError):
        Position(float("nan"), 0.0)


coords = st.tuples(
    st.floats(min_value=-100, max_value=100, allow_nan=False),
    st.floats(min_value=-100, max_value=100, allow_nan=False),
)


@given(st.dictionaries(st.integers(0, 20), coords, min_size=2, max_size=10))
def test_link_existence_is_symmetric_under_equal_ranges(raw):
    m = medium({nid: Position(*xy) for nid, xy in raw.items()})
    for a in raw:
        for b in m.neighbors(a):
            assert a in m.neighbors(b)


@given(
    st.dictionaries(st.integers(0, 12), coords, min_size=2, max_size=8),
    st.data(),
)
def test_collision_exclusivity_at_most_one_frame_per_listener(raw, data):
    positions = {nid: Position(*xy) for nid, xy in raw.items()}
    m = medium(positions)
    ids = sorted(positions)
    senders = data.draw(st.sets(st.sampled_from(ids), min_size=1, max_size=len(ids)))
    tx_set = [Transmission(s, 20, frame(s)) for s in sorted(senders)]
    for listener in ids:
        got = m.deliver(tx_set, listener)
        if got is None:
            continue
        # the delivered frame is the unique audible one, and it is decodable
        audible = [
            tx.sender for tx in tx_set
            if tx.sender != listener
            and positions[listener].distance_to(positions[tx.sender])
            <= m.interference_range
        ]
        assert audible == [got.sender]
        assert positions[listener].distance_to(positions[got.sender]) <= m.tx_range
