import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tschsim.kernel import RngStreams
from tschsim.mac import (
    BROADCAST,
    Cell,
    CellOption,
    Frame,
    FrameKind,
    HoppingSequence,
    HoppingError,
    MAX_RETRIES,
    QUEUE_CAPACITY_PER_PEER,
    Slotframe,
    TRAFFIC_BEACON,
    TRAFFIC_RPL,
    TRAFFIC_UNICAST,
    TschMac,
    channel_for,
)

PAPER_V = HoppingSequence()  # (16, 17, 23, 18, 26, 15, 25, 22, 19, 11, 12, 13, 24, 14, 20, 21)


def make_mac(node_id=1, joined=True):
    mac = TschMac(node_id, PAPER_V, RngStreams(7).for_node(node_id), is_coordinator=joined)
    return mac


# -- channel hopping ---------------------------------------------------------


def test_channel_for_matches_worked_example():
    # f = V[(4 + 1) mod 16] = V[5] = 15
    assert channel_for(4, 1, PAPER_V) == 15


def test_channel_for_asn_zero():
    assert channel_for(0, 0, PAPER_V) == 16


def test_channel_for_wraps_modulo_sequence_length():
    # (11 + 1) mod 16 = 12 -> thirteenth listed channel
    assert PAPER_V.channels[12] == 24
    assert channel_for(11, 1, PAPER_V) == 24


def test_channel_offset_out_of_range_errors():
    with pytest.raises(HoppingError):
        channel_for(0, 16, PAPER_V)
    with pytest.raises(HoppingError):
        channel_for(0, -1, PAPER_V)


@given(
    ch_of=st.integers(0, 15),
    start=st.integers(0, 10_000_000),
)
def test_hop_coverage_every_channel_exactly_once(ch_of, start):
    window = [channel_for(a, ch_of, PAPER_V) for a in range(start, start + PAPER_V.n_ch)]
    assert sorted(window) == sorted(PAPER_V.channels)


def test_hopping_sequence_rejects_duplicates():
    with pytest.raises(ValueError):
        HoppingSequence((11, 11, 12))


def test_same_asn_choffset_gives_same_channel_on_every_node():
    a, b = make_mac(1), make_mac(2)
    for asn in (0, 5, 31, 397):
        assert channel_for(asn, 1, a.hopping) == channel_for(asn, 1, b.hopping)


# -- slotframes and cell selection -----------------------------------------------


def unicast_sf(**cells):
    sf = Slotframe(handle=0, length=17, priority=0)
    for cell in cells.values():
        sf.add(cell)
    return sf


def test_active_cell_prefers_higher_priority_slotframe():
    mac = make_mac(3)
    uni = Slotframe(0, 17, priority=0)
    uni.add(Cell(0, 2, CellOption.TX | CellOption.SHARED, 9, TRAFFIC_UNICAST))
    beacon = Slotframe(2, 397, priority=2)
    beacon.add(Cell(0, 0, CellOption.TX, BROADCAST, TRAFFIC_BEACON, autogen_eb=True))
    mac.install_slotframe(uni)
    mac.install_slotframe(beacon)
    mac.enqueue(Frame(FrameKind.DATA, 3, 9, {}))
    intent = mac.decide_slot(0)  # both slotframes active at ASN 0
    assert intent.action == "tx"
    assert intent.frame.kind is FrameKind.DATA


def test_no_matching_cell_means_sleep():
    mac = make_mac(3)
    sf = Slotframe(0, 17, priority=0)
    sf.add(Cell(5, 2, CellOption.RX, BROADCAST, TRAFFIC_UNICAST))
    mac.install_slotframe(sf)
    assert mac.decide_slot(0).action == "sleep"
    assert mac.decide_slot(5).action == "rx"


def test_minimal_shared_cell_active_every_seventh_slot():
    mac = make_mac(3)
    sf = Slotframe(0, 7, priority=0)
    sf.add(Cell(0, 0, CellOption.TX | CellOption.RX | CellOption.SHARED, BROADCAST))
    mac.install_slotframe(sf)
    active = [asn for asn in range(22) if mac.decide_slot(asn).action != "sleep"]
    assert active == [0, 7, 14, 21]


def test_inert_tx_cell_does_not_shadow_lower_priority_beacon():
    mac = make_mac(3)
    uni = Slotframe(0, 17, priority=0)
    uni.add(Cell(0, 2, CellOption.TX | CellOption.SHARED, 9, TRAFFIC_UNICAST))
    beacon = Slotframe(2, 397, priority=2)
    beacon.add(Cell(0, 0, CellOption.TX, BROADCAST, TRAFFIC_BEACON, autogen_eb=True))
    mac.install_slotframe(uni)
    mac.install_slotframe(beacon)
    intent = mac.decide_slot(0)  # nothing queued for 9: unicast cell is inert
    assert intent.action == "tx" and intent.frame.kind is FrameKind.EB


def test_tx_with_pending_frame_beats_rx_within_one_slotframe():
    mac = make_mac(3)
    sf = Slotframe(0, 17, priority=0)
    sf.add(Cell(4, 2, CellOption.RX, BROADCAST, TRAFFIC_UNICAST))
    sf.add(Cell(4, 3, CellOption.TX | CellOption.SHARED, 9, TRAFFIC_UNICAST))
    mac.install_slotframe(sf)
    assert mac.decide_slot(4).action == "rx"
    mac.enqueue(Frame(FrameKind.DATA, 3, 9, {}))
    assert mac.decide_slot(4).action == "tx"


def test_unjoined_node_scans_on_hopping_vector():
    mac = TschMac(5, PAPER_V, RngStreams(7).for_node(5))
    assert not mac.joined
    for asn in (0, 1, 17, 100):
        intent = mac.decide_slot(asn)
        assert intent.action == "rx"
        assert intent.channel == PAPER_V.channels[asn % 16]


def test_eb_reception_joins_and_sets_time_source():
    mac = TschMac(5, PAPER_V, RngStreams(7).for_node(5))
    joined = []
    mac.on_joined = lambda sender, asn: joined.append((sender, asn))
    mac.receive_eb(Frame(FrameKind.EB, 3, BROADCAST, needs_ack=False), asn=42)
    assert mac.joined and mac.time_source == 3 and mac.join_asn == 42
    assert joined == [(3, 42)]
    # a second EB does not re-join
    mac.receive_eb(Frame(FrameKind.EB, 9, BROADCAST, needs_ack=False), asn=50)
    assert mac.time_source == 3 and joined == [(3, 42)]


# -- queues, retries, backoff -------------------------------------------------------


def shared_tx_mac(peer=9):
    mac = make_mac(3)
    sf = Slotframe(0, 17, priority=0)
    sf.add(Cell(0, 2, CellOption.TX | CellOption.SHARED, peer, TRAFFIC_UNICAST))
    mac.install_slotframe(sf)
    return mac


def test_successful_unicast_dequeues_and_acks():
    mac = shared_tx_mac()
    acked = []
    mac.on_ack = lambda peer, frame: acked.append(peer)
    mac.enqueue(Frame(FrameKind.DATA, 3, 9, {}))
    intent = mac.decide_slot(0)
    assert intent.action == "tx"
    assert mac.complete_tx(intent, acked=True) == "tx_ok"
    assert acked == [9]
    assert mac.queue.pending() == 0
    assert mac.queue.counters.delivered == 1


def test_failed_unicast_retries_until_drop():
    mac = shared_tx_mac()
    missed = []
    mac.on_ack_missed = lambda peer, frame, dropped: missed.append(dropped)
    mac.enqueue(Frame(FrameKind.DATA, 3, 9, {}))
    attempts = 0
    for asn in range(0, 17 * 200, 17):
        intent = mac.decide_slot(asn)
        if intent.action != "tx":
            continue  # backoff hold
        attempts += 1
        mac.complete_tx(intent, acked=False)
        if mac.queue.pending() == 0:
            break
    assert attempts == MAX_RETRIES
    assert missed.count(True) == 1 and len(missed) == MAX_RETRIES
    assert mac.queue.counters.dropped == 1


def test_shared_slot_backoff_skips_eligible_slots():
    mac = shared_tx_mac()
    mac.enqueue(Frame(FrameKind.DATA, 3, 9, {}))
    intent = mac.decide_slot(0)
    mac.complete_tx(intent, acked=False)
    qf = mac.queue.head(9)
    assert qf.retries == 1
    # backoff window drawn from [0, 2^1 - 1]
    assert 0 <= qf.backoff_skip <= 1
    assert qf.backoff_exponent == 2
    skips = qf.backoff_skip
    seen_tx = 0
    for asn in range(17, 17 * (skips + 2), 17):
        if mac.decide_slot(asn).action == "tx":
            seen_tx += 1
    assert seen_tx == 1  # exactly after the drawn number of eligible slots


def test_dedicated_cell_retransmits_without_backoff_and_keeps_fifo():
    mac = make_mac(3)
    sf = Slotframe(0, 17, priority=0)
    sf.add(Cell(0, 2, CellOption.TX, 9, TRAFFIC_UNICAST))  # dedicated: no SHARED
    mac.install_slotframe(sf)
    mac.enqueue(Frame(FrameKind.DATA, 3, 9, {"n": 1}))
    mac.enqueue(Frame(FrameKind.DATA, 3, 9, {"n": 2}))
    intent = mac.decide_slot(0)
    mac.complete_tx(intent, acked=False)
    nxt = mac.decide_slot(17)
    assert nxt.action == "tx"
    assert nxt.frame.payload["n"] == 1  # the lost frame never jumps the queue
    assert nxt.queued.backoff_skip == 0


def test_queue_capacity_bounds_and_conservation():
    mac = shared_tx_mac()
    for n in range(QUEUE_CAPACITY_PER_PEER + 3):
        mac.enqueue(Frame(FrameKind.DATA, 3, 9, {"n": n}))
    c = mac.queue.counters
    assert c.enqueued == QUEUE_CAPACITY_PER_PEER + 3
    assert c.dropped == 3
    assert c.enqueued == c.delivered + c.dropped + mac.queue.pending()


@given(
    st.lists(
        st.tuples(st.sampled_from(["enqueue", "ok", "fail"]), st.integers(0, 2)),
        max_size=60,
    )
)
@settings(max_examples=200)
def test_queue_conservation_property(ops):
    mac = make_mac(3)
    sf = Slotframe(0, 5, priority=0)
    for peer in (7, 8, 9):
        sf.add(Cell(peer % 5, 2, CellOption.TX | CellOption.SHARED, peer, TRAFFIC_UNICAST))
    mac.install_slotframe(sf)
    asn = 0
    for op, which in ops:
        peer = (7, 8, 9)[which]
        if op == "enqueue":
            mac.enqueue(Frame(FrameKind.DATA, 3, peer, {}))
            continue
        for _ in range(40):  # find this peer's next usable tx slot
            intent = mac.decide_slot(asn)
            asn += 1
            if intent.action == "tx" and intent.frame.dst == peer:
                mac.complete_tx(intent, acked=(op == "ok"))
                break
        c = mac.queue.counters
        assert c.enqueued == c.delivered + c.dropped + mac.queue.pending()
    c = mac.queue.counters
    assert c.enqueued == c.delivered + c.dropped + mac.queue.pending()


def test_node_never_transmits_two_frames_in_one_slot():
    mac = shared_tx_mac()
    mac.enqueue(Frame(FrameKind.DATA, 3, 9, {"n": 1}))
    mac.enqueue(Frame(FrameKind.DATA, 3, 9, {"n": 2}))
    intent = mac.decide_slot(0)
    assert intent.action == "tx" and intent.frame.payload["n"] == 1
