import pytest
from hypothesis import given
from hypothesis import strategies as st

from gossip_timestomp.model import (
    InvalidStateError,
    NodeCapture,
    NodeState,
    PacketMeta,
    exchange,
    instantaneous_age,
    timestomp_incoming,
    timestomp_outgoing,
)

times = st.floats(min_value=0.0, max_value=1e6, allow_nan=False)
unit = st.floats(min_value=0.0, max_value=1.0, exclude_max=True)


@st.composite
def packets(draw):
    return PacketMeta(draw(times), draw(times))


def test_fresher_claim_wins():
    resident, incoming = PacketMeta(5.0, 5.0), PacketMeta(7.0, 7.0)
    assert exchange(resident, incoming) is incoming


def test_tie_keeps_resident():
    resident, incoming = PacketMeta(5.0, 5.0), PacketMeta(5.0, 1.0)
    assert exchange(resident, incoming) is resident


def test_tampered_claim_beats_truly_fresher_packet():
    resident = PacketMeta(3.0, 3.0)
    incoming = PacketMeta(9.0, 1.0)
    assert exchange(resident, incoming) is incoming


def test_outgoing_stomp():
    pkt = PacketMeta(4.0, 4.0)
    assert timestomp_outgoing(pkt, 10.0, 1.0, 0.3) == PacketMeta(10.0, 4.0)
    assert timestomp_outgoing(pkt, 10.0, 0.0, 0.3) == PacketMeta(0.0, 4.0)
    assert timestomp_outgoing(PacketMeta(), 0.0, 1.0, 0.5) == PacketMeta(0.0, 0.0)


def test_incoming_stomp():
    pkt = PacketMeta(8.0, 8.0)
    assert timestomp_incoming(pkt, 10.0, 1.0, 0.3) == PacketMeta(0.0, 8.0)
    assert timestomp_incoming(pkt, 10.0, 0.0, 0.3) == PacketMeta(10.0, 8.0)
    assert timestomp_incoming(pkt, 10.0, 0.5, 0.49).claimed == 0.0
    assert timestomp_incoming(pkt, 10.0, 0.5, 0.5).claimed == 10.0


def test_instantaneous_age_uses_true_origin():
    assert instantaneous_age(NodeState(1, PacketMeta(4.0, 4.0)), 10.0) == 6.0
    assert instantaneous_age(NodeState(1, PacketMeta(10.0, 10.0)), 10.0) == 0.0
    assert instantaneous_age(NodeState(1, PacketMeta(10.0, 4.0)), 10.0) == 6.0


def test_clock_inversion_detected():
    with pytest.raises(InvalidStateError):
        instantaneous_age(NodeState(2, PacketMeta(9.0, 9.0)), 8.0)


def test_negative_timestamp_rejected():
    with pytest.raises(ValueError):
        PacketMeta(-1.0, 0.0)


def test_node_capture_probabilities():
    assert NodeCapture(0.3).q == 0.3
    assert NodeCapture(0.3, 0.8).q == 0.8
    with pytest.raises(ValueError):
        NodeCapture(1.2)
    with pytest.raises(ValueError):
        NodeCapture(0.5, -0.1)


@given(packets(), packets())
def test_exchange_returns_one_of_its_inputs(a, b):
    assert exchange(a, b) in (a, b)
    assert exchange(a, a) is a
    if a.claimed != b.claimed:
        assert exchange(a, b) == exchange(b, a)


@given(packets(), times, unit, unit)
def test_stomps_keep_true_origin(pkt, now, prob, coin):
    assert timestomp_outgoing(pkt, now, prob, coin).true_origin == pkt.true_origin
    assert timestomp_incoming(pkt, now, prob, coin).true_origin == pkt.true_origin
    assert timestomp_outgoing(pkt, now, prob, coin).claimed in (0.0, now)
    assert timestomp_incoming(pkt, now, prob, coin).claimed in (0.0, now)


@given(packets(), packets(), unit)
def test_full_outgoing_stomp_wins_over_older_claims(pkt, other, coin):
    now = max(pkt.claimed, other.claimed) + 1.0
    stomped = timestomp_outgoing(pkt, now, 1.0, coin)
    assert exchange(other, stomped) is stomped


@given(st.lists(times, min_size=1, max_size=30))
def test_untampered_exchanges_keep_freshest(origins):
    held = PacketMeta(origins[0], origins[0])
    for t in origins[1:]:
        held = exchange(held, PacketMeta(t, t))
    assert held.true_origin == max(origins)
