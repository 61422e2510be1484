"""
Tests for frames and links
"""
import pytest

from src.ether.frame import (
    BROADCAST,
    FE_BPS,
    GE_BPS,
    MAX_FRAME_BYTES,
    MIN_FRAME_BYTES,
    Frame,
    FrameKind,
    MacAddress,
    VlanTag,
    control_frame,
    fragment_sizes,
    multicast_group,
    serialization_delay,
)
from src.ether.link import Link, assert_pause, release_pause
from src.utils.error_handler import ConfigurationError, ModelError
from tests.conftest import mac


def data_frame(size=MAX_FRAME_BYTES, seq=0):
    return Frame(src=mac(1), dst=mac(2), size_bytes=size, seq=seq)


class TestAddresses:
    def test_parse_and_format(self):
        addr = MacAddress.parse("02:00:00:00:01:ff")
        assert str(addr) == "02:00:00:00:01:ff"
        assert addr.octets[5] == 0xFF
        assert not addr.is_multicast

    def test_broadcast_and_multicast(self):
        assert BROADCAST.is_broadcast and BROADCAST.is_multicast
        group = multicast_group(1)
        assert group.is_multicast and not group.is_broadcast

    def test_invalid_addresses(self):
        with pytest.raises(ConfigurationError):
            MacAddress.parse("zz:00:00:00:00:00")
        with pytest.raises(ConfigurationError):
            MacAddress.from_octets([1, 2, 3])
        with pytest.raises(ConfigurationError):
            MacAddress(1 << 48)


class TestFrames:
    def test_size_limits(self):
        with pytest.raises(ConfigurationError):
            data_frame(size=MIN_FRAME_BYTES - 1)
        with pytest.raises(ConfigurationError):
            data_frame(size=MAX_FRAME_BYTES + 1)

    def test_vlan_tag_ranges(self):
        with pytest.raises(ConfigurationError):
            VlanTag(0)
        with pytest.raises(ConfigurationError):
            VlanTag(10, priority=8)
        frame = Frame(mac(1), mac(2), 100, tag=VlanTag(10, 5))
        assert frame.priority == 5
        assert data_frame().priority == 0

    def test_control_frames_are_minimum_untagged(self):
        frame = control_frame(mac(1), FrameKind.PAUSE, 0)
        assert frame.size_bytes == MIN_FRAME_BYTES and frame.tag is None
        with pytest.raises(ConfigurationError):
            Frame(mac(1), mac(2), 100, kind=FrameKind.PAUSE)

    def test_serialization_delay(self):
        assert serialization_delay(MAX_FRAME_BYTES, GE_BPS) == 12_304
        assert serialization_delay(MIN_FRAME_BYTES, GE_BPS) == 672
        assert serialization_delay(MIN_FRAME_BYTES, FE_BPS) == 6_720

    def test_serialization_delay_rejects_bad_input(self):
        with pytest.raises(ConfigurationError):
            serialization_delay(10, GE_BPS)
        with pytest.raises(ConfigurationError):
            serialization_delay(100, 0)

    def test_fragment_sizes(self):
        assert fragment_sizes(4096) == [1518, 1518, 1060]
        assert fragment_sizes(10) == [64]
        assert fragment_sizes(1518) == [1518]
        with pytest.raises(ConfigurationError):
            fragment_sizes(0)


class TestLink:
    def test_single_frame_arrival(self, engine, endpoints):
        a, b = endpoints
        link = Link(engine, "l", a, b, GE_BPS, propagation_delay=500)
        arrival = link.outgoing(a).transmit(data_frame())
        engine.run_until(1_000_000)
        assert arrival == 12_304 + 500
        assert b.received[0][0] == arrival
        assert a.tx_ready == 1

    def test_transmit_while_busy_is_a_model_error(self, engine, endpoints):
        a, b = endpoints
        direction = Link(engine, "l", a, b, GE_BPS).outgoing(a)
        direction.transmit(data_frame())
        with pytest.raises(ModelError):
            direction.transmit(data_frame())

    def test_directions_are_independent(self, engine, endpoints):
        a, b = endpoints
        link = Link(engine, "l", a, b, GE_BPS)
        link.outgoing(a).transmit(data_frame())
        link.outgoing(b).transmit(data_frame())
        engine.run_until(100_000)
        assert len(a.received) == 1 and len(b.received) == 1

    def test_pause_stops_data_after_reaction_latency(self, engine, endpoints):
        a, b = endpoints
        link = Link(engine, "l", a, b, GE_BPS)
        assert assert_pause(link, b) is True
        engine.run_until(10_000)
        forward = link.outgoing(a)
        assert forward.paused
        assert forward.transmit(data_frame()) is None
        assert forward.deferred_frames == 1
        assert link.outgoing(b).stats.pause_frames == 1

        release_pause(link, b)
        engine.run_until(100_000)
        assert not forward.paused
        assert len(b.received) == 1
        assert forward.paused_time() > 0

    def test_pause_with_fc_disabled_is_ignored(self, engine, endpoints):
        a, b = endpoints
        link = Link(engine, "l", a, b, GE_BPS, fc_enabled=False)
        assert assert_pause(link, b) is False
        engine.run_until(10_000)
        assert not link.outgoing(a).paused
        assert link.incoming(b).stats.fc_ignored == 1

    def test_frame_in_flight_completes_when_paused(self, engine, endpoints):
        a, b = endpoints
        link = Link(engine, "l", a, b, GE_BPS)
        link.outgoing(a).transmit(data_frame())
        assert_pause(link, b)
        engine.run_until(100_000)
        assert len(b.received) == 1

    def test_invalid_link(self, engine, endpoints):
        a, b = endpoints
        with pytest.raises(ConfigurationError):
            Link(engine, "l", a, b, 0)
        with pytest.raises(ConfigurationError):
            Link(engine, "l", a, b, GE_BPS, propagation_delay=-1)
