"""
Tests for traffic sources, sinks and the MAC table probe
"""
import pytest

from src.dataflow.host import SendResult
from src.ether.frame import GE_BPS, MacAddress
from src.fabric.mac_table import MacTableConfig
from src.fabric.switch import SwitchConfig
from src.sim_core.engine import MS, US
from src.traffic.probes import AddressPattern, address_pattern, mac_probe
from src.traffic.sources import (
    Destination,
    SourceConfig,
    TrafficSource,
    offered_rate_bps,
)
from src.utils.error_handler import ConfigurationError
from tests.conftest import mac


@pytest.fixture
def fake_host(mocker):
    """Host stand-in that records every frame it is asked to send"""
    host = mocker.Mock()
    host.name = "h"
    host.mac = mac(1)
    host.config.send_retry_backoff = 10 * US
    host.frames = []

    def send(frame):
        host.frames.append(frame)
        return SendResult.SENT

    host.send.side_effect = send
    return host


def source(engine, host, **options):
    options.setdefault("destinations", [Destination(mac(2), flow_id=1)])
    return TrafficSource(engine, host, SourceConfig(name="src", **options), GE_BPS)


class TestSourceConfig:
    def test_weights_are_normalized(self):
        config = SourceConfig("s", destinations=[Destination(mac(2), 1.0), Destination(mac(3), 3.0)])
        assert [d.weight for d in config.destinations] == [0.25, 0.75]

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            SourceConfig("s", offered_load=1.5, destinations=[Destination(mac(2))])
        with pytest.raises(ConfigurationError):
            SourceConfig("s")
        with pytest.raises(ConfigurationError):
            SourceConfig("s", destinations=[Destination(mac(2), weight=0)])

    def test_frame_rate_above_line_rate(self, engine, fake_host):
        with pytest.raises(ConfigurationError):
            source(engine, fake_host, frame_rate_hz=1e6)

    def test_offered_rate_excludes_framing(self):
        config = SourceConfig("s", offered_load=0.5, destinations=[Destination(mac(2))])
        assert offered_rate_bps(config, GE_BPS) == pytest.approx(0.5e9 * 1518 / 1538)


class TestTrafficSource:
    def test_cbr_departures(self, engine, fake_host):
        src = source(engine, fake_host, offered_load=0.5)
        src.start()
        engine.run_until(100_000)
        assert [f.injected_at for f in fake_host.frames] == [0, 24_608, 49_216, 73_824, 98_432]
        assert [f.seq for f in fake_host.frames] == [0, 1, 2, 3, 4]

    def test_cbr_does_not_drift(self, engine, fake_host):
        src = source(engine, fake_host, offered_load=0.3, frame_size_bytes=100)
        src.start()
        engine.run_until(10 * MS)
        period = src.frame_time / 0.3
        last = fake_host.frames[-1]
        assert last.injected_at == round(last.seq * period)

    def test_poisson_long_run_rate(self, engine, fake_host):
        src = source(engine, fake_host, pattern="poisson", offered_load=0.5)
        src.start()
        engine.run_until(100 * MS)
        expected = 100 * MS / (12_304 / 0.5)
        assert src.sent == pytest.approx(expected, rel=0.05)
        gaps = [b.injected_at - a.injected_at for a, b in zip(fake_host.frames, fake_host.frames[1:])]
        assert min(gaps) >= 12_304

    def test_interleaved_destinations_follow_weights(self, engine, fake_host):
        dests = [Destination(mac(2), 1.0, 1), Destination(mac(3), 3.0, 2)]
        src = source(engine, fake_host, offered_load=1.0, destinations=dests)
        src.start()
        engine.run_until(7 * 12_304)
        flows = [f.flow_id for f in fake_host.frames]
        assert len(flows) == 8
        assert flows.count(1) == 2 and flows.count(2) == 6
        # never two frames in a row to the light destination
        assert "1,1" not in ",".join(map(str, flows))

    def test_random_order_is_seeded(self, engine, fake_host):
        dests = [Destination(mac(2), 1.0, 1), Destination(mac(3), 1.0, 2)]
        src = source(engine, fake_host, destinations=dests, order="random")
        src.start()
        engine.run_until(1 * MS)
        flows = [f.flow_id for f in fake_host.frames]
        assert set(flows) == {1, 2}
        assert flows != sorted(flows)

    def test_stop_time(self, engine, fake_host):
        src = source(engine, fake_host, offered_load=1.0, stop=30_000)
        src.start()
        engine.run_until(1 * MS)
        assert src.sent == 3

    def test_blocked_sender_retries_then_restarts_schedule(self, engine, fake_host):
        results = iter([SendResult.RETRY_LATER])
        sent = []

        def send(frame):
            result = next(results, SendResult.SENT)
            if result is SendResult.SENT:
                sent.append(frame)
            return result

        fake_host.send.side_effect = send
        src = source(engine, fake_host, offered_load=0.5)
        src.start()
        engine.run_until(40_000)
        assert src.blocked == 1
        assert [f.injected_at for f in sent] == [10_000, 10_000 + 24_608]
        assert sent[0].seq == 0


class TestAddressPatterns:
    @pytest.mark.parametrize("pattern", list(AddressPattern))
    def test_distinct_unicast(self, pattern):
        addresses = address_pattern(pattern, 512, seed=3)
        assert len(addresses) == 512
        assert len({a.value for a in addresses}) == 512
        assert not any(a.is_multicast for a in addresses)

    def test_linear_layouts(self):
        assert address_pattern("low_linear", 3)[2] == MacAddress.parse("00:12:34:56:00:02")
        assert address_pattern("mid_linear", 3)[2] == MacAddress.parse("00:12:34:00:02:56")
        assert address_pattern("high_linear", 3)[2] == MacAddress.parse("00:12:00:02:34:56")

    def test_random_layout_is_seeded(self):
        assert address_pattern("low_random", 16, seed=1) == address_pattern("low_random", 16, seed=1)
        assert address_pattern("low_random", 16, seed=1) != address_pattern("low_random", 16, seed=2)

    def test_count_range(self):
        with pytest.raises(ConfigurationError):
            address_pattern("low_linear", 0)
        with pytest.raises(ConfigurationError):
            address_pattern("low_linear", 70_000)


@pytest.mark.integration
class TestMacProbe:
    def test_ideal_table_capacity(self):
        config = SwitchConfig(name="dut", mac_table=MacTableConfig(capacity=1024))
        result = mac_probe(config, "low_linear", count=2048)
        assert result.learned_count == 1024
        assert result.table_entries == 1024

    def test_everything_fits_below_capacity(self):
        result = mac_probe(SwitchConfig(name="dut"), "low_random", count=256)
        assert result.flooded == 0
        assert result.learned_count == 256

    def test_hash_collisions_limit_learning(self):
        table = MacTableConfig(mode="hash_bucket", key_octets=(5,), bucket_depth=4)
        result = mac_probe(SwitchConfig(name="dut", mac_table=table), "high_linear", count=64)
        # every high_linear address ends in the same octet
        assert result.learned_count == 4
