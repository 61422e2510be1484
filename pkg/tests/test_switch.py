"""
Switch behaviour exercised through small scenario documents
"""
import pytest

from src.scenario.builder import build
from src.scenario.catalog import get_scenario
from src.scenario.parser import from_raw


def simulate(raw, seed=None):
    sim = build(from_raw(raw), seed)
    sim.run()
    return sim


def star(nodes, fc=True):
    return [{"a": n["name"], "b": f"sw:{n['name']}", "fc": fc} for n in nodes]


def point_to_point(**switch):
    nodes = [{"name": "tx"}, {"name": "rx"}]
    return {
        "name": "p2p",
        "run_length": "10ms",
        "switches": [{"name": "sw", **switch}],
        "nodes": nodes,
        "links": star(nodes),
        "sources": [{
            "name": "tx", "node": "tx", "offered_load": 0.5, "start": "50us",
            "destinations": [{"node": "rx", "flow_id": 1}],
        }],
    }


def fan_in(fc):
    nodes = [{"name": "s1"}, {"name": "s2"}, {"name": "sink"}]
    return {
        "name": "fan_in",
        "run_length": "10ms",
        "switches": [{"name": "sw", "fc_propagation": fc, "egress_buffer_bytes": 32768}],
        "nodes": nodes,
        "links": star(nodes, fc=fc),
        "sources": [
            {"name": s, "node": s, "offered_load": 0.8, "start": "50us",
             "destinations": [{"node": "sink", "flow_id": i + 1}]}
            for i, s in enumerate(("s1", "s2"))
        ],
    }


@pytest.mark.integration
class TestForwarding:
    def test_point_to_point_delivery(self):
        sim = simulate(point_to_point())
        stats = sim.metrics.flows[1]
        assert 380 <= stats.sent <= 420
        assert stats.dropped == 0
        assert stats.delivered >= stats.sent - 2
        assert sim.conservation_holds()

    def test_latency_is_two_hops_plus_lookup(self):
        sim = simulate(point_to_point())
        histogram = sim.metrics.histograms[1]
        # store and forward: one serialization per hop plus the forwarding latency
        assert histogram.mean() == pytest.approx(2 * 12_304 + 5_000, abs=300)

    def test_known_destination_is_not_flooded(self):
        sim = simulate(point_to_point())
        assert sim.switches["sw"].counters["floods"] == 0
        assert sim.counters()["switch.sw.mac.learned"] == 2

    def test_unknown_destination_is_flooded(self):
        nodes = [{"name": "tx"}, {"name": "spy", "promiscuous": True}, {"name": "plain"}]
        raw = {
            "name": "flood",
            "run_length": "2ms",
            "switches": [{"name": "sw"}],
            "nodes": nodes,
            "links": star(nodes),
            "sources": [{
                "name": "tx", "node": "tx", "offered_load": 0.2, "start": "50us",
                "destinations": [{"mac": "02:ee:00:00:00:01", "flow_id": 1}],
            }],
        }
        sim = simulate(raw)
        switch = sim.switches["sw"]
        assert 0 < switch.counters["floods"] <= sim.metrics.flows[1].sent
        assert sim.listeners["spy"].by_flow[1] > 0
        assert sim.hosts["plain"].counters["not_for_me"] > 0
        # nobody owns the address
        assert sim.metrics.flows[1].delivered == 0

    def test_same_seed_is_reproducible(self):
        raw = fan_in(fc=False)
        raw["sources"][1]["pattern"] = "poisson"
        first = simulate(raw, seed=4)
        second = simulate(raw, seed=4)
        assert first.counters() == second.counters()


@pytest.mark.integration
class TestCongestion:
    def test_overload_without_flow_control_drops_at_egress(self):
        sim = simulate(fan_in(fc=False))
        assert sim.switches["sw"].counters["dropped_egress_full"] > 0
        assert sim.metrics.total("dropped_switch") > 0
        assert sim.conservation_holds()

    def test_flow_control_makes_the_fabric_lossless(self):
        sim = simulate(fan_in(fc=True))
        counters = sim.counters()
        assert sim.metrics.total("dropped_switch") == 0
        assert sim.switches["sw"].counters["xoff_events"] > 0
        assert sum(v for k, v in counters.items() if k.endswith(".pause_frames")) > 0
        assert sim.conservation_holds()

    def test_sink_receives_its_line_rate(self):
        sim = simulate(fan_in(fc=True))
        share = sum(sim.metrics.line_share(f, sim.link_speed("sink")) for f in (1, 2))
        assert share == pytest.approx(1.0, abs=0.03)


@pytest.mark.integration
class TestBroadcast:
    def test_loop_without_separation_storms(self):
        sim = build(get_scenario("vlan_loop", {"separated": False}))
        sim.run()
        assert any(s.counters["storm_detected"] for s in sim.switches.values())

    def test_vlan_separation_breaks_the_loop(self):
        sim = build(get_scenario("vlan_loop", {"separated": True}))
        sim.run()
        assert not any(s.counters["storm_detected"] for s in sim.switches.values())

    def test_multicast_rate_cap_delays_floods(self):
        nodes = [{"name": "tx", "announce": False}, {"name": "rx", "announce": False}]
        raw = {
            "name": "capped",
            "run_length": "5ms",
            "switches": [{"name": "sw", "multicast_rate_cap": 1000}],
            "nodes": nodes,
            "links": star(nodes),
            "sources": [{
                "name": "tx", "node": "tx", "frame_rate_hz": 10_000, "frame_size": 64,
                "destinations": [{"mac": "ff:ff:ff:ff:ff:ff", "flow_id": 1}],
            }],
        }
        sim = simulate(raw)
        counters = sim.switches["sw"].counters
        assert counters["multicast_delay_ns"] > 0
        # roughly one copy per millisecond leaves the switch
        assert sim.listeners["rx"].frames <= 7


@pytest.mark.integration
class TestStormDetection:
    def test_announcements_of_a_large_population_are_not_a_storm(self):
        nodes = [{"name": f"h{i}"} for i in range(40)]
        raw = {
            "name": "crowd",
            "run_length": "1ms",
            "switches": [{"name": "sw", "storm_threshold": 10}],
            "nodes": nodes,
            "links": star(nodes),
        }
        counters = simulate(raw).switches["sw"].counters
        assert counters["broadcast_copies"] == 40 * 39
        assert counters["broadcast_replicas"] == 0
        assert counters["storm_detected"] == 0

    def test_dataflow_population_is_not_a_storm(self):
        sim = build(get_scenario("dataflow_e2e", {"run_length": "2ms"}))
        sim.run()
        assert not any(s.counters["storm_detected"] for s in sim.switches.values())

    def test_looped_broadcast_is_counted_as_replicas(self):
        sim = build(get_scenario("vlan_loop", {"separated": False}))
        sim.run()
        counters = sim.switches["s1"].counters
        assert counters["broadcast_replicas"] > 1000
        assert counters["storm_detected"] == 1


@pytest.mark.integration
class TestFabricAdmission:
    def test_fabric_backlog_keeps_event_count_bounded(self):
        sim = build(get_scenario("saturation_sweep", {"load": 0.7, "run_length": "4ms"}))
        sim.run()
        sent = sim.metrics.total("sent")
        assert sent > 1000
        assert sim.engine.counters.processed < 20 * sent
        assert sim.engine.counters.pending < 100

    def test_forwarding_jitter_keeps_ingress_order(self):
        raw = point_to_point(forwarding_jitter="20us")
        raw["sources"][0]["offered_load"] = 1.0
        sim = simulate(raw)
        stats = sim.metrics.flows[1]
        assert stats.dropped == 0
        assert stats.reorders == 0
        assert stats.delivered >= stats.sent - 6
