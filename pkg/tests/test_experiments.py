"""
Tests for the experiment procedures

Tolerances follow the analytic expectations: a receiver shared by X, 0.3 Y and
0.5 Z is oversubscribed 1.8 alpha, and proportional throttling gives every
sender 1/1.8 of its line.
"""
import pytest

from src.scenario.catalog import get_scenario
from src.scenario.runner import execute
from src.traffic.experiments import (
    QosPoint,
    aging_study,
    eb_shaping_comparison,
    hol_comparison,
    ingress_rejects,
    loss_onset,
    run_congestion_scenario,
    run_qos_scenario,
    run_vlan_suite,
    saturation_sweep,
    trunk_balance,
    trunk_census,
    vlan_violations,
    water_fill,
)
from src.utils.error_handler import ConfigurationError


class TestWaterFill:
    def test_strict_priority_serves_highest_class_first(self):
        assert water_fill(1.0, [0.3, 0.3, 0.3, 0.3]) == pytest.approx([0.1, 0.3, 0.3, 0.3])
        assert water_fill(1.0, [0.2, 0.2]) == pytest.approx([0.2, 0.2])

    def test_weighted_shares_when_all_saturate(self):
        shares = water_fill(1.0, [0.5] * 4, [10, 20, 30, 40])
        assert shares == pytest.approx([0.1, 0.2, 0.3, 0.4])

    def test_weighted_redistributes_unused_share(self):
        shares = water_fill(1.0, [0.05, 0.5, 0.5, 0.5], [1, 1, 1, 1])
        assert shares[0] == pytest.approx(0.05)
        assert shares[1:] == pytest.approx([0.95 / 3] * 3)
        assert sum(shares) == pytest.approx(1.0)

    def test_underloaded_link_gives_every_class_its_demand(self):
        assert water_fill(1.0, [0.1, 0.2], [1, 3]) == pytest.approx([0.1, 0.2])

    def test_qos_point_deviation(self):
        point = QosPoint("wrr", [0.5, 0.5], [0.24, 0.77], [0.25, 0.75])
        assert point.aggregate_offered == 1.0
        assert point.max_deviation == pytest.approx(0.02)


class TestTrunkCensus:
    def test_two_links_split_evenly(self):
        census = trunk_census(1600, links=2, seed=1)
        assert sum(census.values()) == 1600
        assert all(abs(n - 800) <= 60 for n in census.values())

    def test_rejects_empty_census(self):
        with pytest.raises(ConfigurationError):
            trunk_census(0)


@pytest.mark.integration
class TestCongestionExperiments:
    def test_without_flow_control_only_the_hot_receiver_loses(self):
        result = run_congestion_scenario(1.0, fc=False, run_length="20ms")
        assert result.goodput["A"] == pytest.approx(1.0, abs=0.02)
        assert result.flow_share[("Y", "B")] == pytest.approx(0.7, abs=0.005)
        assert result.flow_share[("Z", "C")] == pytest.approx(0.5, abs=0.005)
        assert result.switch_drops > 0
        assert result.conservation

    def test_below_the_threshold_nothing_is_lost(self):
        result = run_congestion_scenario(0.5, fc=False, run_length="20ms")
        assert result.switch_drops == 0
        assert result.goodput["A"] == pytest.approx(0.9, abs=0.02)

    def test_tail_drop_is_shared_by_every_hot_flow(self):
        result = run_congestion_scenario(1.0, fc=False, run_length="50ms")
        hot = [result.flow_loss[(s, "A")] for s in ("X", "Y", "Z")]
        for loss in hot:
            assert loss == pytest.approx(0.8 / 1.8, abs=0.04)
        assert max(hot) - min(hot) < 0.04
        assert result.flow_loss[("Y", "B")] == 0.0
        assert result.flow_loss[("Z", "C")] == 0.0

    def test_flow_control_spreads_congestion(self):
        result = run_congestion_scenario(1.0, fc=True, run_length="20ms")
        assert result.switch_drops == 0
        assert result.flow_share[("Y", "B")] == pytest.approx(0.7 / 1.8, abs=0.02)
        assert result.flow_share[("Z", "C")] == pytest.approx(0.5 / 1.8, abs=0.02)
        assert result.conservation

    def test_dead_receiver_blocks_everyone(self):
        result = run_congestion_scenario(1.0, fc=True, sink_a="dead", run_length="20ms")
        assert result.goodput["B"] < 0.05
        assert result.goodput["C"] < 0.05
        assert result.switch_drops == 0

    def test_shared_fifo_suffers_head_of_line_blocking(self):
        results = hol_comparison(run_length="20ms")
        # Z sends half its frames to the hot receiver, so its FIFO head blocks most often
        voq = results["voq"].flow_share[("Z", "C")]
        fifo = results["shared_fifo"].flow_share[("Z", "C")]
        assert voq == pytest.approx(0.5, abs=0.005)
        assert fifo < voq - 0.05

    @pytest.mark.slow
    def test_loss_onset(self):
        assert loss_onset() == pytest.approx(1 / 1.8, abs=0.01)

    def test_loss_onset_needs_a_bracket(self):
        with pytest.raises(ConfigurationError):
            loss_onset(low=0.8, high=0.5)


@pytest.mark.integration
class TestQosExperiments:
    def test_wrr_shares_follow_weights(self):
        point = run_qos_scenario("wrr", [0.5] * 4, run_length="20ms")
        assert point.expected == pytest.approx([0.1, 0.2, 0.3, 0.4])
        assert point.max_deviation <= 0.02
        assert sum(point.shares) == pytest.approx(1.0, abs=0.02)

    def test_strict_priority_starves_the_lowest_class(self):
        point = run_qos_scenario("strict", [0.4, 0.4, 0.4], run_length="20ms")
        assert point.expected == pytest.approx([0.2, 0.4, 0.4])
        assert point.max_deviation <= 0.02

    def test_underloaded_link_is_work_conserving(self):
        point = run_qos_scenario("wrr", [0.1, 0.1, 0.1, 0.1], run_length="10ms")
        assert point.max_deviation <= 0.01


@pytest.mark.integration
class TestVlanExperiments:
    def test_containment_partitioning_and_storms(self):
        report = run_vlan_suite(layouts=("disjoint",), vlan2_loads=(0.1, 1.0), run_length="20ms")
        assert report.violations == {"disjoint": 0}
        assert report.ingress_rejects == {"disjoint": 0}
        assert report.partition_isolated
        assert report.storm == {False: True, True: False}

    def test_ingress_rejects_are_not_boundary_violations(self):
        # tx10 tags its frames for VLAN 20, which its port does not carry
        params = {"layout": "disjoint", "sources.0.vlan": 20, "run_length": "5ms"}
        sim = execute(get_scenario("vlan_suite", params))
        assert ingress_rejects(sim) > 0
        assert vlan_violations(sim) == 0
        assert sim.listeners["r20b"].by_flow[1] == 0

    @pytest.mark.slow
    def test_no_violations_over_a_million_frames(self):
        report = run_vlan_suite(vlan2_loads=(), load=0.9, frame_size=64, run_length="400ms")
        assert report.violations == {"single": 0, "disjoint": 0, "overlapping": 0}
        assert all(n >= 1_000_000 for n in report.frames.values())

    def test_single_layout_reports_no_violations(self):
        report = run_vlan_suite(layouts=("single",), vlan2_loads=(), run_length="5ms")
        assert report.violations == {"single": 0}
        assert report.frames["single"] > 0


@pytest.mark.integration
class TestFabricExperiments:
    def test_fabric_limit_separates_loss_regimes(self):
        idle, below, above = saturation_sweep([0.1, 0.6, 0.7], fabric=0.66)
        assert idle.loss == 0.0
        assert below.loss == 0.0
        assert below.mean_latency_ns < 2 * idle.mean_latency_ns
        assert above.loss > 0.0
        assert above.mean_latency_ns >= 10 * idle.mean_latency_ns

    def test_full_fabric_is_lossless_near_line_rate(self):
        (point,) = saturation_sweep([0.95], fabric=1.0)
        assert point.loss < 1e-6

    def test_overload_loss_grows_with_load(self):
        low, high = saturation_sweep([0.2, 0.9], fabric=0.66, hosts=4)
        assert low.loss == 0.0
        assert high.loss > 0.1
        assert high.mean_latency_ns > low.mean_latency_ns

    def test_short_aging_time_causes_floods(self):
        floods = aging_study(("300s", "25ms"))
        assert floods["300s"] == 0
        assert floods["25ms"] > 20

    def test_trunk_keeps_connections_in_order(self):
        balance = trunk_balance(run_length="10ms")
        assert balance.reorders == 0
        assert balance.delivered > 0
        assert len(balance.census) == 2
        assert sum(balance.census.values()) >= 64


@pytest.mark.integration
@pytest.mark.slow
class TestEventBuildingShaping:
    def test_credit_limit_prevents_overflow(self):
        unlimited, shaped = eb_shaping_comparison((None, 4))
        assert unlimited.frames_lost > 0
        assert shaped.frames_lost == 0
        assert shaped.max_outstanding <= 4
        assert shaped.built > 0
