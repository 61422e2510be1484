"""
Tests for scenario documents, the builder, the catalog and the runner
"""
import csv
from pathlib import Path

import pytest

from src.ether.frame import FE_BPS, GE_BPS
from src.scenario.builder import build, node_mac
from src.scenario.catalog import CATALOG, get_entry, get_scenario
from src.scenario.document import parse_duration, parse_speed
from src.scenario.parser import (
    from_raw,
    load_file,
    parse,
    parse_params,
    port_memberships,
    render,
)
from src.scenario.runner import EXIT_FATAL, EXIT_OK, output_dir_for, run_scenario, run_sweep
from src.sim_core.engine import MS, US
from src.utils.error_handler import ExportError, ModelError, UnknownScenarioError, ValidationError

PROJECT_ROOT = Path(__file__).parent.parent


@pytest.fixture
def p2p_path(test_data_dir):
    return test_data_dir / "point_to_point.yaml"


def problems(exc_info):
    return exc_info.value.errors


def two_switches(tag_uplink):
    vlans = [
        {"id": 10, "switch": "s1", "untagged": ["h1"]},
        {"id": 10, "switch": "s2", "untagged": ["h2"]},
    ]
    if tag_uplink:
        for vlan in vlans:
            vlan["tagged"] = ["up"]
    return {
        "name": "split",
        "run_length": "1ms",
        "switches": [{"name": "s1"}, {"name": "s2"}],
        "nodes": [{"name": "h1"}, {"name": "h2"}],
        "links": [
            {"a": "h1", "b": "s1:h1"},
            {"a": "h2", "b": "s2:h2"},
            {"a": "s1:up", "b": "s2:up"},
        ],
        "vlans": vlans,
    }


class TestUnits:
    def test_durations(self):
        assert parse_duration("5us") == 5 * US
        assert parse_duration("200 ms") == 200 * MS
        assert parse_duration("1.5us") == 1500
        assert parse_duration(42) == 42

    @pytest.mark.parametrize("value", ["5 minutes", "ms", -1, True])
    def test_invalid_durations(self, value):
        with pytest.raises(ValueError):
            parse_duration(value)

    def test_speeds(self):
        assert parse_speed("ge") == GE_BPS
        assert parse_speed("FE") == FE_BPS
        assert parse_speed(2_500_000_000) == 2_500_000_000
        with pytest.raises(ValueError):
            parse_speed("40GE")


class TestParser:
    def test_bundled_document(self, p2p_path):
        doc = load_file(p2p_path)
        assert doc.name == "point_to_point"
        assert doc.run_length == 10 * MS
        assert doc.warmup_ns == 1 * MS
        assert doc.links[0].speed == GE_BPS
        assert doc.sources[0].start == 50 * US

    def test_unknown_key_reports_its_line(self):
        with pytest.raises(ValidationError) as exc:
            parse("name: bad\nrun_length: 1ms\ncolour: blue\n")
        assert problems(exc) == [{"location": "colour", "line": 3, "message": "unknown key"}]

    def test_invalid_value_reports_its_line(self):
        with pytest.raises(ValidationError) as exc:
            parse("name: bad\nrun_length: 5 minutes\n")
        assert problems(exc)[0]["location"] == "run_length"
        assert problems(exc)[0]["line"] == 2

    def test_undefined_node_reports_its_line(self):
        text = (
            "name: bad\n"
            "run_length: 1ms\n"
            "switches:\n"
            "  - name: sw\n"
            "nodes:\n"
            "  - name: h1\n"
            "links:\n"
            "  - a: h1\n"
            "    b: 'sw:p1'\n"
            "  - a: h9\n"
            "    b: 'sw:p2'\n"
        )
        with pytest.raises(ValidationError) as exc:
            parse(text)
        assert problems(exc) == [{"location": "links.1.a", "line": 10, "message": "undefined node 'h9'"}]
        assert "line 10: links.1.a" in exc.value.describe()

    def test_every_problem_is_reported(self):
        raw = {
            "name": "bad",
            "run_length": "1ms",
            "nodes": [{"name": "h1"}, {"name": "h1"}, {"name": "lonely"}],
            "links": [{"a": "h1", "b": "sw:p1"}],
        }
        with pytest.raises(ValidationError) as exc:
            from_raw(raw)
        messages = [p["message"] for p in problems(exc)]
        assert "duplicate name 'h1'" in messages
        assert "undefined switch 'sw'" in messages
        assert "node 'lonely' is not linked" in messages

    def test_not_yaml(self):
        with pytest.raises(ValidationError) as exc:
            parse("name: [unclosed\n")
        assert exc.value.message == "Scenario is not valid YAML"

    def test_top_level_must_be_a_mapping(self):
        with pytest.raises(ValidationError) as exc:
            parse("- a\n- b\n")
        assert problems(exc)[0]["line"] == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            load_file(tmp_path / "absent.yaml")

    def test_overrides(self, p2p_path):
        doc = load_file(p2p_path, {"sources.0.offered_load": "0.25", "switches.0.fc_propagation": "false"})
        assert doc.sources[0].offered_load == 0.25
        assert doc.switches[0].fc_propagation is False

    def test_override_of_a_missing_path(self, p2p_path):
        with pytest.raises(ValidationError) as exc:
            load_file(p2p_path, {"sources.3.offered_load": "0.25"})
        assert problems(exc)[0] == {"location": "sources.3.offered_load", "line": None, "message": "no such parameter"}

    def test_seed_precedence(self, p2p_path, monkeypatch):
        doc = load_file(p2p_path)
        assert doc.run_seed() == 1
        assert doc.run_seed(8) == 8
        monkeypatch.setenv("DEFAULT_SEED", "42")
        assert parse("name: s\nrun_length: 1ms\n").run_seed() == 42

    def test_render_parses_back(self, p2p_path):
        doc = load_file(p2p_path)
        assert parse(render(doc)) == doc

    def test_parse_params(self):
        assert parse_params(["a.b=1", " c = x "]) == {"a.b": "1", "c": "x"}
        with pytest.raises(ValidationError):
            parse_params(["novalue"])


class TestVlanChecks:
    def test_disconnected_vlan_is_rejected(self):
        with pytest.raises(ValidationError) as exc:
            from_raw(two_switches(tag_uplink=False))
        assert problems(exc)[0]["message"] == "VLAN 10 is not connected: h2 unreachable from h1"

    def test_tagged_uplink_connects_the_vlan(self):
        doc = from_raw(two_switches(tag_uplink=True))
        members = port_memberships(doc)
        assert members[("s1", "up")]["tagged"] == [10]
        assert members[("s1", "up")]["pvid"] == 10
        assert members[("s1", "h1")]["pvid"] == 10

    def test_unnamed_ports_default_to_vlan_one(self, p2p_path):
        members = port_memberships(load_file(p2p_path))
        assert members[("sw", "p1")]["pvid"] == 1
        assert members[("sw", "p1")]["vlans"] == {1}

    def test_trunk_ports_share_membership(self, test_data_dir):
        members = port_memberships(load_file(test_data_dir / "vlan_trunk.yaml"))
        assert members[("left", "up")]["vlans"] == {10, 20}
        assert ("left", "t0") not in members


class TestBuilder:
    def test_node_addresses(self):
        assert str(node_mac(1)) == "02:00:00:00:00:01"
        assert str(node_mac(258)) == "02:00:00:00:01:02"

    def test_point_to_point(self, p2p_path):
        sim = build(load_file(p2p_path))
        assert set(sim.hosts) == {"tx", "rx"}
        assert sim.hosts["tx"].mac == node_mac(1)
        assert sim.flow_of("tx", "rx") == 1
        assert sim.flow_names[1] == "tx>rx"
        assert sim.link_speed("rx") == GE_BPS
        assert set(sim.listeners) == {"tx", "rx"}

    def test_missing_flow_ids_are_assigned(self):
        raw = {
            "name": "auto",
            "run_length": "1ms",
            "switches": [{"name": "sw"}],
            "nodes": [{"name": "a"}, {"name": "b"}, {"name": "c"}],
            "links": [{"a": n, "b": f"sw:{n}"} for n in ("a", "b", "c")],
            "sources": [{
                "name": "a", "node": "a",
                "destinations": [{"node": "b", "flow_id": 5}, {"node": "c"}],
            }],
        }
        sim = build(from_raw(raw))
        assert sim.flows == {("a", "b"): 5, ("a", "c"): 6}

    def test_trunks_are_built(self, test_data_dir):
        sim = build(load_file(test_data_dir / "vlan_trunk.yaml"))
        assert "up" in sim.switches["left"].trunks


class TestCatalog:
    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_every_entry_builds_a_valid_document(self, name):
        doc = get_scenario(name)
        assert doc.name == name
        assert get_entry(name).golden.name == get_entry(name).report

    def test_unknown_name(self):
        with pytest.raises(UnknownScenarioError) as exc:
            get_scenario("warp_drive")
        assert "fc_congestion" in exc.value.valid_names

    def test_two_stage_census(self):
        doc = get_scenario("fig1_scaled")
        assert doc.census() == {"rob": 160, "prob": 1, "l2sv": 1, "dfm": 1, "l2pu": 8, "sfi": 4}
        assert len(doc.switches) == 11
        rob_link = next(link for link in doc.links if link.a == "rob000")
        assert rob_link.speed == FE_BPS
        uplink = next(link for link in doc.links if link.a == "conc0:up")
        assert uplink.speed == GE_BPS

    def test_knobs_and_overrides(self):
        entry = get_entry("fc_congestion")
        knobs, overrides = entry.split_params({"alpha": "0.7", "switches.0.egress_buffer_bytes": "9108"})
        assert knobs["alpha"] == 0.7 and knobs["fc"] is True
        assert overrides == {"switches.0.egress_buffer_bytes": "9108"}
        doc = get_scenario("fc_congestion", {"fc": "false", "switches.0.egress_buffer_bytes": "9108"})
        assert doc.switches[0].egress_buffer_bytes == 9108
        assert doc.switches[0].fc_propagation is False

    def test_bad_knob_value_is_a_validation_error(self):
        with pytest.raises(ValidationError):
            get_scenario("fc_congestion", {"run_length": "soon"})


def flow_rows(path):
    with open(path, newline="") as f:
        return {row["flow_id"]: row for row in csv.DictReader(f)}


@pytest.mark.integration
class TestRunner:
    def test_reports_are_written(self, p2p_path, tmp_path):
        doc = load_file(p2p_path, {"run_length": "2ms"})
        outcome = run_scenario(doc, tmp_path / "out")
        assert outcome.exit_code == EXIT_OK
        assert outcome.seed == 1
        assert set(outcome.reports) == {"flows", "latency", "series", "events", "counters"}
        assert int(flow_rows(outcome.reports["flows"])["1"]["delivered"]) > 0
        assert outcome.events_processed > 0

    def test_default_output_directory(self, p2p_path, tmp_path):
        doc = load_file(p2p_path)
        assert output_dir_for(doc) == tmp_path / "results" / "point_to_point"
        assert output_dir_for(doc, tmp_path / "x") == tmp_path / "x"

    def test_reruns_are_byte_identical(self, p2p_path, tmp_path):
        doc = load_file(p2p_path, {"run_length": "2ms", "sources.0.pattern": "poisson"})
        first = run_scenario(doc, tmp_path / "a", seed=9)
        second = run_scenario(doc, tmp_path / "b", seed=9)
        for name in first.reports:
            assert first.reports[name].read_bytes() == second.reports[name].read_bytes()

    def test_model_fault_exits_fatal(self, p2p_path, tmp_path, mocker):
        mocker.patch("src.scenario.runner.execute", side_effect=ModelError("queue underflow", actor="sw"))
        outcome = run_scenario(load_file(p2p_path), tmp_path)
        assert outcome.exit_code == EXIT_FATAL
        assert outcome.error == "queue underflow"
        assert outcome.reports == {}

    def test_export_failure_exits_fatal(self, p2p_path, tmp_path, mocker):
        mocker.patch("src.scenario.runner.export_csv", side_effect=ExportError("disk full", path="x"))
        outcome = run_scenario(load_file(p2p_path, {"run_length": "1ms"}), tmp_path)
        assert outcome.exit_code == EXIT_FATAL
        assert outcome.counters

    def test_sweep_writes_one_directory_per_value(self, p2p_path, tmp_path):
        doc = load_file(p2p_path, {"run_length": "2ms"})
        outcomes = run_sweep(doc, "sources.0.offered_load", [0.1, 0.4], tmp_path, workers=1)
        assert [o.exit_code for o in outcomes] == [EXIT_OK, EXIT_OK]
        low = flow_rows(tmp_path / "sources.0.offered_load=0.1" / "flows.csv")["1"]
        high = flow_rows(tmp_path / "sources.0.offered_load=0.4" / "flows.csv")["1"]
        assert int(high["sent"]) > int(low["sent"])

    def test_probe_procedure_writes_its_table(self, tmp_path):
        entry = get_entry("mac_probe")
        params = {"count": 512, "patterns": ["low_linear"]}
        outcome = entry.runner(params)(entry.scenario(params), tmp_path, None)
        assert outcome.exit_code == EXIT_OK
        assert outcome.counters == {"probe.low_linear.learned_count": 512}
        with open(outcome.reports["probe"], newline="") as f:
            rows = list(csv.reader(f))
        assert len(rows) == 2


def short_params(name):
    """Knobs that keep a canned scenario to a few milliseconds of traffic"""
    defaults = get_entry(name).defaults
    if "run_length" in defaults:
        return {"run_length": "5ms"}
    if "count" in defaults:
        return {"count": 256}
    return {}


@pytest.mark.integration
class TestCatalogRuns:
    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_canned_scenario_reruns_are_byte_identical(self, name, tmp_path):
        entry = get_entry(name)
        params = short_params(name)
        doc = entry.scenario(params)
        first = entry.runner(params)(doc, tmp_path / "a", 3)
        second = entry.runner(params)(doc, tmp_path / "b", 3)
        assert first.exit_code == EXIT_OK
        assert set(first.reports) == set(second.reports)
        for report, path in first.reports.items():
            assert path.read_bytes() == second.reports[report].read_bytes()

    @pytest.mark.slow
    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_canned_scenario_matches_its_golden_report(self, name, tmp_path):
        entry = get_entry(name)
        golden = PROJECT_ROOT / entry.golden
        if not golden.exists():
            pytest.skip(f"no golden report for {name}; run scripts/regenerate_goldens.py")
        outcome = entry.runner()(entry.scenario(), tmp_path, None)
        assert outcome.exit_code == EXIT_OK
        assert (tmp_path / entry.report).read_bytes() == golden.read_bytes()
