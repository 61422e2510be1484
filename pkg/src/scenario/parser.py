"""
Scenario document parsing and validation

``parse`` turns YAML text into a validated ScenarioDoc or raises a
ValidationError listing every problem with its location and line number.
"""
from collections import deque
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

import yaml
from pydantic import ValidationError as PydanticValidationError

from src.scenario.document import DATAFLOW_ROLES, ScenarioDoc
from src.utils.error_handler import ValidationError

Location = Tuple[Any, ...]
DEFAULT_VLAN = 1


# ------------------------------------------------------------------ YAML lines

def _line_index(node: yaml.Node, path: Location = (), index: Optional[Dict] = None) -> Dict[Location, int]:
    """Map every key path of a composed YAML tree to its 1-based line"""
    if index is None:
        index = {}
    index[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            child = path + (key.value,)
            _line_index(value, child, index)
            # a key reports its own line, not the line its value starts on
            index[child] = key.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _line_index(item, path + (i,), index)
    return index


def _line_of(index: Dict[Location, int], loc: Location) -> Optional[int]:
    loc = tuple(loc)
    while loc:
        if loc in index:
            return index[loc]
        loc = loc[:-1]
    return index.get(())


def _problem(loc: Location, message: str, lines: Dict[Location, int]) -> Dict[str, Any]:
    return {
        "location": ".".join(str(p) for p in loc),
        "line": _line_of(lines, loc),
        "message": message,
    }


# ------------------------------------------------------------------- overrides

def apply_overrides(raw: Dict[str, Any], params: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    """
    Set scalars by dotted path, e.g. ``switches.0.fc_propagation=false``

    Values are parsed as YAML scalars. Raises ValidationError for paths that do
    not exist in the document.
    """
    errors = []
    for key, text in (params or {}).items():
        parts = key.split(".")
        target: Any = raw
        try:
            for part in parts[:-1]:
                target = target[int(part)] if isinstance(target, list) else target[part]
            last = parts[-1]
            value = yaml.safe_load(text) if isinstance(text, str) else text
            if isinstance(target, list):
                target[int(last)] = value
            elif isinstance(target, dict):
                target[last] = value
            else:
                raise KeyError(last)
        except (KeyError, IndexError, ValueError, TypeError):
            errors.append({"location": key, "line": None, "message": "no such parameter"})
    if errors:
        raise ValidationError("Invalid parameter override", errors=errors)
    return raw


# ----------------------------------------------------------------- references

def split_endpoint(endpoint: str) -> Tuple[Optional[str], str]:
    """'sw:port' -> ('sw', 'port'); 'node' -> (None, 'node')"""
    if ":" in endpoint:
        switch, port = endpoint.split(":", 1)
        return switch, port
    return None, endpoint


def port_memberships(doc: ScenarioDoc) -> Dict[Tuple[str, str], Dict[str, Any]]:
    """
    VLAN membership per (switch, logical port)

    Ports named by no VLAN entry are untagged members of VLAN 1. The pvid is the
    untagged VLAN, else the lowest tagged one.
    """
    trunk_of = {(t.switch, p): t.name for t in doc.trunks for p in t.ports}
    logical: Set[Tuple[str, str]] = set()
    for link in doc.links:
        for end in (link.a, link.b):
            switch, port = split_endpoint(end)
            if switch is not None:
                logical.add((switch, trunk_of.get((switch, port), port)))
    members: Dict[Tuple[str, str], Dict[str, Any]] = {}
    for vlan in doc.vlans:
        for port in vlan.untagged:
            members.setdefault((vlan.switch, port), {"untagged": [], "tagged": []})["untagged"].append(vlan.id)
        for port in vlan.tagged:
            members.setdefault((vlan.switch, port), {"untagged": [], "tagged": []})["tagged"].append(vlan.id)
    for key in logical:
        entry = members.setdefault(key, {"untagged": [DEFAULT_VLAN], "tagged": []})
        entry["pvid"] = entry["untagged"][0] if entry["untagged"] else min(entry["tagged"])
        entry["vlans"] = set(entry["untagged"]) | set(entry["tagged"])
    return {k: v for k, v in members.items() if k in logical}


def check_references(doc: ScenarioDoc) -> List[Tuple[Location, str]]:
    """Dangling references, duplicate names and structural rules"""
    problems: List[Tuple[Location, str]] = []
    switches = {s.name for s in doc.switches}
    nodes = {n.name: n for n in doc.nodes}

    for kind, names in (("switches", [s.name for s in doc.switches]), ("nodes", [n.name for n in doc.nodes])):
        seen: Set[str] = set()
        for i, name in enumerate(names):
            if name in seen:
                problems.append(((kind, i, "name"), f"duplicate name {name!r}"))
            seen.add(name)
    for i, node in enumerate(doc.nodes):
        if node.name in switches:
            problems.append((("nodes", i, "name"), f"{node.name!r} is also a switch name"))
        if ":" in node.name:
            problems.append((("nodes", i, "name"), "node names cannot contain ':'"))

    ports: Dict[str, Set[str]] = {s: set() for s in switches}
    linked: Set[str] = set()
    for i, link in enumerate(doc.links):
        for side in ("a", "b"):
            switch, name = split_endpoint(getattr(link, side))
            if switch is not None:
                if switch not in switches:
                    problems.append((("links", i, side), f"undefined switch {switch!r}"))
                elif name in ports[switch]:
                    problems.append((("links", i, side), f"port {switch}:{name} is used twice"))
                else:
                    ports[switch].add(name)
            elif name not in nodes:
                problems.append((("links", i, side), f"undefined node {name!r}"))
            elif name in linked:
                problems.append((("links", i, side), f"node {name!r} has more than one link"))
            else:
                linked.add(name)
    for i, node in enumerate(doc.nodes):
        if node.name not in linked:
            problems.append((("nodes", i, "name"), f"node {node.name!r} is not linked"))

    trunk_members: Dict[Tuple[str, str], str] = {}
    trunk_names: Dict[str, Set[str]] = {s: set() for s in switches}
    for i, trunk in enumerate(doc.trunks):
        if trunk.switch not in switches:
            problems.append((("trunks", i, "switch"), f"undefined switch {trunk.switch!r}"))
            continue
        if trunk.name in ports[trunk.switch]:
            problems.append((("trunks", i, "name"), f"trunk name {trunk.name!r} clashes with a port"))
        trunk_names[trunk.switch].add(trunk.name)
        for j, port in enumerate(trunk.ports):
            if port not in ports[trunk.switch]:
                problems.append((("trunks", i, "ports", j), f"undefined port {trunk.switch}:{port}"))
            elif (trunk.switch, port) in trunk_members:
                problems.append((("trunks", i, "ports", j), f"port {port} is already in a trunk"))
            trunk_members[(trunk.switch, port)] = trunk.name
        for j, port in enumerate(trunk.down):
            if port not in trunk.ports:
                problems.append((("trunks", i, "down", j), f"{port} is not a member of {trunk.name}"))

    defined_vlans = {DEFAULT_VLAN}
    untagged_on: Dict[Tuple[str, str], int] = {}
    for i, vlan in enumerate(doc.vlans):
        defined_vlans.add(vlan.id)
        if vlan.switch not in switches:
            problems.append((("vlans", i, "switch"), f"undefined switch {vlan.switch!r}"))
            continue
        valid = (ports[vlan.switch] - {p for (s, p) in trunk_members if s == vlan.switch}) | trunk_names[vlan.switch]
        for field_name in ("untagged", "tagged"):
            for j, port in enumerate(getattr(vlan, field_name)):
                if port not in valid:
                    problems.append((("vlans", i, field_name, j), f"undefined port {vlan.switch}:{port}"))
        for j, port in enumerate(vlan.untagged):
            previous = untagged_on.setdefault((vlan.switch, port), vlan.id)
            if previous != vlan.id:
                problems.append((("vlans", i, "untagged", j), f"port {port} is untagged in VLAN {previous} already"))

    for i, source in enumerate(doc.sources):
        node = nodes.get(source.node)
        if node is None:
            problems.append((("sources", i, "node"), f"undefined node {source.node!r}"))
        elif node.role != "host":
            problems.append((("sources", i, "node"), f"sources run on host nodes, {source.node!r} is a {node.role}"))
        for j, dest in enumerate(source.destinations):
            if dest.node is not None and dest.node not in nodes:
                problems.append((("sources", i, "destinations", j, "node"), f"undefined node {dest.node!r}"))
        if source.vlan is not None and source.vlan not in defined_vlans:
            problems.append((("sources", i, "vlan"), f"VLAN {source.vlan} is not defined"))

    census = doc.census()
    uses_dataflow = any(census.get(role) for role in DATAFLOW_ROLES)
    if uses_dataflow and doc.dataflow is None:
        problems.append((("dataflow",), "DataFlow nodes need a dataflow section"))
    if doc.dataflow is not None:
        for role, exact in (("rob", False), ("l2pu", False), ("sfi", False), ("prob", True), ("l2sv", True), ("dfm", True)):
            n = census.get(role, 0)
            if n == 0 or (exact and n != 1):
                expected = "exactly one" if exact else "at least one"
                problems.append((("dataflow",), f"needs {expected} {role} node, found {n}"))
        if doc.dataflow.roi_min_robs > doc.dataflow.roi_max_robs:
            problems.append((("dataflow", "roi_min_robs"), "roi_min_robs exceeds roi_max_robs"))
    return problems


def check_vlan_connectivity(doc: ScenarioDoc) -> List[Tuple[Location, str]]:
    """Every VLAN's member nodes must reach each other over member ports"""
    trunk_of = {(t.switch, p): t.name for t in doc.trunks for p in t.ports}
    members = port_memberships(doc)

    def member(endpoint: str, vid: int) -> bool:
        switch, port = split_endpoint(endpoint)
        if switch is None:
            return True
        entry = members.get((switch, trunk_of.get((switch, port), port)))
        return entry is not None and vid in entry["vlans"]

    def vertex(endpoint: str) -> str:
        switch, name = split_endpoint(endpoint)
        return f"switch:{switch}" if switch is not None else name

    problems: List[Tuple[Location, str]] = []
    vids = sorted({v for entry in members.values() for v in entry["vlans"]})
    for vid in vids:
        graph: Dict[str, Set[str]] = {}
        vlan_nodes: List[str] = []
        for link in doc.links:
            if not (member(link.a, vid) and member(link.b, vid)):
                continue
            a, b = vertex(link.a), vertex(link.b)
            graph.setdefault(a, set()).add(b)
            graph.setdefault(b, set()).add(a)
            vlan_nodes.extend(v for v in (a, b) if not v.startswith("switch:"))
        if len(vlan_nodes) < 2:
            continue
        reached = {vlan_nodes[0]}
        queue = deque([vlan_nodes[0]])
        while queue:
            for nxt in graph.get(queue.popleft(), ()):
                if nxt not in reached:
                    reached.add(nxt)
                    queue.append(nxt)
        unreachable = sorted(set(vlan_nodes) - reached)
        if unreachable:
            problems.append((
                ("vlans",),
                f"VLAN {vid} is not connected: {', '.join(unreachable)} unreachable from {vlan_nodes[0]}",
            ))
    return problems


# ----------------------------------------------------------------- entry points

def _pydantic_problems(exc: PydanticValidationError, lines: Dict[Location, int]) -> List[Dict[str, Any]]:
    problems = []
    for err in exc.errors():
        message = err.get("msg", "invalid value")
        if err.get("type") == "extra_forbidden":
            message = "unknown key"
        problems.append(_problem(tuple(err.get("loc", ())), message, lines))
    return problems


def parse(text: str, params: Optional[Dict[str, str]] = None) -> ScenarioDoc:
    """
    Parse and validate a scenario document

    Args:
        text: YAML document
        params: Scalar overrides by dotted path

    Returns:
        Validated ScenarioDoc

    Raises:
        ValidationError: With one entry per problem (location, line, message)
    """
    try:
        root = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ValidationError(
            "Scenario is not valid YAML",
            errors=[{"location": "", "line": mark.line + 1 if mark else None, "message": str(e)}],
        ) from e
    if not isinstance(raw, dict) or root is None:
        raise ValidationError(
            "Scenario must be a mapping",
            errors=[{"location": "", "line": 1, "message": "expected a mapping at the top level"}],
        )
    return from_raw(raw, params, _line_index(root))


def from_raw(
    raw: Dict[str, Any],
    params: Optional[Dict[str, Any]] = None,
    lines: Optional[Dict[Location, int]] = None,
) -> ScenarioDoc:
    """Typed and checked document from plain data (parsed YAML or a catalog builder)"""
    lines = lines or {}
    raw = apply_overrides(raw, params)
    try:
        doc = ScenarioDoc.model_validate(raw)
    except PydanticValidationError as e:
        raise ValidationError(
            f"Scenario {raw.get('name', '?')!r} failed validation", errors=_pydantic_problems(e, lines)
        ) from e
    return validate(doc, lines)


def validate(doc: ScenarioDoc, lines: Optional[Dict[Location, int]] = None) -> ScenarioDoc:
    """Reference and connectivity checks on an already typed document"""
    lines = lines or {}
    problems = check_references(doc)
    if not problems:
        problems = check_vlan_connectivity(doc)
    if problems:
        raise ValidationError(
            f"Scenario {doc.name!r} failed validation",
            errors=[_problem(loc, message, lines) for loc, message in problems],
        )
    return doc


def load_file(path: Path, params: Optional[Dict[str, str]] = None) -> ScenarioDoc:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError(
            f"Cannot read scenario {path}",
            errors=[{"location": str(path), "line": None, "message": str(e)}],
        ) from e
    return parse(text, params)


def render(doc: ScenarioDoc) -> str:
    """YAML text that parses back to an equal document"""
    data = doc.model_dump(mode="json", exclude_defaults=True)
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=False)


def parse_params(pairs: Iterable[str]) -> Dict[str, str]:
    """['a.b=1', ...] -> {'a.b': '1'}"""
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ValidationError(
                "Invalid parameter",
                errors=[{"location": pair, "line": None, "message": "expected key=value"}],
            )
        params[key.strip()] = value.strip()
    return params
