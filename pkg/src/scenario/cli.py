"""
Command line: run, list, validate and render scenarios

    fabricsim run <scenario|file> [--seed N] [--out DIR] [--param k=v ...] [--sweep k=v1,v2]
    fabricsim list
    fabricsim validate <file> [--param k=v ...]
    fabricsim render <scenario> [--param k=v ...]

Exit codes: 0 success, 1 invalid input, 2 fatal model error.
"""
import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from src.config.settings import get_settings
from src.scenario.catalog import CATALOG, get_entry, list_scenarios
from src.scenario.document import ScenarioDoc
from src.scenario.parser import load_file, parse_params, render
from src.scenario.runner import (
    EXIT_FATAL,
    EXIT_INVALID,
    EXIT_OK,
    Procedure,
    RunOutcome,
    output_dir_for,
    run_points,
    run_scenario,
    sweep_dir,
    with_params,
)
from src.utils.error_handler import (
    ConfigurationError,
    ExportError,
    ModelError,
    UnknownScenarioError,
    ValidationError,
    get_user_friendly_message,
    handle_error,
)
from src.utils.logger import get_logger

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fabricsim",
        description="Switched Ethernet fabric and DataFlow simulator",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a canned scenario or a scenario file")
    run.add_argument("target", help="catalog name or path to a YAML scenario")
    run.add_argument("--seed", type=int, default=None, help="run seed (default: the document's)")
    run.add_argument("--out", type=Path, default=None, help="report directory")
    run.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                     help="catalog knob or dotted-path override; repeatable")
    run.add_argument("--sweep", default=None, metavar="KEY=V1,V2,...",
                     help="run one simulation per value")
    run.add_argument("--workers", type=int, default=None, help="parallel sweep workers")

    commands.add_parser("list", help="list canned scenarios")

    validate = commands.add_parser("validate", help="check a scenario file")
    validate.add_argument("file", type=Path)
    validate.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")

    show = commands.add_parser("render", help="print a canned scenario as YAML")
    show.add_argument("scenario")
    show.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    return parser


def parse_sweep(text: str) -> Tuple[str, List[str]]:
    key, sep, values = text.partition("=")
    items = [v.strip() for v in values.split(",") if v.strip()]
    if not sep or not key.strip() or not items:
        raise ValidationError(
            "Invalid sweep",
            errors=[{"location": text, "line": None, "message": "expected key=v1,v2,..."}],
        )
    return key.strip(), items


def is_catalog_name(target: str) -> bool:
    return target in CATALOG and not Path(target).suffix


def resolve(target: str, params: Dict[str, Any]) -> Tuple[ScenarioDoc, Procedure]:
    """Document and run procedure for a catalog name or a file path"""
    if is_catalog_name(target):
        entry = get_entry(target)
        return entry.scenario(params), entry.runner(params)
    path = Path(target)
    if not path.suffix and not path.exists():
        raise UnknownScenarioError(target, sorted(CATALOG))
    return load_file(path, params), run_scenario


def sweep_points(
    target: str,
    params: Dict[str, Any],
    key: str,
    values: Sequence[str],
    out_dir: Optional[Path],
) -> List[Tuple[ScenarioDoc, Path, Procedure]]:
    doc, procedure = resolve(target, params)
    base = output_dir_for(doc, out_dir)
    points = []
    for value in values:
        if is_catalog_name(target) and key in get_entry(target).defaults:
            point_doc, point_procedure = resolve(target, {**params, key: value})
        else:
            point_doc, point_procedure = with_params(doc, {key: value}), procedure
        points.append((point_doc, sweep_dir(base, key, value), point_procedure))
    return points


def report(outcome: RunOutcome) -> None:
    if outcome.exit_code == EXIT_OK:
        print(f"{outcome.scenario} (seed {outcome.seed}): {outcome.events_processed} events")
        for name, path in sorted(outcome.reports.items()):
            print(f"  {name}: {path}")
    else:
        print(f"{outcome.scenario} (seed {outcome.seed}) failed: {outcome.error}", file=sys.stderr)


def cmd_run(args: argparse.Namespace) -> int:
    params = parse_params(args.param)
    if args.sweep:
        key, values = parse_sweep(args.sweep)
        outcomes = run_points(sweep_points(args.target, params, key, values, args.out), args.seed, args.workers)
    else:
        doc, procedure = resolve(args.target, params)
        outcomes = [procedure(doc, args.out, args.seed)]
    for outcome in outcomes:
        report(outcome)
    return max((o.exit_code for o in outcomes), default=EXIT_OK)


def cmd_list(_args: argparse.Namespace) -> int:
    width = max(len(e.name) for e in list_scenarios())
    for entry in list_scenarios():
        print(f"{entry.name:<{width}}  {entry.measures:<36}  {entry.golden}")
        print(f"{'':<{width}}  {entry.description}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    doc = load_file(args.file, parse_params(args.param))
    census = ", ".join(f"{role}={n}" for role, n in sorted(doc.census().items()))
    print(f"{args.file}: valid ({len(doc.switches)} switches, {len(doc.nodes)} nodes: {census})")
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    entry = get_entry(args.scenario)
    print(render(entry.scenario(parse_params(args.param))), end="")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "list": cmd_list, "validate": cmd_validate, "render": cmd_render}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        get_settings()
        return COMMANDS[args.command](args)
    except (ValidationError, UnknownScenarioError, ConfigurationError) as e:
        print(get_user_friendly_message(e), file=sys.stderr)
        return EXIT_INVALID
    except (ModelError, ExportError) as e:
        logger.error(get_user_friendly_message(e), extra_fields=e.to_dict())
        print(get_user_friendly_message(e), file=sys.stderr)
        return EXIT_FATAL
    except Exception as e:
        error = handle_error(e, "Simulation failed")
        logger.error(error.message, extra_fields=error.to_dict(), exc_info=e)
        print(get_user_friendly_message(error), file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
