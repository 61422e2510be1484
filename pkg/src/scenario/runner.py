"""
Scenario execution and report writing
"""
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from src.config.settings import get_settings
from src.metrics.export import export_csv
from src.scenario.builder import Simulation, build
from src.scenario.document import ScenarioDoc
from src.scenario.parser import from_raw
from src.utils.error_handler import ExportError, ModelError
from src.utils.logger import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FATAL = 2


@dataclass
class RunOutcome:
    scenario: str
    seed: int
    exit_code: int
    out_dir: Optional[Path] = None
    reports: Dict[str, Path] = field(default_factory=dict)
    counters: Dict[str, int] = field(default_factory=dict)
    events_processed: int = 0
    error: Optional[str] = None


def output_dir_for(doc: ScenarioDoc, out_dir: Optional[Path] = None) -> Path:
    """Explicit directory, else the document's, else SIM_OUTPUT_DIR/<name>"""
    if out_dir is not None:
        return Path(out_dir)
    if doc.output_dir:
        return Path(doc.output_dir)
    return Path(get_settings().sim_output_dir) / doc.name


def execute(doc: ScenarioDoc, seed: Optional[int] = None) -> Simulation:
    """Build and run; raises ModelError on a fatal model fault"""
    sim = build(doc, seed)
    sim.run()
    return sim


def run_scenario(doc: ScenarioDoc, out_dir: Optional[Path] = None, seed: Optional[int] = None) -> RunOutcome:
    """
    Run a validated document and write its CSV reports

    Args:
        doc: Validated scenario
        out_dir: Report directory (see output_dir_for)
        seed: Overrides doc.seed

    Returns:
        RunOutcome; exit_code 2 when a fatal model error aborted the run
    """
    seed = doc.run_seed(seed)
    target = output_dir_for(doc, out_dir)
    started = time.perf_counter()
    try:
        sim = execute(doc, seed)
    except ModelError as e:
        logger.log_model_fault(e.actor or "unknown", e, e.details.get("sim_time_ns"))
        return RunOutcome(doc.name, seed, EXIT_FATAL, target, error=str(e))

    counters = sim.counters()
    try:
        reports = export_csv(
            sim.metrics, target, sim.dataflow.ledger if sim.dataflow else None, counters
        )
    except ExportError as e:
        logger.error(f"Export failed: {e}", extra_fields={"path": e.details.get("path")})
        return RunOutcome(doc.name, seed, EXIT_FATAL, target, counters=counters, error=str(e))

    if sim.dataflow is not None:
        sim.dataflow.report(doc.run_length)
    logger.log_run(
        doc.name,
        seed,
        sim.summary.events_processed,
        sim.summary.final_time,
        time.perf_counter() - started,
        details={"out_dir": str(target)},
    )
    return RunOutcome(
        doc.name, seed, EXIT_OK, target, reports, counters, sim.summary.events_processed
    )


def with_params(doc: ScenarioDoc, params: Dict[str, Any]) -> ScenarioDoc:
    """Copy of a document with dotted-path overrides applied and revalidated"""
    return from_raw(doc.model_dump(mode="json"), params)


# (doc, out_dir, seed) -> outcome; must be picklable for worker processes
Procedure = Callable[[ScenarioDoc, Optional[Path], Optional[int]], RunOutcome]


def sweep_dir(base: Path, key: str, value: Any) -> Path:
    return Path(base) / f"{key}={value}"


def run_points(
    points: Sequence[Tuple[ScenarioDoc, Path, Procedure]],
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> List[RunOutcome]:
    """
    Run independent simulations, in worker processes when more than one worker is allowed

    Args:
        points: (document, output directory, procedure) per simulation
        seed: Overrides each document's seed
        workers: Process count; SIM_WORKERS when omitted

    Returns:
        Outcomes in the order of ``points``
    """
    workers = workers or get_settings().sim_workers
    if workers <= 1 or len(points) <= 1:
        return [procedure(doc, out, seed) for doc, out, procedure in points]
    logger.info(f"Running {len(points)} points on {workers} workers")
    with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
        futures = [pool.submit(procedure, doc, out, seed) for doc, out, procedure in points]
        return [f.result() for f in futures]


def run_sweep(
    doc: ScenarioDoc,
    key: str,
    values: Sequence[Any],
    out_dir: Optional[Path] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> List[RunOutcome]:
    """
    Run one simulation per value of a dotted-path parameter

    Outputs go to ``<out_dir>/<key>=<value>``.
    """
    base = output_dir_for(doc, out_dir)
    points = [(with_params(doc, {key: v}), sweep_dir(base, key, v), run_scenario) for v in values]
    return run_points(points, seed, workers)
