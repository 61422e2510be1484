"""
Scenario documents, the canned catalog and the command line
"""
from src.scenario.builder import Simulation, build
from src.scenario.catalog import CATALOG, CatalogEntry, get_scenario, list_scenarios
from src.scenario.document import ScenarioDoc
from src.scenario.parser import load_file, parse, render, validate
from src.scenario.runner import RunOutcome, execute, run_scenario, run_sweep

__all__ = [
    "Simulation", "build", "CATALOG", "CatalogEntry", "get_scenario", "list_scenarios",
    "ScenarioDoc", "load_file", "parse", "render", "validate", "RunOutcome", "execute",
    "run_scenario", "run_sweep",
]
