"""
Validate every scenario document in the scenario directory and every catalog scenario
"""
import sys
from pathlib import Path
from typing import Optional

# Add parent directory to path to import src modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config.settings import get_settings
from src.scenario.catalog import list_scenarios
from src.scenario.parser import load_file
from src.utils.error_handler import ValidationError


def validate_directory(scenario_dir: Optional[Path] = None) -> dict:
    """
    Validate all YAML files in a directory

    Returns:
        Dict with valid and total counts
    """
    scenario_dir = Path(scenario_dir or get_settings().scenario_dir)
    files = sorted(scenario_dir.glob("*.yaml"))
    valid = 0
    for path in files:
        try:
            doc = load_file(path)
            print(f"✓ {path.name}: {len(doc.switches)} switches, {len(doc.nodes)} nodes")
            valid += 1
        except ValidationError as e:
            print(f"✗ {path.name}: {e.describe()}")
    return {"valid": valid, "total": len(files)}


def validate_catalog() -> dict:
    entries = list_scenarios()
    valid = 0
    for entry in entries:
        try:
            entry.scenario()
            print(f"✓ {entry.name}")
            valid += 1
        except ValidationError as e:
            print(f"✗ {entry.name}: {e.describe()}")
    return {"valid": valid, "total": len(entries)}


def main() -> int:
    print("Scenario files")
    print("=" * 60)
    files = validate_directory(Path(sys.argv[1]) if len(sys.argv) > 1 else None)
    print()
    print("Catalog")
    print("=" * 60)
    catalog = validate_catalog()
    print()
    print(f"Files: {files['valid']}/{files['total']} valid, catalog: {catalog['valid']}/{catalog['total']} valid")
    ok = files["valid"] == files["total"] and catalog["valid"] == catalog["total"]
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
