"""
Rerun catalog scenarios with their default knobs and copy the checked report
into data/golden/<scenario>/
"""
import shutil
import sys
import tempfile
from pathlib import Path

# Add parent directory to path to import src modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.scenario.catalog import CATALOG, get_entry
from src.scenario.runner import EXIT_OK
from src.utils.error_handler import UnknownScenarioError
from src.utils.logger import get_logger

logger = get_logger("regenerate_goldens")


def regenerate(name: str, root: Path) -> bool:
    entry = get_entry(name)
    with tempfile.TemporaryDirectory() as tmp:
        outcome = entry.runner()(entry.scenario(), Path(tmp), None)
        if outcome.exit_code != EXIT_OK:
            print(f"✗ {name}: {outcome.error}")
            return False
        target = root / entry.golden
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(Path(tmp) / entry.report, target)
    print(f"✓ {name}: {target}")
    return True


def main() -> int:
    root = Path(__file__).parent.parent
    names = sys.argv[1:] or sorted(CATALOG)
    try:
        results = [regenerate(name, root) for name in names]
    except UnknownScenarioError as e:
        print(f"✗ {e}")
        return 1
    logger.info(f"Regenerated {sum(results)}/{len(results)} golden reports")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
