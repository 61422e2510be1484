"""
Run a scenario from a checkout without installing: python scripts/run_scenario.py run qos_wrr
"""
import sys
from pathlib import Path

# Add parent directory to path to import src modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.scenario.cli import main

if __name__ == "__main__":
    sys.exit(main())
