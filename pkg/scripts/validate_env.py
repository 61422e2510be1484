"""
Script to validate .env file configuration
"""
import os
import sys
from pathlib import Path

# Add parent directory to path to import src modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config.settings import Settings, find_project_root, load_env_file

KNOWN_KEYS = {
    "LOG_LEVEL": "INFO",
    "LOG_FORMAT": "json",
    "LOG_TO_FILE": "false",
    "LOG_FILE": "./logs/fabricsim.log",
    "SIM_OUTPUT_DIR": "./results",
    "SCENARIO_DIR": "./data/scenarios",
    "DEFAULT_SEED": "1",
    "SIM_WORKERS": "1",
}


def validate_env_file() -> bool:
    """Validate .env file configuration"""
    print("fabricsim - Environment Configuration Validator")
    print("=" * 60)
    print()

    project_root = find_project_root()
    print(f"Project root: {project_root}")

    env_file = project_root / ".env"
    if env_file.exists():
        print(f"✅ .env file found: {env_file}")
        loaded_path = load_env_file()
        if loaded_path:
            print(f"✅ .env file loaded from: {loaded_path}")
    else:
        print(f"○ No .env file at {env_file}; using environment and defaults")
    print()

    print("Configuration keys:")
    print("-" * 60)
    for key, default in KNOWN_KEYS.items():
        value = os.getenv(key)
        if value:
            print(f"✓ {key}: {value}")
        else:
            print(f"○ {key}: Not set (default: {default})")
    print()

    print("Testing settings loading...")
    print("-" * 60)
    try:
        settings = Settings()
    except Exception as e:
        print(f"❌ Failed to load settings: {str(e)}")
        print("\nSee ENV_CONFIG.md for allowed values.")
        return False

    print("✅ Settings loaded successfully!")
    print()
    print(f"Log Level: {settings.log_level} ({settings.log_format})")
    print(f"Output Dir: {settings.sim_output_dir}")
    print(f"Scenario Dir: {settings.scenario_dir}")
    print(f"Default Seed: {settings.default_seed}")
    print(f"Sweep Workers: {settings.sim_workers}")
    return True


if __name__ == "__main__":
    success = validate_env_file()
    sys.exit(0 if success else 1)
