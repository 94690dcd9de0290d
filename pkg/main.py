"""Command-line entry point: load a JSON run config and route it by action."""
import argparse
import json
import logging
import sys
from pathlib import Path

from modules import config
from modules.commands import ACTIONS
from modules.errors import CompassError, ConfigError

logger = logging.getLogger("modules.main")


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        description="Elongated compass codes under biased noise: build, graph, sample, threshold, plot."
    )
    parser.add_argument("--config", required=True, help="JSON run config with an 'action' field")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    parser.add_argument("--threads", type=int, help="worker processes for sampling")
    parser.add_argument("--out", help="output directory (overrides the config)")
    return parser.parse_args(argv)


def load_config(args):
    """Read the config file and apply the command-line overrides."""
    path = Path(args.config)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e.msg}", {"line": e.lineno})
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("seed", "threads", "out"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    return data


def validate_action(action):
    """Validate the action field before routing."""
    if not action:
        raise ConfigError("Action is required", {"actions": sorted(ACTIONS)})
    if not isinstance(action, str) or action not in ACTIONS:
        raise ConfigError(f"Invalid action {action!r}", {"actions": sorted(ACTIONS)})


def route_request(action, data):
    """Route a config to its handler; returns (payload, exit_code)."""
    validate_action(action)
    return ACTIONS[action](data)


def main(argv=None):
    config.configure_logging()
    args = parse_args(argv)
    try:
        data = load_config(args)
        payload, exit_code = route_request(data.get("action"), data)
    except CompassError as e:
        payload, exit_code = e.to_dict(), e.exit_code
    except Exception:
        # Full traceback goes to the log, the payload stays sanitized
        logger.exception("❌ Unhandled error")
        payload, exit_code = {"success": False, "error": "Internal error occurred"}, 1
    print(json.dumps(payload, indent=2, sort_keys=True))
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
