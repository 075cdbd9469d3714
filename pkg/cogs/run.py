"""
Run command cog.
Runs an experiment described by a JSON config file (or a previous manifest.json).
"""

import json
import logging
from pathlib import Path

from engine.errors import ConfigInvalid
from experiment import ExperimentConfig, run_experiment_async
from utils.helpers import add_run_options, apply_run_options
from views.table_views import format_report

logger = logging.getLogger(__name__)


class RunCog:
    """`lab run --config cfg.json`"""

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="experiment config or manifest.json")
        add_run_options(parser)

    async def handle(self, args) -> int:
        path = Path(args.config)
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigInvalid("config", f"{path} is not valid JSON: {e}") from e
        if isinstance(data, dict) and "config" in data and "kind" not in data:
            data = data["config"]
        cfg = ExperimentConfig.from_dict(apply_run_options(data, args))
        manifest = await run_experiment_async(cfg)
        print(format_report(manifest))
        logger.info(f"✅ Manifest: {manifest}")
        return 0


def setup(subparsers):
    """Register the run command"""
    cog = RunCog()
    parser = subparsers.add_parser("run", help="run an experiment from a JSON config")
    cog.add_arguments(parser)
    parser.set_defaults(handler=cog.handle)
