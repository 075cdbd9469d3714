"""
Main entry point for the laboratory CLI.
Loads all command cogs and dispatches to the selected one.
"""

import argparse
import asyncio
import importlib
import logging
import sys

from engine.errors import LabError
from lab_config import LAB_LOG_LEVEL

logger = logging.getLogger(__name__)

COGS = [
    "cogs.run",
    "cogs.preset",
    "cogs.sweep",
    "cogs.fixtures",
    "cogs.plot",
]


def configure_logging(verbosity: int = 0):
    """LAB_LOG_LEVEL by default; -v gives INFO, -vv gives DEBUG."""
    level = getattr(logging, LAB_LOG_LEVEL, logging.WARNING)
    if verbosity == 1:
        level = min(level, logging.INFO)
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        force=True,
    )


# ==================== LOAD COGS ====================

def load_cogs(subparsers):
    """Load all cog modules"""
    for cog in COGS:
        try:
            importlib.import_module(cog).setup(subparsers)
            logger.debug(f"✅ Loaded {cog}")
        except Exception as e:
            logger.error(f"❌ Failed to load {cog}: {e}")
            raise


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lab",
        description="Lasso, OPT-Lasso, sequential estimation and sparse bandit simulations",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    subparsers = parser.add_subparsers(dest="command", required=True)
    load_cogs(subparsers)
    return parser


# ==================== MAIN ENTRY POINT ====================

async def main(argv=None) -> int:
    """Main entry point; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        return await args.handler(args)
    except LabError as e:
        logger.error(f"❌ {type(e).__name__}: {e}", exc_info=True)
        return 2
    except (OSError, ValueError) as e:
        logger.error(f"❌ {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    try:
        sys.exit(asyncio.run(main()))
    except KeyboardInterrupt:
        logger.info("👋 Stopped by user")
        sys.exit(130)
