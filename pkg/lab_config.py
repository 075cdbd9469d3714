"""
Lab configuration settings.
Contains runtime configuration for output, parallelism, seeding and solver defaults.
"""

import os
from dotenv import load_dotenv

load_dotenv()


def _flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


# Output
LAB_OUTPUT_DIR = os.getenv("LAB_OUTPUT_DIR", "./runs")
LAB_CURVE_POINTS = int(os.getenv("LAB_CURVE_POINTS", "500"))  # points kept per curve in curves.csv

# Parallelism (replications are independent jobs)
LAB_PARALLEL_JOBS = int(os.getenv("LAB_PARALLEL_JOBS", str(os.cpu_count() or 1)))

# Seeding
LAB_BASE_SEED = int(os.getenv("LAB_BASE_SEED", "20240601"))

# Logging
LAB_LOG_LEVEL = os.getenv("LAB_LOG_LEVEL", "WARNING").upper()
LAB_PROGRESS = _flag("LAB_PROGRESS", "on")  # tqdm bars over replications

# Solver
LASSO_TOL = float(os.getenv("LASSO_TOL", "1e-10"))
LASSO_MAX_ITERS = int(os.getenv("LASSO_MAX_ITERS", "10000"))  # coordinate-descent sweeps
LAB_DEBUG = _flag("LAB_DEBUG", "off")  # assert objective monotonicity every sweep
