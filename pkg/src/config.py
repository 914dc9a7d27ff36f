"""Application configuration."""

import os
from pathlib import Path

# Base paths
PROJECT_ROOT = Path(__file__).parent.parent
DATA_DIR = PROJECT_ROOT / "data"
RESULTS_DIR = DATA_DIR / "results"

# Order conditions
DEFAULT_CONDITION_TOL = 1e-10
ROW_SUM_TOL = 1e-13
NONZERO_THRESHOLD = 1e-14
ETA_TOL = 1e-12

# Stability
PSD_TOL = 1e-10
DECOUPLING_TOL = 1e-12
BISECTION_ITERS = 60

# Monotonicity
AM_RADIUS_TOL = 1e-6
AM_R_MAX = 100.0

# Newton defaults
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 25

# Macro-steps must divide the interval to within a few ulps of the step ratio
STEP_DIVISIBILITY_TOL = 4 * 2.0**-52

# Convergence studies
SLOPE_TOL = 0.25

LOG_LEVEL = os.environ.get("MRGARK_LOG_LEVEL", "WARNING")


def condition_tol() -> float:
    """Tolerance under which an order condition counts as satisfied."""
    raw = os.environ.get("MRGARK_TOL")
    if not raw:
        return DEFAULT_CONDITION_TOL
    return float(raw)
