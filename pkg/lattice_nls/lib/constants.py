"""Constants for the lattice NLS toolkit."""

import os

# App identification
APP_NAME = "lattice-nls"
APP_VERSION = os.getenv("APP_VERSION", "1.0.0")

# Worker configuration
LATTICE_NLS_LOG_LEVEL = os.getenv("LATTICE_NLS_LOG_LEVEL", "INFO")

# Solver defaults
DEFAULT_TOL = 1e-9  # projected-gradient l2 norm stop threshold
DEFAULT_MAX_ITERS = 200_000
INITIAL_STEP = 1.0
STEP_SHRINK = 0.5
ARMIJO_COEFF = 1e-4
MIN_STEP = 1e-14
MAX_STEP = 1e3
# Energy may rise by rounding noise only (relative to max(1, |E|))
ENERGY_ROUNDING_SLACK = 1e-14
TIE_TOL = 1e-12
DEFAULT_STARTS = ("tent", "box", "gaussian", "uniform", "uniform", "uniform")

# Brute-force oracle
BRUTE_FORCE_MAX_SITES = 13
BRUTE_FORCE_BUDGET = 10_000
BRUTE_FORCE_MAX_ITERS = 20_000

# Thresholds
EPS_NEG = 1e-7  # negativity margin separating E_a = 0 from E_a < 0
CURVE_TOL = 1e-6
CURVE_THETAS = (1.5, 2.0, 3.0)
XI_CANDIDATES = (1.0, 0.5, 2.0, 0.25, 4.0, 8.0)
BISECTION_ITERS = 8

# Hypothesis checks
HYPOTHESIS_SLACK = 1e-12
SMALL_S = 1e-6
THETA_GRID = (1.01, 1.5, 2.0, 4.0, 10.0)
S_GRID = (-4.0, -1.0, -0.3, -1e-2, 1e-2, 0.3, 1.0, 4.0)

# Inequalities
NORM_SLACK = 1e-12
GNS_SAFETY = 1e-9
QUOTIENT_TOL = 1e-8
QUOTIENT_MAX_ITERS = 5_000

# Evolution
MAX_DT = 0.1
LINEAR_SOLVE_RTOL = 1e-10
FIXED_POINT_TOL = 1e-13
FIXED_POINT_MAX_ITERS = 50
DEFAULT_SAMPLES = 101

# Serialization
FLOAT_FORMAT = ".17g"
FIELD_CSV_VALUE_COLUMN = "value"
SCAN_CSV_HEADER = ("a", "E", "lambda", "residual", "iters", "converged")
TRAJECTORY_CSV_HEADER = ("t", "mass", "energy", "mod_dev", "phase_err")

# Exit codes
EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_NON_CONVERGENCE = 3
EXIT_VERIFICATION_FAILED = 4
