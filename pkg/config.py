# WMMS Allocation Toolkit - Configuration File
# Customize solver budgets, sampling grids and experiment defaults

import os

# ===========================================
# APPLICATION SETTINGS
# ===========================================

APP_TITLE = "WMMS Allocation Toolkit"

_ROOT = os.path.dirname(os.path.abspath(__file__))

# ===========================================
# SOLVER SETTINGS
# ===========================================

# Explored partition states before the exact solver gives up
DEFAULT_MAX_STATES = int(os.environ.get("WMMS_MAX_STATES", str(10 ** 7)))

# Wall-clock limit in seconds for a single exact solve (None = no limit)
DEFAULT_TIME_LIMIT = None

# Local-search restarts for heuristic shares and allocation search
DEFAULT_HEURISTIC_ITERATIONS = int(os.environ.get("WMMS_HEURISTIC_ITERATIONS", "20"))

# Hill-climbing passes per restart (each pass applies one improving move)
LOCAL_SEARCH_MAX_MOVES = 10_000

# ===========================================
# LP SETTINGS
# ===========================================

# auto: dense simplex for small LPs, support pivoting otherwise
LP_METHOD = "auto"  # Options: auto, simplex, pivot

# Largest n*m handed to the dense simplex tableau under LP_METHOD=auto
SIMPLEX_MAX_VARIABLES = 48

# ===========================================
# SAMPLING SETTINGS
# ===========================================

# Monte Carlo draws are rounded to this many decimals before becoming rationals
VALUE_DECIMALS = 4

# Bid amounts are read with two decimals (currency)
BID_DECIMALS = 2

# Minimum per-item mean for the default stochastic-items distributions
ITEM_MIN_MEAN = 0.2

# ===========================================
# EXPERIMENT SETTINGS
# ===========================================

DEFAULT_BIDS_PATH = os.environ.get("WMMS_BIDS_PATH", os.path.join(_ROOT, "data", "bids_sample.csv"))

# Parallel trial workers (1 = run trials in-process)
DEFAULT_WORKERS = int(os.environ.get("WMMS_WORKERS", "1"))

# Synthetic bid pool shape when no bid file is given
SYNTHETIC_CATEGORIES = 200
SYNTHETIC_BIDS_PER_CATEGORY = 50
SYNTHETIC_BID_RANGE = (0.01, 100.0)

# ===========================================
# REPORT SETTINGS
# ===========================================

# Digits in the decimal rendering of exact ratios
REPORT_DECIMALS = 10

# Binomial confidence level for stochastic verification
CONFIDENCE_LEVEL = 0.95

CSV_COLUMNS = ["n", "m", "min_ratio", "trials", "share_method", "wall_ms"]

# ===========================================
# DEBUG SETTINGS
# ===========================================

DEBUG_MODE = os.environ.get("WMMS_DEBUG", "").lower() in ("1", "true", "yes")

# Empty string disables the file handler
LOG_FILE = os.environ.get("WMMS_LOG_FILE", "")

# ===========================================
# LOGGING SETUP
# ===========================================
import logging

_log_level = logging.DEBUG if DEBUG_MODE else logging.INFO
_handlers = [logging.StreamHandler()]
if LOG_FILE:
    _handlers.append(logging.FileHandler(os.path.expanduser(LOG_FILE), mode='a', encoding='utf-8'))

logging.basicConfig(
    level=_log_level,
    format='%(asctime)s %(levelname)s %(name)s - %(message)s',
    handlers=_handlers,
    force=True,
)

# ===========================================
# NOTES
# ===========================================

# To modify settings:
# 1. Edit the values in this file, or export the WMMS_* environment variables
# 2. Re-run the command

# ===========================================
# END OF CONFIGURATION
# ===========================================
