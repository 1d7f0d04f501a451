import os


class Config:
    """Configuration for the regret sink solver"""

    # App settings
    DEBUG = os.environ.get("DEBUG", "False").lower() == "true"
    LOG_LEVEL = os.environ.get("REGRET_LOG_LEVEL", "WARNING").upper()

    # Reproducibility
    DEFAULT_SEED = int(os.environ.get("REGRET_SEED", "20140101"))
    SIGNIFICANT_DIGITS = int(os.environ.get("REGRET_DIGITS", "12"))

    # Solver settings
    WORKERS = int(os.environ.get("REGRET_WORKERS", "1"))
    STREAMING_THRESHOLD = int(os.environ.get("REGRET_STREAMING_N", "400"))
    STREAMING_BLOCK = int(os.environ.get("REGRET_STREAMING_BLOCK", "32"))
    LP_METHOD = os.environ.get("REGRET_LP_METHOD", "envelope")

    # Oracle settings
    ORACLE_MAX_N = int(os.environ.get("REGRET_ORACLE_MAX_N", "8"))
    ORACLE_GRID = int(os.environ.get("REGRET_ORACLE_GRID", "200"))
    ORACLE_X_STEP = float(os.environ.get("REGRET_ORACLE_X_STEP", "1e-3"))

    # Tolerances
    FORMULA_TOLERANCE = 1e-9
    ORACLE_TOLERANCE = 1e-7
    END_TO_END_TOLERANCE = 1e-5

    # Empirical constant C in |S_y| <= C * n
    SCENARIO_SET_FACTOR = 4
