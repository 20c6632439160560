"""
p4f-cfa - Where Returns Flow Home
Control-flow analysis with pushdown-precise continuation allocation
"""

import logging
import os
from pathlib import Path


class Settings:
    """Application settings"""

    # Project paths
    BASE_DIR = Path(__file__).parent.parent
    DATA_DIR = BASE_DIR / "data"
    CORPUS_DIR = DATA_DIR / "corpus"
    CORPUS_MANIFEST = "corpus.csv"

    # API settings
    APP_NAME = "p4f-cfa"
    APP_VERSION = "1.0.0"
    APP_DESCRIPTION = "Finite-state control-flow analysis with pushdown-precise returns"

    # Machine limits
    CONCRETE_STEP_LIMIT = 1_000_000
    ORACLE_DEPTH_BOUND = 12
    NAIVE_STATE_LIMIT = 20_000
    MAX_CONFIGURATIONS = 250_000
    MAX_WALL_SECONDS = 120.0
    MAX_IMPLIED_STACKS = 10_000
    ORACLE_CACHE_SIZE = int(os.environ.get("P4F_ORACLE_CACHE", "32"))

    # Benchmarks
    BENCH_WORKERS = int(os.environ.get("P4F_WORKERS", "1"))
    RANDOM_SEED = int(os.environ.get("P4F_SEED", "0"))

    # Logging
    LOG_LEVEL = os.environ.get("P4F_LOG_LEVEL", "WARNING")
    LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


settings = Settings()


def configure_logging(level: str = None) -> None:
    """Install one stream handler on the root logger"""
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format=settings.LOG_FORMAT,
        force=True,
    )
