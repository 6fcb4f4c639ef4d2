import os

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    try:
        return int((os.getenv(name) or "").strip() or default)
    except Exception:
        return default


def _env_float(name: str, default: float) -> float:
    try:
        return float((os.getenv(name) or "").strip() or default)
    except Exception:
        return default


class Settings:
    PROJECT_NAME: str = "slacktopo"
    VERSION: str = "0.1.0"

    # Execution
    THREADS: int = max(1, _env_int("TDA_THREADS", 1))
    OUTPUT_DIR: str = os.getenv("TDA_OUTPUT_DIR", "runs")

    # Numerics
    RK4_SUBSTEPS: int = max(1, _env_int("TDA_RK4_SUBSTEPS", 10))
    SIMPLEX_BUDGET: int = max(1, _env_int("TDA_SIMPLEX_BUDGET", 50_000_000))
    DEFAULT_RHO: float = _env_float("TDA_DEFAULT_RHO", 0.3)
    DEFAULT_MAX_DIM: int = max(0, _env_int("TDA_DEFAULT_MAX_DIM", 2))


settings = Settings()
