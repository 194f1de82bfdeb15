"""Environment defaults for experiment runs, read once at import.

A local .env fills in variables the shell has not set.
"""
import os

from dotenv import load_dotenv

load_dotenv()  # Load variables from .env


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got '{raw}'")


OUT_DIR = os.getenv("GOSSIP_OUT_DIR", "out")
LOG_DIR = os.getenv("GOSSIP_LOG_DIR", "logs")
THREADS = max(1, _int_env("GOSSIP_THREADS", os.cpu_count() or 1))
SEED = _int_env("GOSSIP_SEED", 12345)
LOG_LEVEL = os.getenv("GOSSIP_LOG_LEVEL", "INFO").upper()
