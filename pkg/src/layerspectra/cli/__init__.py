"""Command-line front end: configs, run records, sweeps and reports."""
from .config import RunConfig, load_config
from .main import main

__all__ = ["RunConfig", "load_config", "main"]
