"""Warehouse sorting-layout optimization with a simulated robot fleet and a
two-layer surrogate-assisted evolutionary algorithm."""

from .domain import Layout, WarehouseConfig, load_config, validate_config
from .simulator import SimOutcome, run
from .evolution import EAParams, run_algorithm

__all__ = [
    "EAParams",
    "Layout",
    "SimOutcome",
    "WarehouseConfig",
    "load_config",
    "run",
    "run_algorithm",
    "validate_config",
]

__version__ = "0.1.0"
