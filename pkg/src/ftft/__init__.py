"""Data maps from training dynamics, subset selection, and cost accounting."""

__version__ = "0.1.0"

from .cartography import (
    DataMap,
    ambiguous_subset,
    build_map,
    load_map,
    save_map,
    sel_count,
)
from .dynamics import TrainingDynamics, load_dynamics, parse_dynamics, save_dynamics
from .pipeline import StopPolicy, early_stop, run_cartography, run_erm, run_ftft

__all__ = [
    "DataMap",
    "ambiguous_subset",
    "build_map",
    "load_map",
    "save_map",
    "sel_count",
    "TrainingDynamics",
    "load_dynamics",
    "parse_dynamics",
    "save_dynamics",
    "StopPolicy",
    "early_stop",
    "run_cartography",
    "run_erm",
    "run_ftft",
]
