# Schemas package: grids, Besov indices, solver and run configuration, reports

from .besov import BesovIndex, FieldSelector, Measure
from .grid import Grid
from .solver import SolverConfig
from .experiments import ExperimentKind, ExperimentSpec, ExperimentVerdict
from .run_config import RunConfig, load_run_config, parse_run_config

__all__ = [
    "BesovIndex",
    "FieldSelector",
    "Measure",
    "Grid",
    "SolverConfig",
    "ExperimentKind",
    "ExperimentSpec",
    "ExperimentVerdict",
    "RunConfig",
    "load_run_config",
    "parse_run_config",
]
