"""Incremental full-pose Via-Point Movement Primitive libraries on R^3 x S^3."""

__version__ = "0.1.0"

from .batch_oracle import batch_fit_library, batch_frechet_mean, batch_gaussian, compare
from .detect import STRATEGIES, DetectConfig, greedy_detect
from .errors import DataError, NumericalError, VmpError
from .io import load_library, read_trajectory, save_library, write_trajectory
from .library import Library, LibraryConfig
from .manifold import Pose, dist_m, exp_m, geodesic_m, log_m, transport_m
from .moments import MomentEstimator
from .tasks import FrechetEstimator, TaskModel
from .vmp import BasisConfig, Demonstration, SolverConfig, ViaPointSet, VmpModel, fit_weights, rollout

__all__ = [
    "STRATEGIES", "BasisConfig", "DataError", "Demonstration", "DetectConfig", "FrechetEstimator",
    "Library", "LibraryConfig", "MomentEstimator", "NumericalError", "Pose", "SolverConfig",
    "TaskModel", "ViaPointSet", "VmpError", "VmpModel", "batch_fit_library", "batch_frechet_mean",
    "batch_gaussian", "compare", "dist_m", "exp_m", "fit_weights", "geodesic_m", "greedy_detect",
    "load_library", "log_m", "read_trajectory", "rollout", "save_library", "transport_m",
    "write_trajectory",
]
