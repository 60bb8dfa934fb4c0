"""Physics-informed solvers for the 2D electrostatic box.

Train an MLP- or KAN-backed network against the Laplace residual plus
boundary mismatch, evaluate it on a uniform grid, and compare against
independently computed reference fields (analytic series, finite
differences). See the CLI (`boxpinn --help`) for the full pipeline.
"""

__version__ = "0.1.0"

from boxpinn.errors import ConfigError, ConvergenceError, DivergenceError, FieldFormatError
from boxpinn.jets import Jet2, jet_add, jet_const, jet_mul, jet_scale, jet_unary, seed_input
from boxpinn.networks import KanHyper, NetworkModel, default_model, init_model, load_model, save_model
from boxpinn.objective import LossBreakdown, boundary_loss, interior_loss, pde_residual, total_loss
from boxpinn.oracle import GridField, fd_solve, oracle_grid, series_solution
from boxpinn.sampling import SampleSet, build_samples, sample_boundary, sample_interior
from boxpinn.training import AdamState, TrainConfig, TrainHistory, adam_step, train
from boxpinn.evaluation import DiffStats, abs_diff, eval_grid, read_csv, write_csv, write_heatmap
from boxpinn.engine import Tensor, parameter_gradient

__all__ = [
    "__version__",
    "ConfigError",
    "ConvergenceError",
    "DivergenceError",
    "FieldFormatError",
    "Jet2",
    "jet_add",
    "jet_const",
    "jet_mul",
    "jet_scale",
    "jet_unary",
    "seed_input",
    "KanHyper",
    "NetworkModel",
    "default_model",
    "init_model",
    "load_model",
    "save_model",
    "LossBreakdown",
    "boundary_loss",
    "interior_loss",
    "pde_residual",
    "total_loss",
    "GridField",
    "fd_solve",
    "oracle_grid",
    "series_solution",
    "SampleSet",
    "build_samples",
    "sample_boundary",
    "sample_interior",
    "AdamState",
    "TrainConfig",
    "TrainHistory",
    "adam_step",
    "train",
    "DiffStats",
    "abs_diff",
    "eval_grid",
    "read_csv",
    "write_csv",
    "write_heatmap",
    "Tensor",
    "parameter_gradient",
]
