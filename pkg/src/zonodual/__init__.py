"""Certified lower bounds for ReLU networks from zonotope-constrained Lagrangian duals."""

from .dual import AdamConfig, DualProblem, DualState, eval_dual, init_rho_kw, init_rho_zero
from .geom import Hyperbox, Zonotope
from .kernels import BACKEND, available_backends, use_backend
from .netio import LayerSpec, NetworkSpec, ProblemSpec, ReportSpec, load_network, load_problem
from .pipeline import (
    StagewiseConfig, ZonoDualConfig, baseline_box_dual, oracle_exact_small, oracle_grid_min,
    verify_single, verify_stagewise,
)

__version__ = "0.1.0"
