"""Finite-volume solver for coagulation with multiple fragmentation."""
from __future__ import annotations

from .config import SimConfig, parse_config
from .diagnostics import MomentSeries, l1_distance, moment
from .kernels import DiscreteKernels, KernelSet, discretize_kernels, make_kernel_set, sup_norms
from .mesh import Mesh, build_mesh, gamma_index, project
from .solver import FluxPair, SimulationResult, State, project_initial, run, stable_dt, step

__all__ = [
    "DiscreteKernels",
    "FluxPair",
    "KernelSet",
    "Mesh",
    "MomentSeries",
    "SimConfig",
    "SimulationResult",
    "State",
    "build_mesh",
    "discretize_kernels",
    "gamma_index",
    "l1_distance",
    "make_kernel_set",
    "moment",
    "parse_config",
    "project",
    "project_initial",
    "run",
    "stable_dt",
    "step",
    "sup_norms",
]
