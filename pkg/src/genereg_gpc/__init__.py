"""Stochastic Galerkin (generalized polynomial chaos) solver for an
mRNA/microRNA kinetic model with a random source term."""

from .analysis import (
    check_stability_condition,
    cv_linear,
    cv_nonlinear,
    estimate_kappa,
    fit_decay_rate,
    theorem_constants,
)
from .estimator import StochasticGalerkinSurrogate
from .galerkin import GalerkinSystem, assemble_triple, assemble_upsilon, galerkin_rhs, project
from .integrate import IntegratorConfig, Trajectory, integrate, solve_collocation
from .kinetics import ModelParams, SourceTerm, full_rhs, perturb_rhs, steady_state, steady_state_r
from .measure_basis import build_basis, build_measure, build_quadrature, check_basis_growth

__version__ = "0.1.0"

__all__ = [
    "GalerkinSystem",
    "IntegratorConfig",
    "ModelParams",
    "SourceTerm",
    "StochasticGalerkinSurrogate",
    "Trajectory",
    "assemble_triple",
    "assemble_upsilon",
    "build_basis",
    "build_measure",
    "build_quadrature",
    "check_basis_growth",
    "check_stability_condition",
    "cv_linear",
    "cv_nonlinear",
    "estimate_kappa",
    "fit_decay_rate",
    "full_rhs",
    "galerkin_rhs",
    "integrate",
    "perturb_rhs",
    "project",
    "solve_collocation",
    "steady_state",
    "steady_state_r",
    "theorem_constants",
]
