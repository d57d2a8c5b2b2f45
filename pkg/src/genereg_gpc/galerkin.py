"""Stochastic Galerkin projection of the perturbation system.

The coefficient vectors (rho_hat, m_hat) of length K+1 evolve under::

    rho_hat' = -a rho_hat - a c U rho_hat - b c U m_hat - c B(rho_hat, m_hat)
    m_hat'   = -b m_hat   - b c U m_hat   - a c U rho_hat - c B(rho_hat, m_hat)

with U[i, j] = <r_inf Phi_i Phi_j> and B_l = sum_ij m_i T[l, i, j] rho_j,
T[l, i, j] = <Phi_i Phi_j Phi_l>.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .io import format_float
from .kinetics import ModelParams, steady_state_r
from .measure_basis import BasisFamily, QuadratureRule

__all__ = [
    "assemble_triple",
    "assemble_upsilon",
    "project",
    "bilinear",
    "galerkin_rhs",
    "GalerkinSystem",
    "write_tensor_csv",
]


def _min_nodes_for_triple(K: int) -> int:
    return math.ceil((3 * K + 1) / 2)


def _check_exactness(basis: BasisFamily, quadrature: QuadratureRule) -> None:
    need = _min_nodes_for_triple(basis.K)
    if quadrature.order < need:
        raise ValueError(
            f"triple products of degree {3 * basis.K} need >= {need} Gauss nodes, "
            f"got {quadrature.order}"
        )


def assemble_triple(basis: BasisFamily, quadrature: QuadratureRule) -> np.ndarray:
    """Dense tensor T[l, i, j] = sum_q w_q Phi_i Phi_j Phi_l at the nodes."""
    _check_exactness(basis, quadrature)
    V = basis.evaluate(quadrature.nodes)
    return np.einsum("lq,iq,jq,q->lij", V, V, V, quadrature.weights, optimize=True)


def assemble_upsilon(basis: BasisFamily, quadrature: QuadratureRule, params: ModelParams, source) -> np.ndarray:
    """U[i, j] = sum_q w_q r_inf(z_q) Phi_i Phi_j, from exact nodal r_inf."""
    _check_exactness(basis, quadrature)
    V = basis.evaluate(quadrature.nodes)
    rinf = steady_state_r(params, source, quadrature.nodes)
    return (V * (quadrature.weights * rinf)) @ V.T


def project(f, basis: BasisFamily, quadrature: QuadratureRule) -> np.ndarray:
    """Coefficients <f, Phi_i> for i = 0..K.

    ``f`` is a callable of z or an array of values at the quadrature nodes.
    """
    values = f(quadrature.nodes) if callable(f) else np.asarray(f, dtype=float)
    V = basis.evaluate(quadrature.nodes)
    return V @ (quadrature.weights * values)


def bilinear(triple: np.ndarray, rho_hat: np.ndarray, m_hat: np.ndarray) -> np.ndarray:
    """B_l = sum_ij m_i T[l, i, j] rho_j."""
    n = triple.shape[0]
    # (l*i, j) @ rho -> (l, i) @ m
    return (triple.reshape(n * n, n) @ rho_hat).reshape(n, n) @ m_hat


def galerkin_rhs(rho_hat, m_hat, triple, upsilon, params: ModelParams):
    rho_hat = np.asarray(rho_hat, dtype=float)
    m_hat = np.asarray(m_hat, dtype=float)
    n = triple.shape[0]
    if rho_hat.shape != (n,) or m_hat.shape != (n,) or upsilon.shape != (n, n):
        raise ValueError(
            f"dimension mismatch: tensors of size {n}, states {rho_hat.shape} and {m_hat.shape}"
        )
    a, b, c = params.a, params.b, params.c
    nonlin = c * bilinear(triple, rho_hat, m_hat)
    u_theta = c * (upsilon @ (a * rho_hat + b * m_hat))
    # the linear coupling c*Upsilon*(a rho + b m) enters both equations unscaled
    d_rho = -a * rho_hat - u_theta - nonlin
    d_m = -b * m_hat - u_theta - nonlin
    return d_rho, d_m


@dataclass
class GalerkinSystem:
    """Assembled degree-K Galerkin system for one (params, source) pair."""

    basis: BasisFamily
    quadrature: QuadratureRule
    params: ModelParams
    source: object
    triple: np.ndarray = field(init=False, repr=False)
    upsilon: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.triple = assemble_triple(self.basis, self.quadrature)
        self.upsilon = assemble_upsilon(self.basis, self.quadrature, self.params, self.source)

    @property
    def size(self) -> int:
        return self.basis.size

    def initial_state(self, rho0, m0) -> np.ndarray:
        """Stacked projections of the initial perturbation."""
        return np.concatenate([
            project(rho0, self.basis, self.quadrature),
            project(m0, self.basis, self.quadrature),
        ])

    def rhs(self, y: np.ndarray) -> np.ndarray:
        n = self.size
        d_rho, d_m = galerkin_rhs(y[:n], y[n:], self.triple, self.upsilon, self.params)
        return np.concatenate([d_rho, d_m])

    def split(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y)
        return y[..., : self.size], y[..., self.size:]


def write_tensor_csv(path, triple: np.ndarray, upsilon: np.ndarray) -> None:
    """Long-format dump: rows (tensor, l, i, j, value); Upsilon rows use l = -1."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tensor", "l", "i", "j", "value"])
        n = triple.shape[0]
        for l in range(n):
            for i in range(n):
                for j in range(n):
                    w.writerow(["S", l, i, j, format_float(triple[l, i, j])])
        for i in range(n):
            for j in range(n):
                w.writerow(["Upsilon", -1, i, j, format_float(upsilon[i, j])])
