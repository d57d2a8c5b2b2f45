"""Probability measures on a compact interval, Gaussian quadrature and
orthonormal polynomial bases.

All recurrences live on the reference interval [-1, 1]; the affine map to
``[lower, upper]`` is applied on evaluation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "MeasureKind",
    "Measure",
    "QuadratureRule",
    "BasisFamily",
    "GrowthReport",
    "build_measure",
    "build_quadrature",
    "build_basis",
    "check_basis_growth",
    "default_quadrature_nodes",
]

_BREAKDOWN_TOL = 1e-13
_NORMALIZATION_TOL = 1e-12
# fine rule used to discretize Custom densities for the Stieltjes procedure
_CUSTOM_DISCRETIZATION = 2000
# theta-rule size for normalization; larger rules accumulate endpoint rounding
_NORMALIZATION_NODES = 64


class MeasureKind(str, Enum):
    UNIFORM = "uniform"
    CHEBYSHEV = "chebyshev"
    CUSTOM = "custom"


def _theta_rule(n: int, lower: float, upper: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre in theta with z = mid - half*cos(theta).

    The substitution absorbs inverse-square-root endpoint singularities, so
    one rule serves uniform, arcsine and smooth custom densities. Returned
    weights include the Jacobian ``half*sin(theta)``.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    theta = 0.5 * math.pi * (x + 1.0)
    mid, half = 0.5 * (lower + upper), 0.5 * (upper - lower)
    z = mid - half * np.cos(theta)
    return z, 0.5 * math.pi * w * half * np.sin(theta)


@dataclass(frozen=True)
class Measure:
    """Probability density on ``[lower, upper]``."""

    lower: float
    upper: float
    density: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    kind: MeasureKind

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_reference(self, z):
        return (np.asarray(z, dtype=float) - self.midpoint) / self.half_width

    def from_reference(self, x):
        return self.midpoint + self.half_width * np.asarray(x, dtype=float)

    def recurrence(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """First ``n`` three-term coefficients (alpha_k, beta_k) on [-1, 1].

        Convention: monic p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1},
        beta_0 = total mass = 1.
        """
        if n < 1:
            raise ValueError("need at least one recurrence coefficient")
        k = np.arange(n, dtype=float)
        alpha = np.zeros(n)
        if self.kind is MeasureKind.UNIFORM:
            beta = np.empty(n)
            beta[0] = 1.0
            beta[1:] = k[1:] ** 2 / (4.0 * k[1:] ** 2 - 1.0)
        elif self.kind is MeasureKind.CHEBYSHEV:
            beta = np.full(n, 0.25)
            beta[0] = 1.0
            if n > 1:
                beta[1] = 0.5
        else:
            alpha, beta = _stieltjes(self, n)
        return alpha, beta


def _stieltjes(measure: Measure, n: int) -> tuple[np.ndarray, np.ndarray]:
    if n > _CUSTOM_DISCRETIZATION // 4:
        raise ValueError(
            f"custom measures support at most {_CUSTOM_DISCRETIZATION // 4} "
            f"recurrence coefficients, requested {n}"
        )
    z, jac = _theta_rule(_CUSTOM_DISCRETIZATION, measure.lower, measure.upper)
    w = np.asarray(measure.density(z), dtype=float) * jac
    w = w / w.sum()
    x = measure.to_reference(z)

    alpha = np.zeros(n)
    beta = np.zeros(n)
    beta[0] = 1.0
    q_prev = np.zeros_like(x)
    q = np.ones_like(x)
    for k in range(n):
        alpha[k] = np.sum(w * x * q * q)
        if k + 1 == n:
            break
        v = (x - alpha[k]) * q - math.sqrt(beta[k]) * q_prev if k else (x - alpha[k]) * q
        b_next = np.sum(w * v * v)
        if b_next < _BREAKDOWN_TOL:
            raise ValueError(
                f"Stieltjes recurrence breakdown at degree {k + 1} "
                f"(beta={b_next:.3e}); the measure has too few points of support"
            )
        beta[k + 1] = b_next
        q_prev, q = q, v / math.sqrt(b_next)
    return alpha, beta


def build_measure(kind, lower: float = -1.0, upper: float = 1.0, density=None) -> Measure:
    """Build a normalized probability measure on ``[lower, upper]``.

    ``kind`` is one of ``uniform``, ``chebyshev`` (arcsine density) or
    ``custom``; a custom ``density`` is rescaled to unit mass.
    """
    try:
        kind = MeasureKind(kind.lower() if isinstance(kind, str) else kind)
    except ValueError:
        raise ValueError(f"unsupported measure kind {kind!r}") from None
    lower, upper = float(lower), float(upper)
    if not (math.isfinite(lower) and math.isfinite(upper)) or not lower < upper:
        raise ValueError(f"degenerate interval [{lower}, {upper}]")

    mid, half = 0.5 * (lower + upper), 0.5 * (upper - lower)
    # ref_pdf is the density of x = (z - mid) / half on [-1, 1]; normalization
    # is checked there so rounding of z far from the origin does not matter
    if kind is MeasureKind.UNIFORM:
        height = 1.0 / (upper - lower)

        def ref_pdf(x):
            return np.full_like(x, 0.5)

        def pdf(z):
            z = np.asarray(z, dtype=float)
            return np.where((z >= lower) & (z <= upper), height, 0.0)

    elif kind is MeasureKind.CHEBYSHEV:

        def ref_pdf(x):
            return 1.0 / (math.pi * np.sqrt((1.0 - x) * (1.0 + x)))

        def pdf(z):
            x = (np.asarray(z, dtype=float) - mid) / half
            inside = np.abs(x) < 1.0
            safe = np.where(inside, x, 0.0)
            return np.where(inside, 1.0 / (math.pi * half * np.sqrt(1.0 - safe * safe)), 0.0)

    else:
        if density is None:
            raise ValueError("custom measure requires a density")
        zq, jac = _theta_rule(_NORMALIZATION_NODES, lower, upper)
        raw = np.asarray(density(zq), dtype=float)
        if np.any(raw < 0):
            raise ValueError("density must be nonnegative")
        mass = float(raw @ jac)
        if not mass > 0:
            raise ValueError("density has zero mass on the interval")

        def pdf(z, _f=density, _m=mass):
            return np.asarray(_f(np.asarray(z, dtype=float)), dtype=float) / _m

        def ref_pdf(x):
            return half * pdf(mid + half * x)

    measure = Measure(lower, upper, pdf, kind)
    xq, jac = _theta_rule(_NORMALIZATION_NODES, -1.0, 1.0)
    values = ref_pdf(xq)
    if np.any(values < 0):
        raise ValueError("density must be nonnegative")
    total = float(values @ jac)
    if abs(total - 1.0) > _NORMALIZATION_TOL:
        raise ValueError(f"density integrates to {total!r}, not 1")
    return measure


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, values) -> float | np.ndarray:
        """Sum over the last axis of ``values`` against the weights."""
        return np.asarray(values, dtype=float) @ self.weights


def default_quadrature_nodes(K: int) -> int:
    """Node count that makes triple products of degree-K polynomials exact."""
    return 2 * K + 10


def _golub_welsch(alpha: np.ndarray, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = alpha.size
    if n == 1:
        return alpha.copy(), np.array([beta[0]])
    nodes, vecs = eigh_tridiagonal(alpha, np.sqrt(beta[1:n]))
    weights = beta[0] * vecs[0, :] ** 2
    return nodes, weights


def build_quadrature(measure: Measure, n_nodes: int) -> QuadratureRule:
    """Gaussian rule with ``n_nodes`` nodes for ``measure`` (Golub-Welsch)."""
    n_nodes = int(n_nodes)
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    alpha, beta = measure.recurrence(n_nodes)
    x, w = _golub_welsch(alpha, beta)
    order = np.argsort(x)
    x, w = x[order], w[order]
    if np.any(w <= 0):
        raise ValueError("quadrature produced nonpositive weights")
    # symmetric measures: nodes should be exactly antisymmetric
    if measure.kind is not MeasureKind.CUSTOM:
        x = 0.5 * (x - x[::-1])
        w = 0.5 * (w + w[::-1])
    w = w / w.sum()
    nodes = measure.from_reference(x)
    if np.any(nodes <= measure.lower) or np.any(nodes >= measure.upper):
        raise ValueError("quadrature nodes fell outside the open interval")
    return QuadratureRule(nodes=nodes, weights=w, order=n_nodes)


@dataclass(frozen=True)
class BasisFamily:
    """Orthonormal polynomials Phi_0..Phi_K for a measure.

    ``growth_exponent_p`` and ``growth_constant`` declare the sup-norm bound
    ``max|Phi_i| <= growth_constant * (i+1)**p``.
    """

    measure: Measure
    K: int
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    growth_exponent_p: float
    growth_constant: float = 1.0
    quadrature: QuadratureRule | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.K + 1

    def evaluate(self, z, deriv: int = 0) -> np.ndarray:
        """Values of ``d^deriv Phi_i / dz^deriv`` for all i; shape (K+1, *z.shape)."""
        if deriv < 0:
            raise ValueError("deriv must be >= 0")
        x = self.measure.to_reference(z)
        sb = np.sqrt(self.beta)
        # table[d][i] holds the d-th x-derivative of Phi_i
        table = np.zeros((deriv + 1, self.K + 1) + x.shape)
        table[0, 0] = 1.0 / sb[0]
        for k in range(self.K):
            for d in range(deriv + 1):
                v = (x - self.alpha[k]) * table[d, k]
                if d:
                    v = v + d * table[d - 1, k]
                if k:
                    v = v - sb[k] * table[d, k - 1]
                table[d, k + 1] = v / sb[k + 1]
        return table[deriv] / self.measure.half_width**deriv

    def __call__(self, i: int, z) -> np.ndarray:
        if not 0 <= i <= self.K:
            raise IndexError(f"degree {i} outside 0..{self.K}")
        return self.evaluate(z)[i]

    def expand(self, coeffs, z, deriv: int = 0) -> np.ndarray:
        """Evaluate ``sum_i coeffs[i] * Phi_i^(deriv)(z)``."""
        coeffs = np.asarray(coeffs, dtype=float)
        n = coeffs.shape[0]
        if n > self.size:
            raise ValueError(f"{n} coefficients exceed basis size {self.size}")
        return np.tensordot(coeffs, self.evaluate(z, deriv)[:n], axes=(0, 0))

    def gram(self, quadrature: QuadratureRule | None = None) -> np.ndarray:
        quad = quadrature or self.quadrature
        V = self.evaluate(quad.nodes)
        return (V * quad.weights) @ V.T


def build_basis(measure: Measure, quadrature: QuadratureRule, K: int) -> BasisFamily:
    """Orthonormal basis up to degree ``K`` via the three-term recurrence."""
    K = int(K)
    if K < 0:
        raise ValueError("K must be >= 0")
    if quadrature.order < K + 1:
        raise ValueError(
            f"quadrature with {quadrature.order} nodes cannot resolve the "
            f"degree-{2 * K} Gram matrix; need at least {K + 1}"
        )
    alpha, beta = measure.recurrence(K + 1)
    if measure.kind is MeasureKind.UNIFORM:
        p, const = 0.5, math.sqrt(2.0)
    elif measure.kind is MeasureKind.CHEBYSHEV:
        p, const = 0.0, math.sqrt(2.0)
    else:
        p, const = None, 1.0
    basis = BasisFamily(measure, K, alpha, beta, p if p is not None else 0.0, const, quadrature)
    if p is None:
        p = check_basis_growth(basis, 2000).min_exponent
        basis = BasisFamily(measure, K, alpha, beta, p, const, quadrature)
        G = basis.gram(quadrature)
        if not np.allclose(G, np.eye(K + 1), atol=1e-8):
            raise ValueError("custom basis Gram matrix is numerically singular")
    return basis


@dataclass(frozen=True)
class GrowthReport:
    max_ratio_per_degree: np.ndarray
    passed: bool
    min_exponent: float
    exceeds_declared: bool


def check_basis_growth(basis: BasisFamily, grid_size: int = 2000) -> GrowthReport:
    """Check ``max|Phi_i| <= C (i+1)^p`` on a uniform grid including endpoints.

    ``min_exponent`` is the smallest p' with ``max|Phi_i| <= (i+1)^p'`` for
    unit constant; ``exceeds_declared`` flags p' > declared p.
    """
    if grid_size < 1000:
        raise ValueError("grid_size must be >= 1000")
    m = basis.measure
    grid = np.linspace(m.lower, m.upper, grid_size)
    sup = np.max(np.abs(basis.evaluate(grid)), axis=1)
    i = np.arange(basis.size)
    bound = basis.growth_constant * (i + 1.0) ** basis.growth_exponent_p
    ratio = sup / bound
    if basis.K >= 1:
        min_p = float(max(0.0, np.max(np.log(sup[1:]) / np.log(i[1:] + 1.0))))
    else:
        min_p = 0.0
    return GrowthReport(
        max_ratio_per_degree=ratio,
        passed=bool(np.all(ratio <= 1.0 + 1e-6)),
        min_exponent=min_p,
        exceeds_declared=min_p > basis.growth_exponent_p + 1e-12,
    )
