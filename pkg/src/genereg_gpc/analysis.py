"""Norms, weighted energies, condition checkers, theorem constants, decay
fits and coefficient-of-variation measures."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinetics import ModelParams, SourceTerm, linear_steady_state, steady_state_r
from .measure_basis import BasisFamily, Measure, QuadratureRule

__all__ = [
    "A_CONST",
    "TheoremConstants",
    "theorem_constants",
    "omega_star",
    "mu_weights",
    "l2_pi_norm_sq",
    "hn_pi_norm_sq",
    "hn_pi_norm_sq_coeffs",
    "weighted_energy",
    "rinf_taylor",
    "KappaReport",
    "estimate_kappa",
    "StabilityReport",
    "check_stability_condition",
    "DecayFit",
    "fit_decay_rate",
    "decay_envelope",
    "cv",
    "cv_linear",
    "cv_nonlinear",
]

A_CONST = math.pi**2 / 6.0


@dataclass(frozen=True)
class TheoremConstants:
    A: float
    kappa: float
    r: float
    R: float
    L: float
    nu: float
    p: float
    q: float
    C0_sens: float
    C0_spec: float
    C0_hat: float
    C0_hat_spec: float
    C_S: float
    I0: float
    degenerate: bool

    def as_rows(self):
        return [(name, getattr(self, name)) for name in self.__dataclass_fields__]


def theorem_constants(params: ModelParams, kappa: float, r: float, R: float,
                      p: float, interval_width: float) -> TheoremConstants:
    """Constants of the decay, stability and spectral-accuracy estimates.

    ``degenerate`` is set when r <= 0 or kappa <= 0 (zero steady state), in
    which case L and nu are infinite/NaN.
    """
    a, b, c = params.a, params.b, params.c
    A = A_CONST
    q = p + 2.0
    degenerate = not (r > 0 and kappa > 0)
    if degenerate:
        L = math.inf
        nu = math.nan
    else:
        L = math.sqrt(16.0 * A * kappa**2 / r**2 + 1.0)
        nu = kappa * L
    C_S = max(2.0 / interval_width, interval_width)
    C0_sens = 1.0 / (5**2 * 2**5 * A * c**2)
    C0_spec = b / (a + b) / (5**2 * 2**6 * nu**2 * c**2 * A * C_S) if not degenerate else math.nan
    C0_hat = 1.0 / (2.0 ** (2 * q + 6) * c**2 * A)
    return TheoremConstants(
        A=A, kappa=kappa, r=r, R=R, L=L, nu=nu, p=p, q=q,
        C0_sens=C0_sens, C0_spec=C0_spec, C0_hat=C0_hat,
        C0_hat_spec=a / (a + b) * C0_hat, C_S=C_S,
        I0=32.0 * c**2 * R**2 + 1.0, degenerate=degenerate,
    )


def omega_star(n: int, kappa: float, L: float) -> np.ndarray:
    """omega*_i = L^(n-i) (i+1)^2 / (kappa^i i!) for i = 0..n."""
    i = np.arange(n + 1)
    fact = np.array([math.factorial(k) for k in i], dtype=float)
    return L ** (n - i) * (i + 1.0) ** 2 / (kappa**i * fact)


def mu_weights(K: int, q: float) -> np.ndarray:
    return (np.arange(K + 1) + 1.0) ** q


def l2_pi_norm_sq(coeffs) -> float:
    """Parseval: ||f||^2_pi for f = sum coeffs_i Phi_i."""
    coeffs = np.asarray(coeffs, dtype=float)
    return float(np.sum(coeffs * coeffs))


def hn_pi_norm_sq(f, n: int, quadrature: QuadratureRule) -> float:
    """sum_{i<=n} int (d^i f)^2 pi dz.

    ``f`` is either a sequence of callables ``[f, f', f'', ...]`` or an object
    with a ``deriv(m)`` method (numpy Polynomial).
    """
    z = quadrature.nodes
    if hasattr(f, "deriv"):
        derivs = [f.deriv(i) if i else f for i in range(n + 1)]
    else:
        derivs = list(f)
        if n >= len(derivs):
            raise ValueError(f"order {n} requested but only {len(derivs) - 1} derivatives supplied")
    total = 0.0
    for i in range(n + 1):
        v = np.broadcast_to(np.asarray(derivs[i](z), dtype=float), z.shape)
        total += float(quadrature.integrate(v * v))
    return total


def hn_pi_norm_sq_coeffs(coeffs, basis: BasisFamily, quadrature: QuadratureRule, n: int) -> float:
    """H^n_pi norm of a gPC expansion via differentiation of the basis."""
    coeffs = np.asarray(coeffs, dtype=float)
    total = 0.0
    for i in range(n + 1):
        v = basis.expand(coeffs, quadrature.nodes, deriv=i)
        total += float(quadrature.integrate(v * v))
    return total


def weighted_energy(x, y, weights, a: float, b: float) -> float:
    """a ||w x||^2 + b ||w y||^2. Trailing entries of a short ``y`` are zero."""
    w = np.asarray(weights, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != w.size:
        raise ValueError(f"weights have length {w.size}, data {x.shape[-1]}")
    if y.shape[-1] > w.size:
        raise ValueError(f"weights have length {w.size}, data {y.shape[-1]}")
    if y.shape[-1] < w.size:
        y = np.concatenate([y, np.zeros(y.shape[:-1] + (w.size - y.shape[-1],))], axis=-1)
    return a * np.sum((w * x) ** 2, axis=-1) + b * np.sum((w * y) ** 2, axis=-1)


def _series_sqrt(d: np.ndarray) -> np.ndarray:
    s = np.zeros_like(d)
    s[0] = np.sqrt(d[0])
    for k in range(1, d.shape[0]):
        acc = d[k].copy()
        for j in range(1, k):
            acc -= s[j] * s[k - j]
        s[k] = acc / (2.0 * s[0])
    return s


def rinf_taylor(params: ModelParams, source: SourceTerm, z0, order: int) -> np.ndarray:
    """Taylor coefficients d^i r_inf / dz^i / i! at z0, i = 0..order.

    Exact series arithmetic on sqrt(Delta); the constant term uses the
    cancellation-free steady-state formula.
    """
    z0 = np.asarray(z0, dtype=float)
    ab = params.a * params.b
    delta = 4.0 * params.c / ab * source.taylor(z0, order)
    delta[0] += 1.0
    s = _series_sqrt(delta)
    out = s / (2.0 * params.c)
    out[0] = steady_state_r(params, source, z0)
    return out


@dataclass(frozen=True)
class KappaReport:
    kappa: float
    kappa_per_order: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray
    r: float
    R: float
    degenerate: bool


def estimate_kappa(params: ModelParams, source: SourceTerm, measure: Measure,
                   max_order: int = 6, grid_size: int = 10001) -> KappaReport:
    """Smallest kappa with sup |(i+1)^2 d^i r_inf| <= kappa^(i+1) i! for i <= max_order.

    Also returns the range [r, R] of r_inf on the interval.
    """
    grid = np.linspace(measure.lower, measure.upper, grid_size)
    t = rinf_taylor(params, source, grid, max_order)
    i = np.arange(max_order + 1)
    # d^i r / i! = t_i, so the bound reads (i+1)^2 |t_i| <= kappa^(i+1)
    sup = np.max(np.abs(t), axis=1) * (i + 1.0) ** 2
    per_order = sup ** (1.0 / (i + 1.0))
    kappa = float(np.max(per_order))
    fact = np.array([math.factorial(k) for k in i], dtype=float)
    lhs = sup * fact
    rhs = kappa ** (i + 1.0) * fact
    r_vals = t[0]
    r_min, r_max = float(r_vals.min()), float(r_vals.max())
    return KappaReport(kappa, per_order, lhs, rhs, rhs - lhs, r_min, r_max,
                       degenerate=not (r_min > 0))


@dataclass(frozen=True)
class StabilityReport:
    passed: bool
    lhs: float
    rhs: float
    margin: float


def check_stability_condition(rinf_coeffs, q: float, A: float = A_CONST) -> StabilityReport:
    """Test sum_{j>=1} ((j+1)^q r_j)^2 <= r_0^2 / (2^(2q+3) A)."""
    coeffs = np.asarray(rinf_coeffs, dtype=float)
    r0 = coeffs[0]
    if not r0 > 0:
        raise ValueError("mean of r_inf must be positive")
    j = np.arange(1, coeffs.size)
    lhs = float(np.sum(((j + 1.0) ** q * coeffs[1:]) ** 2))
    rhs = float(r0**2 / (2.0 ** (2 * q + 3) * A))
    return StabilityReport(lhs <= rhs, lhs, rhs, rhs - lhs)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float


def fit_decay_rate(times, energy, window=None) -> DecayFit:
    """Least-squares slope of log(energy) over ``window``; returns -slope.

    Default window is [0.2, 0.8] of the final time.
    """
    times = np.asarray(times, dtype=float)
    energy = np.asarray(energy, dtype=float)
    if window is None:
        window = (0.2 * times[-1], 0.8 * times[-1])
    t1, t2 = window
    if not t2 > t1:
        raise ValueError("window must satisfy t2 > t1")
    sel = (times >= t1) & (times <= t2)
    if sel.sum() < 2:
        raise ValueError("fewer than two samples in the fit window")
    e = energy[sel]
    if np.any(e <= 0):
        raise ValueError(
            "energy reaches zero inside the fit window (rounding floor); "
            "shrink the window toward earlier times"
        )
    t = times[sel]
    y = np.log(e)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(rate=float(-slope), r_squared=float(r2))


def decay_envelope(times, energy0: float, rate: float, scale: float = 1.0) -> np.ndarray:
    """scale * energy0 * exp(-rate t) / rate, the shape of all decay bounds."""
    return scale * energy0 * np.exp(-rate * np.asarray(times, dtype=float)) / rate


def cv(mean: float, second_moment: float) -> float:
    """Coefficient of variation from the first two moments."""
    return _cv_from_variance(mean, second_moment - mean * mean)


def _cv_from_variance(mean: float, var: float) -> float:
    if not mean > 0:
        raise ValueError("coefficient of variation needs a positive mean")
    if var < 0:
        if var < -1e-14:
            raise ValueError(f"negative variance {var:.3e}")
        var = 0.0
    return math.sqrt(var) / mean


def _cv_of(values, quadrature: QuadratureRule) -> float:
    values = np.asarray(values, dtype=float)
    mean = float(quadrature.integrate(values))
    if np.ptp(values) == 0.0:
        return _cv_from_variance(mean, 0.0)
    # two-pass variance, no cancellation for nearly constant values
    return _cv_from_variance(mean, float(quadrature.integrate((values - mean) ** 2)))


def cv_linear(params: ModelParams, source, quadrature: QuadratureRule) -> float:
    """CV of the steady state S(z)/a of the model without microRNA."""
    return _cv_of(linear_steady_state(params, source, quadrature.nodes), quadrature)


def cv_nonlinear(params: ModelParams, source, quadrature: QuadratureRule) -> float:
    """CV of rho_inf = b r_inf of the full model."""
    return _cv_of(params.b * steady_state_r(params, source, quadrature.nodes), quadrature)
