"""mRNA / microRNA kinetics with a random source term.

Full model::

    d rho/dt = S(z) - a rho - c rho m
    d m/dt   = S(z) - b m   - c rho m

All functions broadcast over arrays of ``z`` (and of states).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

__all__ = [
    "ModelParams",
    "SourceTerm",
    "full_rhs",
    "steady_state_r",
    "steady_state",
    "perturb_rhs",
    "linear_rhs",
    "linear_steady_state",
]

_SOURCE_GRID = 10_000


@dataclass(frozen=True)
class ModelParams:
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"rate {name} must be positive, got {v!r}")


@dataclass(frozen=True)
class SourceTerm:
    """Polynomial source ``S(z) = sum coeffs[j] z**j``, nonnegative on ``interval``.

    Use :meth:`affine` for the ``k z + d`` family.
    """

    coeffs: tuple[float, ...]
    interval: tuple[float, float] = (-0.5, 0.5)
    kind: str = "polynomial"

    def __post_init__(self):
        coeffs = tuple(float(c) for c in np.atleast_1d(self.coeffs))
        if not coeffs:
            raise ValueError("source needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)
        lo, hi = (float(v) for v in self.interval)
        object.__setattr__(self, "interval", (lo, hi))
        grid = np.linspace(lo, hi, _SOURCE_GRID)
        vmin = float(np.min(self(grid)))
        if vmin < 0:
            raise ValueError(
                f"source is negative on [{lo}, {hi}] (min {vmin:.6g}); "
                "the steady state requires S(z) >= 0"
            )

    @classmethod
    def affine(cls, k: float, d: float, interval=(-0.5, 0.5)) -> "SourceTerm":
        return cls((d, k), interval, kind="affine")

    @classmethod
    def constant(cls, s0: float, interval=(-0.5, 0.5)) -> "SourceTerm":
        return cls((s0,), interval, kind="affine")

    @property
    def k(self) -> float:
        return self.coeffs[1] if len(self.coeffs) > 1 else 0.0

    @property
    def d(self) -> float:
        return self.coeffs[0]

    @property
    def is_constant(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[1:])

    def __call__(self, z):
        return P.polyval(np.asarray(z, dtype=float), self.coeffs)

    def taylor(self, z0, order: int) -> np.ndarray:
        """Taylor coefficients of S about each z0; shape (order+1, *z0.shape)."""
        z0 = np.asarray(z0, dtype=float)
        out = np.zeros((order + 1,) + z0.shape)
        c = np.array(self.coeffs)
        for j in range(min(order, len(c) - 1) + 1):
            out[j] = P.polyval(z0, c)
            c = P.polyder(c) / (j + 1)
        return out


def _source_values(source, z):
    return source(z) if callable(source) else np.asarray(source, dtype=float)


def full_rhs(rho, m, z, params: ModelParams, source):
    """Time derivative of the full model at contents ``(rho, m)``."""
    s = _source_values(source, z)
    bind = params.c * rho * m
    return s - params.a * rho - bind, s - params.b * m - bind


def steady_state_r(params: ModelParams, source, z=None):
    """Positive root r_inf with rho_inf = b r_inf and m_inf = a r_inf.

    Uses ``2 S / (ab (1 + sqrt(Delta)))``, algebraically equal to
    ``(-1 + sqrt(Delta)) / (2c)`` but free of cancellation for small S.
    ``source`` is a callable of z or precomputed values S(z).
    """
    s = _source_values(source, z)
    if np.any(s < 0):
        raise ValueError("steady state undefined for negative source values")
    ab = params.a * params.b
    delta = 1.0 + 4.0 * params.c * s / ab
    return 2.0 * s / (ab * (1.0 + np.sqrt(delta)))


def steady_state(params: ModelParams, source, z=None):
    """(rho_inf, m_inf) of the full model."""
    r = steady_state_r(params, source, z)
    return params.b * r, params.a * r


def perturb_rhs(rho, m, rinf, params: ModelParams):
    """Time derivative of the perturbation around the steady state."""
    a, b, c = params.a, params.b, params.c
    bind = c * rho * m
    d_rho = -(a + a * c * rinf) * rho - b * c * rinf * m - bind
    d_m = -(b + b * c * rinf) * m - a * c * rinf * rho - bind
    return d_rho, d_m


def linear_rhs(rho, z, params: ModelParams, source):
    """Model without microRNA binding: ``S(z) - a rho``."""
    return _source_values(source, z) - params.a * rho


def linear_steady_state(params: ModelParams, source, z=None):
    return _source_values(source, z) / params.a
