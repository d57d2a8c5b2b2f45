"""scikit-learn style front end for the stochastic Galerkin solver.

``StochasticGalerkinSurrogate`` solves the coefficient system in ``fit`` and
then behaves as a surrogate of ``z -> (rho(t_end, z), m(t_end, z))``::

    est = StochasticGalerkinSurrogate(K=8, t_end=2.0).fit()
    est.predict(np.linspace(-0.5, 0.5, 5))      # perturbations, shape (5, 2)
    est.transform(z)                             # basis features Phi_i(z)
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial import Polynomial
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis import l2_pi_norm_sq
from .galerkin import GalerkinSystem, project
from .integrate import IntegratorConfig, integrate
from .kinetics import ModelParams, SourceTerm, steady_state, steady_state_r
from .measure_basis import build_basis, build_measure, build_quadrature, default_quadrature_nodes


def _as_z(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single random variable column, got {X.shape[1]}")
        X = X[:, 0]
    return X


class StochasticGalerkinSurrogate(TransformerMixin, BaseEstimator):
    """Degree-K gPC surrogate of the perturbation around the steady state.

    Parameters mirror the run configuration: rates ``a, b, c``; monomial
    source coefficients ``source_coeffs`` (lowest degree first); the measure
    ``measure`` on ``[lower, upper]``; truncation ``K``; time stepping
    ``scheme, dt, t_end``; initial perturbations ``rho0, m0`` as monomial
    coefficients in z.
    """

    def __init__(self, a=1.0, b=1.0, c=1.0, source_coeffs=(1.0, 2.0 / 3.0), measure="uniform",
                 lower=-0.5, upper=0.5, K=8, quad_nodes=None, scheme="rk4", dt=1e-3, t_end=1.0,
                 rho0=(1e-2,), m0=(1e-2,)):
        self.a = a
        self.b = b
        self.c = c
        self.source_coeffs = source_coeffs
        self.measure = measure
        self.lower = lower
        self.upper = upper
        self.K = K
        self.quad_nodes = quad_nodes
        self.scheme = scheme
        self.dt = dt
        self.t_end = t_end
        self.rho0 = rho0
        self.m0 = m0

    def fit(self, X=None, y=None):
        """Assemble the Galerkin system and integrate to ``t_end``.

        ``X`` and ``y`` are ignored; the random input is fully described by
        the measure.
        """
        self.params_ = ModelParams(self.a, self.b, self.c)
        self.measure_ = build_measure(self.measure, self.lower, self.upper)
        self.source_ = SourceTerm(tuple(self.source_coeffs), (self.lower, self.upper))
        n_quad = self.quad_nodes or default_quadrature_nodes(self.K)
        self.quadrature_ = build_quadrature(self.measure_, n_quad)
        self.basis_ = build_basis(self.measure_, self.quadrature_, self.K)
        self.system_ = GalerkinSystem(self.basis_, self.quadrature_, self.params_, self.source_)
        config = IntegratorConfig(self.scheme, self.dt, self.t_end, record_every=1)
        y0 = self.system_.initial_state(Polynomial(self.rho0), Polynomial(self.m0))
        self.trajectory_ = integrate(self.system_.rhs, y0, config, meta={"system": "galerkin"})
        rho_hat, m_hat = self.system_.split(self.trajectory_.final)
        self.coef_ = np.vstack([rho_hat, m_hat])
        self.rinf_coef_ = project(lambda z: steady_state_r(self.params_, self.source_, z),
                                  self.basis_, self.quadrature_)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        """Orthonormal basis features, shape (n_samples, K+1)."""
        check_is_fitted(self, "coef_")
        return self.basis_.evaluate(_as_z(X)).T

    def predict(self, X):
        """Perturbation (rho, m) at ``t_end`` for each z, shape (n_samples, 2)."""
        return self.transform(X) @ self.coef_.T

    def predict_content(self, X):
        """Total unbound contents: steady state plus perturbation."""
        check_is_fitted(self, "coef_")
        z = _as_z(X)
        rho_inf, m_inf = steady_state(self.params_, self.source_, z)
        return np.column_stack([rho_inf, m_inf]) + self.predict(z)

    def energy(self):
        """a ||rho||^2_pi + b ||m||^2_pi at ``t_end``."""
        check_is_fitted(self, "coef_")
        return self.a * l2_pi_norm_sq(self.coef_[0]) + self.b * l2_pi_norm_sq(self.coef_[1])
