import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from genereg_gpc import analysis as an
from genereg_gpc.config import from_dict
from genereg_gpc.galerkin import GalerkinSystem, project
from genereg_gpc.integrate import IntegratorConfig, integrate
from genereg_gpc.kinetics import ModelParams, SourceTerm, steady_state_r
from genereg_gpc.measure_basis import build_basis, build_measure, build_quadrature
from genereg_gpc.studies import run_decay

UNIT = ModelParams(1.0, 1.0, 1.0)
HALF = build_measure("uniform", -0.5, 0.5)
R_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# frozen from estimate_kappa at grid sizes 10001 and 100001 (identical to 1e-16)
KAPPA_BASELINE = 1.1800937452785616
# frozen from a 30-digit mpmath quadrature of the steady states
CV_L_BASELINE = 0.19245008972987525
CV_NL_BASELINE = 0.14086909427535926


# ---------------------------------------------------------------- norms

def test_l2_norm_examples():
    assert an.l2_pi_norm_sq([1.0, 0.0, 0.0]) == 1.0
    assert an.l2_pi_norm_sq([]) == 0.0
    q = build_quadrature(HALF, 10)
    basis = build_basis(HALF, q, 4)
    assert an.l2_pi_norm_sq(project(lambda z: z, basis, q)) == pytest.approx(1 / 12, abs=1e-15)


def test_l2_norm_matches_quadrature_in_span():
    q = build_quadrature(HALF, 20)
    basis = build_basis(HALF, q, 6)
    c = np.random.default_rng(0).normal(size=7)
    assert an.l2_pi_norm_sq(c) == pytest.approx(q.integrate(basis.expand(c, q.nodes) ** 2), abs=1e-10)


@pytest.mark.parametrize("n", [0, 1, 3])
def test_hn_norm_of_constant(n):
    q = build_quadrature(HALF, 8)
    assert an.hn_pi_norm_sq(Polynomial([2.5]), n, q) == pytest.approx(6.25, abs=1e-14)


def test_hn_norm_of_identity():
    q = build_quadrature(HALF, 8)
    assert an.hn_pi_norm_sq(Polynomial([0.0, 1.0]), 1, q) == pytest.approx(13 / 12, abs=1e-14)
    assert an.hn_pi_norm_sq([lambda z: z, lambda z: np.ones_like(z)], 1, q) == pytest.approx(13 / 12, abs=1e-14)


def test_hn_norm_order_zero_is_l2():
    q = build_quadrature(HALF, 20)
    basis = build_basis(HALF, q, 5)
    p = Polynomial([0.1, -0.4, 0.3, 2.0])
    assert an.hn_pi_norm_sq(p, 0, q) == pytest.approx(an.l2_pi_norm_sq(project(p, basis, q)), abs=1e-12)


def test_hn_norm_needs_enough_derivatives():
    with pytest.raises(ValueError):
        an.hn_pi_norm_sq([np.sin, np.cos], 2, build_quadrature(HALF, 4))


def test_hn_norm_from_coefficients():
    q = build_quadrature(HALF, 20)
    basis = build_basis(HALF, q, 6)
    p = Polynomial([0.3, 1.0, -2.0, 0.5])
    c = project(p, basis, q)
    for n in range(4):
        assert an.hn_pi_norm_sq_coeffs(c, basis, q, n) == pytest.approx(an.hn_pi_norm_sq(p, n, q), rel=1e-11)


def test_weighted_energy_examples():
    assert an.weighted_energy(np.zeros(3), np.zeros(3), np.ones(3), 2.0, 3.0) == 0.0
    x, y = np.array([1.0, 2.0]), np.array([3.0, -1.0])
    assert an.weighted_energy(x, y, np.ones(2), 2.0, 3.0) == pytest.approx(2 * 5 + 3 * 10)
    mu = an.mu_weights(1, 2.0)
    np.testing.assert_array_equal(mu, [1.0, 4.0])
    assert an.weighted_energy(np.array([1.0, 1.0]), np.array([0.0]), mu, 1.7, 5.0) == pytest.approx(17 * 1.7)


def test_weighted_energy_length_mismatch():
    with pytest.raises(ValueError):
        an.weighted_energy(np.ones(3), np.ones(3), np.ones(2), 1.0, 1.0)
    with pytest.raises(ValueError):
        an.weighted_energy(np.ones(2), np.ones(3), np.ones(2), 1.0, 1.0)


# ---------------------------------------------------------------- constants and weights

def test_constants_of_the_estimates():
    params = ModelParams(1.0, 2.0, 0.5)
    tc = an.theorem_constants(params, kappa=0.8, r=0.4, R=0.9, p=0.5, interval_width=1.0)
    A = math.pi**2 / 6
    assert tc.A == pytest.approx(1.6449341, abs=1e-7)
    assert tc.L == pytest.approx(math.sqrt(16 * A * 0.64 / 0.16 + 1))
    assert tc.nu == pytest.approx(0.8 * tc.L)
    assert tc.q == 2.5
    assert tc.C0_sens == pytest.approx(1 / (25 * 32 * A * 0.25))
    assert tc.C0_spec == pytest.approx(2 / 3 / (25 * 64 * tc.nu**2 * 0.25 * A * 2.0))
    assert tc.C0_hat == pytest.approx(1 / (2**11 * 0.25 * A))
    assert tc.C0_hat_spec == pytest.approx(tc.C0_hat / 3)
    assert tc.C_S == 2.0
    assert tc.I0 == pytest.approx(32 * 0.25 * 0.81 + 1)
    assert tc.L > 1 and tc.r <= tc.R and not tc.degenerate


def test_sobolev_constant_choice():
    tc = an.theorem_constants(UNIT, 1.0, 1.0, 1.0, 0.0, interval_width=4.0)
    assert tc.C_S == 4.0


def test_degenerate_constants():
    tc = an.theorem_constants(UNIT, 0.0, 0.0, 0.0, 0.5, 1.0)
    assert tc.degenerate and math.isinf(tc.L) and math.isnan(tc.nu)


def test_omega_star_values():
    w = an.omega_star(3, kappa=2.0, L=1.5)
    expected = [1.5**3 * 1, 1.5**2 * 4 / 2, 1.5 * 9 / (4 * 2), 16 / (8 * 6)]
    np.testing.assert_allclose(w, expected)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(0, 8), kappa=st.floats(0.05, 5.0), r_frac=st.floats(0.01, 1.0))
def test_omega_star_bracketing(n, kappa, r_frac):
    # the bracket [1/(kappa^n n!), 5 L^n] needs nu = kappa L >= 1
    r = r_frac * kappa
    L = math.sqrt(16 * an.A_CONST * kappa**2 / r**2 + 1)
    if kappa * L < 1:
        return
    w = an.omega_star(n, kappa, L)
    assert np.all(w > 0)
    assert np.all(w >= (1 - 1e-12) / (kappa**n * math.factorial(n)))
    assert np.all(w <= 5 * L**n * (1 + 1e-12))


# ---------------------------------------------------------------- kappa

def test_kappa_of_constant_steady_state():
    rep = an.estimate_kappa(UNIT, SourceTerm.constant(1.0), HALF)
    assert rep.kappa == pytest.approx(R_GOLDEN, abs=1e-15)
    assert rep.r == pytest.approx(R_GOLDEN) and rep.R == pytest.approx(R_GOLDEN)
    assert np.all(rep.lhs[1:] == 0.0)
    assert not rep.degenerate


def test_kappa_baseline_golden():
    src = SourceTerm.affine(2 / 3, 1.0)
    coarse = an.estimate_kappa(UNIT, src, HALF, 6, 10001)
    fine = an.estimate_kappa(UNIT, src, HALF, 6, 100001)
    assert abs(coarse.kappa - fine.kappa) < 1e-6
    assert coarse.kappa == pytest.approx(KAPPA_BASELINE, rel=1e-12)
    assert np.all(coarse.margins >= -1e-12)
    # the first derivative sets kappa here
    assert int(np.argmax(coarse.kappa_per_order)) == 1


def test_kappa_matches_symbolic_derivatives():
    z = sp.symbols("z")
    params = ModelParams(1.5, 0.8, 2.0)
    src = SourceTerm.affine(1.2, 0.9)
    S = sp.Rational(6, 5) * z + sp.Rational(9, 10)
    r_expr = (-1 + sp.sqrt(1 + 4 * sp.Rational(2) * S / (sp.Rational(3, 2) * sp.Rational(4, 5)))) / 4
    grid = np.linspace(-0.5, 0.5, 201)
    per_order = []
    for i in range(7):
        f = sp.lambdify(z, sp.diff(r_expr, z, i) / sp.factorial(i), "numpy")
        vals = np.broadcast_to(f(grid), grid.shape)
        np.testing.assert_allclose(an.rinf_taylor(params, src, grid, 6)[i], vals, rtol=1e-12, atol=1e-14)
        per_order.append(((i + 1) ** 2 * np.max(np.abs(vals))) ** (1 / (i + 1)))
    rep = an.estimate_kappa(params, src, HALF, 6, 201)
    assert rep.kappa == pytest.approx(max(per_order), rel=1e-12)


def test_zero_source_is_degenerate():
    rep = an.estimate_kappa(UNIT, SourceTerm.constant(0.0), HALF)
    assert rep.kappa == 0.0 and rep.degenerate
    tc = an.theorem_constants(UNIT, rep.kappa, rep.r, rep.R, 0.5, 1.0)
    assert tc.degenerate


# ---------------------------------------------------------------- stability condition

def test_constant_steady_state_passes_stability_condition():
    rep = an.check_stability_condition([0.6, 0.0, 0.0], q=2.5)
    assert rep.passed and rep.lhs == 0.0 and rep.rhs > 0


def _boundary_coeffs(q, factor, r0=0.7):
    rhs = r0**2 / (2 ** (2 * q + 3) * an.A_CONST)
    # single first-order coefficient with ((1+1)^q r1)^2 = factor * rhs
    return [r0, math.sqrt(factor * rhs) / 2**q]


@pytest.mark.parametrize("q", [2.0, 2.5, 3.0])
def test_stability_condition_boundary(q):
    half = an.check_stability_condition(_boundary_coeffs(q, 0.5), q)
    assert half.passed and half.lhs == pytest.approx(0.5 * half.rhs, rel=1e-12)
    double = an.check_stability_condition(_boundary_coeffs(q, 2.0), q)
    assert not double.passed and double.lhs == pytest.approx(2.0 * double.rhs, rel=1e-12)
    assert double.margin < 0 < half.margin


def test_stability_condition_needs_positive_mean():
    with pytest.raises(ValueError):
        an.check_stability_condition([0.0, 0.1], 2.0)


def test_stability_condition_at_baseline_fails():
    q = build_quadrature(HALF, 26)
    basis = build_basis(HALF, q, 8)
    src = SourceTerm.affine(2 / 3, 1.0)
    coeffs = project(lambda z: steady_state_r(UNIT, src, z), basis, q)
    rep = an.check_stability_condition(coeffs, 2.5)
    assert not rep.passed
    assert rep.lhs == pytest.approx(0.2418, rel=1e-3)
    assert rep.rhs == pytest.approx(1 / (2**8 * an.A_CONST) * coeffs[0] ** 2, rel=1e-12)


# ---------------------------------------------------------------- decay fit

def test_fit_recovers_exponential():
    t = np.linspace(0, 5, 501)
    fit = an.fit_decay_rate(t, np.exp(-3.0 * t))
    assert abs(fit.rate - 3.0) < 1e-10
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(rate=st.floats(0.01, 20.0), scale=st.floats(1e-6, 1e6))
def test_fit_recovers_any_exponential(rate, scale):
    t = np.linspace(0, 2, 201)
    fit = an.fit_decay_rate(t, scale * np.exp(-rate * t))
    assert abs(fit.rate - rate) <= 1e-10 * max(1.0, rate)


def test_fit_linear_scalar_system():
    a = c = 1.0
    k = a + a * c * 0.618
    traj = integrate(lambda y: -k * y, [0.3], IntegratorConfig("rk4", 1e-3, 5.0, 10))
    fit = an.fit_decay_rate(traj.times, traj.states[:, 0] ** 2)
    assert fit.rate == pytest.approx(3.236, abs=1e-3)


def test_fit_errors():
    t = np.linspace(0, 1, 11)
    with pytest.raises(ValueError, match="shrink"):
        an.fit_decay_rate(t, np.where(t > 0.5, 0.0, 1.0))
    with pytest.raises(ValueError):
        an.fit_decay_rate(t, np.ones(11), window=(0.5, 0.5))
    with pytest.raises(ValueError):
        an.fit_decay_rate(t, np.ones(11), window=(0.51, 0.55))


def test_fit_default_window():
    t = np.linspace(0, 10, 101)
    e = np.where(t < 2, np.exp(-10 * t), np.exp(-20) * np.exp(-2 * (t - 2)))
    assert an.fit_decay_rate(t, e).rate == pytest.approx(2.0, abs=1e-10)


def test_galerkin_rate_exceeds_mrna_decay_rate():
    params = ModelParams(1.0, 2.0, 1.0)
    src = SourceTerm.affine(2 / 3, 1.0)
    q = build_quadrature(HALF, 26)
    sys = GalerkinSystem(build_basis(HALF, q, 8), q, params, src)
    traj = integrate(sys.rhs, sys.initial_state(Polynomial([1e-3, 1e-3]), Polynomial([1e-3])),
                     IntegratorConfig("rk4", 1e-3, 5.0, 10))
    rho, _ = sys.split(traj.states)
    assert an.fit_decay_rate(traj.times, params.a * np.sum(rho**2, axis=1)).rate >= params.a


# ---------------------------------------------------------------- coefficient of variation

def test_cv_basic():
    assert an.cv(2.0, 4.0) == 0.0
    assert an.cv(1.0, 2.0) == 1.0
    assert an.cv(1.0, 1.0 - 1e-15) == 0.0
    with pytest.raises(ValueError):
        an.cv(1.0, 1.0 - 1e-12)
    with pytest.raises(ValueError):
        an.cv(0.0, 1.0)


def test_cv_linear_closed_form():
    q = build_quadrature(HALF, 16)
    assert an.cv_linear(UNIT, SourceTerm.affine(2.0, 1.0), q) == pytest.approx(2 / math.sqrt(12) / 1.0, abs=1e-12)
    assert an.cv_linear(UNIT, SourceTerm.affine(2.0, 1.0), q) == pytest.approx(0.577350, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.1, 10), k=st.floats(0, 4), d=st.floats(0.01, 10))
def test_cv_linear_independent_of_rate(a, k, d):
    d = max(d, k / 2 + 1e-9)
    q = build_quadrature(HALF, 16)
    got = an.cv_linear(ModelParams(a, 1.0, 1.0), SourceTerm.affine(k, d), q)
    assert got == pytest.approx(k / math.sqrt(12) / d, rel=1e-10, abs=1e-15)


def test_deterministic_source_has_no_variation():
    q = build_quadrature(HALF, 16)
    src = SourceTerm.affine(0.0, 1.0)
    assert an.cv_linear(UNIT, src, q) == 0.0
    assert an.cv_nonlinear(UNIT, src, q) == 0.0


def test_cv_baseline_golden():
    q = build_quadrature(HALF, 64)
    src = SourceTerm.affine(2 / 3, 1.0)
    cl, cn = an.cv_linear(UNIT, src, q), an.cv_nonlinear(UNIT, src, q)
    assert cl == pytest.approx(CV_L_BASELINE, abs=1e-14)
    assert cn == pytest.approx(CV_NL_BASELINE, abs=1e-14)
    assert cl - cn > 0


# ---------------------------------------------------------------- decay bounds

@pytest.mark.parametrize("n", [0, 1])
def test_sobolev_decay_bound_holds(n):
    cfg = from_dict({
        "model": {"a": 1.0, "b": 2.0, "c": 1.0},
        "time": {"t_end": 3.0, "dt": 1e-3, "record_every": 20},
        "initial": {"rho0": [0.01, 0.01], "m0": [0.005, -0.005]},
        "decay": {"n": n, "collocation_nodes": 24},
    })
    res = run_decay(cfg)
    summary = dict((row[0], row[1]) for row in res.tables["decay_summary"][1])
    assert summary["sobolev_decay_hypothesis"] == 1
    assert summary["sobolev_decay_bound_holds"] == 1
    assert summary["pointwise_decay_hypothesis"] == 1
    assert summary["pointwise_decay_bound_holds"] == 1
    header, rows = res.tables["decay"]
    rows = np.array(rows)
    col = header.index
    # the L2 norm is dominated by the H^n norm, so the L2 form of the bound holds too
    assert np.all(rows[:, col("norm_rho_sq")] <= 1.05 * rows[:, col("sens_bound_rho")])
    assert np.all(rows[:, col("norm_rho_sq")] <= rows[:, col("hn_norm_rho_sq")] * (1 + 1e-12))
