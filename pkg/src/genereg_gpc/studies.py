"""Study runners behind the CLI subcommands.

Each runner takes a :class:`RunConfig`, returns a :class:`StudyResult` with
named tables (header + rows), summary lines, an exit code and chart specs.
Nothing here touches the filesystem.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from . import analysis as an
from .config import RunConfig
from .galerkin import GalerkinSystem, project
from .integrate import IntegratorConfig, integrate, solve_collocation
from .kinetics import ModelParams, SourceTerm, steady_state_r
from .measure_basis import build_basis, build_quadrature, check_basis_growth, default_quadrature_nodes
from .svg import ChartSpec

EXIT_OK, EXIT_FAIL, EXIT_WARN = 0, 1, 2

DECAY_HEADER = [
    "t", "E_pi", "norm_rho_sq", "norm_m_sq", "bound_rho", "bound_m",
    "hn_norm_rho_sq", "hn_norm_m_sq", "sens_bound_rho", "sens_bound_m",
    "gal_norm_rho_sq", "gal_norm_m_sq", "gal_mu_rho_sq", "gal_mu_m_sq",
    "stab_bound_rho", "stab_bound_m",
]
CONVERGE_HEADER = ["K", "err_rho_L2pi", "err_m_L2pi", "ratio", "proj_err_rho", "proj_err_m"]
CV_HEADER = [
    "figure", "sweep", "value", "a", "b", "c", "k", "d",
    "k_sq_over_2", "true_variance", "cv_linear", "cv_nonlinear", "diff",
]
CHECK_HEADER = ["condition", "index", "lhs", "rhs", "pass", "margin"]


@dataclass
class StudyResult:
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)
    exit_code: int = EXIT_OK
    charts: list[ChartSpec] = field(default_factory=list)

    def flag(self, code: int) -> None:
        # failure dominates warning
        if code == EXIT_FAIL or (code == EXIT_WARN and self.exit_code == EXIT_OK):
            self.exit_code = code


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _setup(cfg: RunConfig):
    return cfg.params(), cfg.build_measure(), cfg.build_source()


def _rinf_coeffs(params, source, basis, quad):
    """gPC coefficients of r_inf; exact for a constant source."""
    if source.is_constant:
        out = np.zeros(basis.size)
        out[0] = steady_state_r(params, source, np.array([0.0]))[0]
        return out
    return project(lambda z: steady_state_r(params, source, z), basis, quad)


# ---------------------------------------------------------------- decay

def _spectral_derivative_operators(measure, quad, n):
    """Matrices mapping nodal values to nodal i-th derivatives, i = 0..n."""
    basis = build_basis(measure, quad, quad.order - 1)
    V = basis.evaluate(quad.nodes)
    to_coeffs = V * quad.weights
    return [basis.evaluate(quad.nodes, i).T @ to_coeffs for i in range(n + 1)]


def run_decay(cfg: RunConfig, threads: int = 1) -> StudyResult:
    params, measure, source = _setup(cfg)
    a, b, c = params.a, params.b, params.c
    res = StudyResult()
    config = cfg.integrator()
    n = cfg.decay.n
    slack = cfg.decay.slack
    rho0 = Polynomial(cfg.initial.rho0)
    m0 = Polynomial(cfg.initial.m0)

    quad_c = build_quadrature(measure, cfg.decay.collocation_nodes)
    quad_g = build_quadrature(measure, cfg.quad_nodes())
    basis = build_basis(measure, quad_g, cfg.galerkin.K)
    system = GalerkinSystem(basis, quad_g, params, source)

    kap = an.estimate_kappa(params, source, measure, cfg.check.max_order, cfg.check.grid_size)
    consts = an.theorem_constants(params, kap.kappa, kap.r, kap.R, basis.growth_exponent_p, measure.width)
    mu = an.mu_weights(basis.K, consts.q)

    def run_colloc(_):
        return solve_collocation(params, source, quad_c, rho0, m0, config)

    def run_galerkin(_):
        return integrate(system.rhs, system.initial_state(rho0, m0), config, meta={"system": "galerkin"})

    traj_c, traj_g = _map(lambda f: f(None), [run_colloc, run_galerkin], threads)
    t = traj_c.times
    N = quad_c.order
    rho_c, m_c = traj_c.states[:, :N], traj_c.states[:, N:]
    norm_rho = rho_c**2 @ quad_c.weights
    norm_m = m_c**2 @ quad_c.weights
    E_pi = a * norm_rho + b * norm_m

    ops = _spectral_derivative_operators(measure, quad_c, n)
    hn_rho = sum(((D @ rho_c.T) ** 2).T @ quad_c.weights for D in ops)
    hn_m = sum(((D @ m_c.T) ** 2).T @ quad_c.weights for D in ops)

    rho_h, m_h = system.split(traj_g.states)
    gal_rho = np.sum(rho_h**2, axis=1)
    gal_m = np.sum(m_h**2, axis=1)
    gal_mu_rho = np.sum((mu * rho_h) ** 2, axis=1)
    gal_mu_m = np.sum((mu * m_h) ** 2, axis=1)

    # bounds
    E0 = E_pi[0]
    bound_rho, bound_m = E0 * np.exp(-a * t) / a, E0 * np.exp(-b * t) / b
    hn_rho0 = an.hn_pi_norm_sq(rho0, n, quad_c)
    hn_m0 = an.hn_pi_norm_sq(m0, n, quad_c)
    E_hn0 = a * hn_rho0 + b * hn_m0
    amp = (5.0 * consts.nu**n * math.factorial(n)) ** 2
    sens_rho, sens_m = amp * E_hn0 * np.exp(-a * t) / a, amp * E_hn0 * np.exp(-b * t) / b
    Ehat0 = a * gal_mu_rho[0] + b * gal_mu_m[0]
    stab_rho, stab_m = Ehat0 * np.exp(-a * t) / a, Ehat0 * np.exp(-b * t) / b

    rows = np.column_stack([
        t, E_pi, norm_rho, norm_m, bound_rho, bound_m, hn_rho, hn_m, sens_rho, sens_m,
        gal_rho, gal_m, gal_mu_rho, gal_mu_m, stab_rho, stab_m,
    ])
    res.tables["decay"] = (DECAY_HEADER, rows.tolist())

    # hypotheses
    grid = np.linspace(measure.lower, measure.upper, 2001)
    lemma_ok = bool(np.max(rho0(grid) ** 2) <= b**2 / (4 * c**2) and np.max(m0(grid) ** 2) <= a**2 / (4 * c**2))
    sens_ok = bool(hn_m0 <= a**2 * consts.C0_sens and hn_rho0 <= b**2 * consts.C0_sens) and not consts.degenerate
    try:
        rinf_coeffs = _rinf_coeffs(params, source, basis, quad_g)
        stab_cond = an.check_stability_condition(rinf_coeffs, consts.q)
        cond_ok = stab_cond.passed
    except ValueError:
        cond_ok = False
    stab_init_ok = bool(gal_mu_m[0] <= a**2 * consts.C0_hat and gal_mu_rho[0] <= b**2 * consts.C0_hat)
    stab_ok = cond_ok and stab_init_ok

    def holds(norm, bound):
        return bool(np.all(norm <= slack * bound))

    checks = [
        ("pointwise_decay", lemma_ok, holds(norm_rho, bound_rho) and holds(norm_m, bound_m)),
        ("sobolev_decay", sens_ok, holds(hn_rho, sens_rho) and holds(hn_m, sens_m)),
        ("galerkin_stability", stab_ok, holds(gal_mu_rho, stab_rho) and holds(gal_mu_m, stab_m)),
    ]
    summary_rows = []
    for name, hyp, ok in checks:
        summary_rows.append([f"{name}_hypothesis", int(hyp)])
        summary_rows.append([f"{name}_bound_holds", int(ok)])
        res.summary.append(f"{name}: hypothesis {'met' if hyp else 'NOT met'}, bound {'holds' if ok else 'VIOLATED'}")
        if hyp and not ok:
            res.flag(EXIT_FAIL)
        elif not hyp:
            res.flag(EXIT_WARN)
    if not lemma_ok:
        res.summary.append("warning: initial data exceed the pointwise smallness thresholds")

    for label, energy, rate_ref in [
        ("rate_colloc_a_rho_sq", a * norm_rho, a),
        ("rate_colloc_b_m_sq", b * norm_m, b),
        ("rate_galerkin_a_rho_sq", a * gal_rho, a),
        ("rate_galerkin_b_m_sq", b * gal_m, b),
    ]:
        try:
            fit = an.fit_decay_rate(t, energy)
            rate = fit.rate
        except ValueError as exc:
            rate = math.nan
            res.summary.append(f"{label}: nan ({exc})")
        else:
            res.summary.append(f"{label}: {rate:.6g} (reference rate {rate_ref:g})")
        summary_rows.append([label, rate])
    res.tables["decay_summary"] = (["quantity", "value"], summary_rows)
    res.charts.append(ChartSpec("decay", "t", ("norm_rho_sq", "bound_rho", "gal_mu_rho_sq", "stab_bound_rho"),
                                "Perturbation energy and decay bounds", logy=True))
    return res


# ---------------------------------------------------------------- converge

def galerkin_error(K: int, params, measure, source, rho0, m0, config: IntegratorConfig,
                   oracle_quad, rho_ref, m_ref):
    """L2_pi errors of the degree-K Galerkin solution against nodal reference values."""
    quad = build_quadrature(measure, default_quadrature_nodes(K))
    basis = build_basis(measure, quad, K)
    system = GalerkinSystem(basis, quad, params, source)
    cfg_final = dataclasses.replace(config, record_every=config.n_steps)
    traj = integrate(system.rhs, system.initial_state(rho0, m0), cfg_final)
    rho_h, m_h = system.split(traj.final)
    w = oracle_quad.weights
    err_rho = math.sqrt(float(w @ (rho_ref - basis.expand(rho_h, oracle_quad.nodes)) ** 2))
    err_m = math.sqrt(float(w @ (m_ref - basis.expand(m_h, oracle_quad.nodes)) ** 2))
    # best approximation in the same span, measured in the oracle rule
    basis_o = build_basis(measure, oracle_quad, K)
    pr = basis_o.expand(project(rho_ref, basis_o, oracle_quad), oracle_quad.nodes)
    pm = basis_o.expand(project(m_ref, basis_o, oracle_quad), oracle_quad.nodes)
    proj_rho = math.sqrt(float(w @ (rho_ref - pr) ** 2))
    proj_m = math.sqrt(float(w @ (m_ref - pm) ** 2))
    return err_rho, err_m, proj_rho, proj_m


def run_converge(cfg: RunConfig, threads: int = 1) -> StudyResult:
    params, measure, source = _setup(cfg)
    res = StudyResult()
    config = cfg.integrator()
    K_list = [int(k) for k in cfg.converge.K_list]
    n_nodes = max(math.ceil(1.5 * max(K_list)), cfg.converge.collocation_nodes, max(K_list) + 1)
    oracle = build_quadrature(measure, n_nodes)
    rho0 = Polynomial(cfg.initial.rho0)
    m0 = Polynomial(cfg.initial.m0)
    traj = solve_collocation(params, source, oracle, rho0, m0,
                             dataclasses.replace(config, record_every=config.n_steps))
    rho_ref, m_ref = traj.final[:n_nodes], traj.final[n_nodes:]

    errs = _map(lambda K: galerkin_error(K, params, measure, source, rho0, m0, config,
                                         oracle, rho_ref, m_ref), K_list, threads)
    rows = []
    prev = None
    for K, (er, em, pr, pm) in zip(K_list, errs):
        ratio = er / prev if prev else math.nan
        rows.append([K, er, em, ratio, pr, pm])
        prev = er
    res.tables["converge"] = (CONVERGE_HEADER, rows)
    res.summary.append(f"oracle: {n_nodes}-node collocation at t={config.t_end:g}, dt={config.dt:g}")
    for K, er, em, ratio, *_ in rows:
        res.summary.append(f"K={K:3d}  err_rho={er:.3e}  err_m={em:.3e}  ratio={ratio:.3g}")
    res.charts.append(ChartSpec("converge", "K", ("err_rho_L2pi", "err_m_L2pi", "proj_err_rho"),
                                "Galerkin error against collocation", logy=True))
    return res


# ---------------------------------------------------------------- cv sweep

def cv_row(params: ModelParams, source: SourceTerm, quad, var_z: float):
    cl = an.cv_linear(params, source, quad)
    cn = an.cv_nonlinear(params, source, quad)
    k = source.k
    return [params.a, params.b, params.c, k, source.d, k * k / 2.0, k * k * var_z, cl, cn, cl - cn]


def run_cv_sweep(cfg: RunConfig, threads: int = 1) -> StudyResult:
    params, measure, _ = _setup(cfg)
    sw = cfg.cv_sweep
    res = StudyResult()
    quad = build_quadrature(measure, sw.quad_nodes)
    mean_z = float(quad.integrate(quad.nodes))
    var_z = float(quad.integrate((quad.nodes - mean_z) ** 2))
    interval = (measure.lower, measure.upper)

    def admissible(k, d):
        try:
            return SourceTerm.affine(k, d, interval)
        except ValueError:
            return None

    jobs = []
    skipped = 0
    for d in sw.d_grid:
        for k in sw.k_grid:
            src = admissible(k, d)
            if src is None:
                skipped += 1
                continue
            jobs.append((("fig1", "k", k), params, src))
    for d in sw.d_grid:
        src = admissible(sw.trend_k, d)
        if src is not None:
            jobs.append((("fig1_k_slice", "d", d), params, src))
    rate_src = admissible(sw.rate_source_k, sw.rate_source_d)
    if rate_src is None:
        raise ValueError(
            f"cv_sweep: source k={sw.rate_source_k}, d={sw.rate_source_d} is negative on the interval"
        )
    for name in ("a", "b", "c"):
        for v in sw.rate_grid:
            p = dataclasses.replace(params, **{name: v})
            jobs.append((("fig2", name, v), p, rate_src))

    values = _map(lambda job: cv_row(job[1], job[2], quad, var_z), jobs, threads)
    rows = [list(job[0]) + vals for job, vals in zip(jobs, values)]
    res.tables["cv_sweep"] = (CV_HEADER, rows)
    if skipped:
        res.summary.append(f"skipped {skipped} (k, d) pairs with S < 0 on the interval")

    col = {h: i for i, h in enumerate(CV_HEADER)}
    diffs = [r[col["diff"]] for r in rows]
    worst = min(diffs)
    if worst < -1e-12:
        res.flag(EXIT_FAIL)
        res.summary.append(f"FAIL: CV_L - CV_NL negative (min {worst:.3e})")
    else:
        res.summary.append(f"CV_L - CV_NL >= 0 at all {len(rows)} grid points (min {worst:.3e})")

    for ok, text in trend_checks(rows, sw.trend_d, sw.trend_k):
        res.summary.append(("trend holds: " if ok else "trend VIOLATED: ") + text)
        if not ok:
            res.flag(EXIT_WARN)
    res.charts.append(ChartSpec("cv_sweep", "true_variance", ("diff",), "CV_L - CV_NL versus Var[S]",
                                group_by="d", filter=("figure", "fig1")))
    res.charts.append(ChartSpec("cv_sweep", "value", ("diff",), "CV_L - CV_NL versus rate",
                                group_by="sweep", filter=("figure", "fig2")))
    return res


def trend_checks(rows, trend_d: float, trend_k: float):
    """(ok, description) for the two monotonicity trends of the CV sweep."""
    col = {h: i for i, h in enumerate(CV_HEADER)}
    by_k = sorted((r[col["k"]], r[col["diff"]]) for r in rows
                  if r[col["figure"]] == "fig1" and r[col["d"]] == trend_d)
    by_d = sorted((r[col["d"]], r[col["diff"]]) for r in rows
                  if r[col["figure"]] == "fig1_k_slice")
    inc = all(b[1] >= a[1] for a, b in zip(by_k, by_k[1:]))
    dec = all(b[1] <= a[1] for a, b in zip(by_d, by_d[1:]))
    return [
        (inc, f"diff nondecreasing in k at d={trend_d:g}: " + ", ".join(f"{k:g}:{v:.5f}" for k, v in by_k)),
        (dec, f"diff nonincreasing in d at k={trend_k:.4g}: " + ", ".join(f"{d:.4g}:{v:.5f}" for d, v in by_d)),
    ]


# ---------------------------------------------------------------- check

def run_check(cfg: RunConfig, threads: int = 1) -> StudyResult:
    params, measure, source = _setup(cfg)
    a, b, c = params.a, params.b, params.c
    res = StudyResult()
    kap = an.estimate_kappa(params, source, measure, cfg.check.max_order, cfg.check.grid_size)
    quad = build_quadrature(measure, cfg.quad_nodes())
    basis = build_basis(measure, quad, cfg.galerkin.K)
    growth = check_basis_growth(basis, cfg.check.growth_grid)
    consts = an.theorem_constants(params, kap.kappa, kap.r, kap.R, basis.growth_exponent_p, measure.width)

    rows = []
    for i in range(kap.lhs.size):
        ok = bool(kap.lhs[i] <= kap.rhs[i] * (1 + 1e-12))
        rows.append(["rinf_derivative_bound", i, kap.lhs[i], kap.rhs[i], int(ok), kap.margins[i]])
    rows.append(["rinf_positive_range", 0, kap.r, kap.R, int(not kap.degenerate), kap.r])
    sup = growth.max_ratio_per_degree * basis.growth_constant * (np.arange(basis.size) + 1.0) ** basis.growth_exponent_p
    for i in range(basis.size):
        bound = basis.growth_constant * (i + 1.0) ** basis.growth_exponent_p
        rows.append(["basis_growth", i, sup[i], bound, int(growth.max_ratio_per_degree[i] <= 1 + 1e-6), bound - sup[i]])
    hard_fail = kap.degenerate or not growth.passed
    if kap.degenerate:
        res.summary.append("degenerate: r_inf vanishes somewhere on the interval; L and nu undefined")
        rows.append(["rinf_variance_stability", 0, math.nan, math.nan, 0, math.nan])
        stab_pass = False
    else:
        rinf_coeffs = _rinf_coeffs(params, source, basis, quad)
        stab = an.check_stability_condition(rinf_coeffs, consts.q, consts.A)
        rows.append(["rinf_variance_stability", 0, stab.lhs, stab.rhs, int(stab.passed), stab.margin])
        stab_pass = stab.passed
    hard_fail = hard_fail or not stab_pass
    res.tables["check"] = (CHECK_HEADER, rows)

    thresholds = [
        ("pointwise_rho0_sq_max", b**2 / (4 * c**2)),
        ("pointwise_m0_sq_max", a**2 / (4 * c**2)),
        ("sobolev_rho0_sq_max", b**2 * consts.C0_sens),
        ("sobolev_m0_sq_max", a**2 * consts.C0_sens),
        ("galerkin_mu_rho0_sq_max", b**2 * consts.C0_hat),
        ("galerkin_mu_m0_sq_max", a**2 * consts.C0_hat),
        ("spectral_sobolev_rho0_sq_max", b**2 * consts.C0_spec),
        ("spectral_sobolev_m0_sq_max", a**2 * consts.C0_spec),
        ("spectral_mu_rho0_sq_max", b**2 * consts.C0_hat_spec),
        ("spectral_mu_m0_sq_max", a**2 * consts.C0_hat_spec),
    ]
    const_rows = [[k, float(v)] for k, v in consts.as_rows()]
    const_rows.append(["growth_min_exponent", growth.min_exponent])
    const_rows.append(["growth_exceeds_declared_unit_constant", int(growth.exceeds_declared)])
    const_rows += [[k, v] for k, v in thresholds]
    res.tables["constants"] = (["name", "value"], const_rows)

    res.summary.append(f"A = {consts.A:.7f}")
    res.summary.append(f"kappa = {kap.kappa:.10g}, r = {kap.r:.10g}, R = {kap.R:.10g}")
    res.summary.append(f"L = {consts.L:.10g}, nu = {consts.nu:.10g}, p = {consts.p:g}, q = {consts.q:g}")
    res.summary.append(f"C0 (decay) = {consts.C0_sens:.6g}, C0 (spectral) = {consts.C0_spec:.6g}, "
                       f"C0_hat = {consts.C0_hat:.6g}, C_S = {consts.C_S:.6g}")
    res.summary.append(f"basis growth: pass={growth.passed}, smallest unit-constant exponent "
                       f"{growth.min_exponent:.4f} (declared p={basis.growth_exponent_p:g}, "
                       f"constant {basis.growth_constant:.4g})")
    res.summary.append(f"r_inf variance stability condition: {'pass' if stab_pass else 'FAIL'}")
    for k, v in thresholds:
        res.summary.append(f"threshold {k} = {v:.6g}")
    if hard_fail:
        res.flag(EXIT_FAIL)
    return res


# ---------------------------------------------------------------- tensors

def run_tensors(cfg: RunConfig, threads: int = 1) -> StudyResult:
    params, measure, source = _setup(cfg)
    res = StudyResult()
    quad = build_quadrature(measure, cfg.quad_nodes())
    basis = build_basis(measure, quad, cfg.galerkin.K)
    system = GalerkinSystem(basis, quad, params, source)
    kap = an.estimate_kappa(params, source, measure, 0, cfg.check.grid_size)
    n = basis.size
    T = system.triple
    rows = [["S", l, i, j, T[l, i, j]] for l in range(n) for i in range(n) for j in range(n)]
    rows += [["Upsilon", -1, i, j, system.upsilon[i, j]] for i in range(n) for j in range(n)]
    res.tables["tensors"] = (["tensor", "l", "i", "j", "value"], rows)

    eig = np.linalg.eigvalsh(system.upsilon)
    lo, hi = kap.r - 1e-8, kap.R + 1e-8
    inside = (eig >= lo) & (eig <= hi)
    res.tables["upsilon_eigenvalues"] = (
        ["index", "eigenvalue", "lower_bound", "upper_bound", "within"],
        [[i, float(e), kap.r, kap.R, int(ok)] for i, (e, ok) in enumerate(zip(eig, inside))],
    )
    s0_dev = float(np.max(np.abs(T[0] - np.eye(n))))
    res.summary.append(f"K={basis.K}, {quad.order} quadrature nodes")
    res.summary.append(f"max |S[0] - I| = {s0_dev:.3e}")
    res.summary.append(f"Upsilon eigenvalues in [{eig.min():.10g}, {eig.max():.10g}]; "
                       f"r_inf range [{kap.r:.10g}, {kap.R:.10g}]")
    if not inside.all():
        res.flag(EXIT_FAIL)
        res.summary.append("FAIL: Upsilon spectrum leaves the r_inf range")
    return res


STUDIES = {
    "decay": run_decay,
    "converge": run_converge,
    "cv-sweep": run_cv_sweep,
    "check": run_check,
    "tensors": run_tensors,
}
