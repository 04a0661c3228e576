"""Two-layer fixed-point iteration for the nonlinear problem.

Inner map (velocity/potential, scalars frozen at Q = (S*, K*)):

    1. assemble the nonlinear remainders f1, f2 and the vorticity source f3
       at the frozen state,
    2. absorb f3 into the divergence potential and shift the velocity,
    3. reduce the resulting curl-free hyperbolic-elliptic system to cosine
       Galerkin form and solve for the potentials (varphi, Psi),
    4. undo the boundary lifts and the potential shift to recover the new
       deviation fields (U, V, Phi).

Outer map: run the inner loop to its fixed point, rebuild the total state,
transport the inlet entropy and pseudo-Bernoulli data along the stream
function, and return the new (S, K).  Both loops contract in low-order
norms for small boundary perturbations; the measured ratios are reported.
"""

from dataclasses import dataclass

import numpy as np

from .background import (
    BackgroundSolution,
    integrate_background,
    validate_inlet,
)
from .coefficients import (
    BarCoefficients,
    StateCoefficients,
    assemble_bar_coefficients,
    assemble_state_coefficients,
)
from .core import (
    CosineBasis,
    GasConfig,
    Grid,
    InletState,
    NozzleGeometry,
    discrete_norm,
    fd_d1,
)
from .errors import NonConvergenceError, RegimeFailureError
from .potentials import DivPotential, solve_div_potential
from .residuals import (
    DiagnosticsReport,
    Stopwatch,
    full_system_residual,
    supersonic_margin,
    vorticity_identity_residual,
)
from .spectral import galerkin_reduce, solve_spectral_bvp
from .state import BoundaryData, FlowState, PerturbationState
from .transport import build_stream_function, density_from_state, vorticity_source


@dataclass
class RhsBundle:
    """Everything assemble_rhs produces for one inner-map application."""

    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    g: np.ndarray
    phi_div: DivPotential
    Phi_star: np.ndarray
    gbar: np.ndarray
    state_coeffs: StateCoefficients
    bar: BarCoefficients


@dataclass
class SolverOptions:
    tol_inner: float = 1e-10
    tol_outer: float = 1e-9
    max_iter_inner: int = 50
    max_iter_outer: int = 50
    relax: float = 1.0
    m_div: int = None           # sine truncation; defaults to the cosine m
    delta_mu: float = 0.1       # monitored scalar-set radius
    delta_nu: float = 0.1       # monitored velocity-set radius


def assemble_rhs(
    frozen: PerturbationState,
    bg: BackgroundSolution,
    bd: BoundaryData,
    cfg: GasConfig,
    geo: NozzleGeometry,
    grid: Grid,
    basis: CosineBasis,
    m_div=None,
    bar: BarCoefficients = None,
) -> RhsBundle:
    """Nonlinear remainders, divergence shift, and homogenized sources.

    f1 and f2 collect what the linearization leaves of the quasilinear
    continuity and Poisson equations at the frozen state (quadratic in the
    velocity/potential deviation, linear in (S*, K*) and b - b0); f3 is the
    baroclinic vorticity source.  They are then converted into the sources
    (F1, F2) and inlet slope g of the homogeneous potential problem by the
    divergence shift and the boundary lifts.
    """
    gamma = cfg.gamma
    hat = geo.hat(grid.r_nodes)[:, None]
    t = grid.theta_nodes

    U_tot = bg.U[:, None] + frozen.U
    V_tot = frozen.V
    Phi_tot = bg.Phi[:, None] + frozen.Phi
    S_tot = bg.S0 + frozen.S
    rho_frozen, csq_frozen = density_from_state(
        S_tot, frozen.K, U_tot, V_tot, Phi_tot, cfg
    )

    if bar is None:
        bar = assemble_bar_coefficients(bg, cfg, geo)
    state_coeffs = assemble_state_coefficients(
        bg, frozen.U, frozen.V, frozen.Phi, frozen.K, cfg, geo, grid
    )

    # -- f1: remainder of the quasilinear continuity equation --------------
    Up = bg.dU_dr()[:, None]
    cbsq = bg.csq[:, None]
    A11 = state_coeffs.csq_frozen - U_tot**2
    A11_bar = (bg.csq - bg.U**2)[:, None]
    dPhi_r = -bg.E[:, None] + fd_d1(frozen.Phi, grid.dr, axis=0)
    dPhi_t = fd_d1(frozen.Phi, grid.dtheta, axis=1)
    Bfull = -state_coeffs.csq_frozen * U_tot / hat + U_tot * dPhi_r + V_tot * dPhi_t / hat
    Bbar = (-bg.csq * bg.U / bg.hat - bg.U * bg.E)[:, None]
    f1 = (
        -(A11 - A11_bar) * Up / cbsq
        - Bfull / cbsq
        + Bbar / cbsq
        + bar.a1[:, None] * frozen.U
        + bar.b1[:, None] * frozen.Phi
        + bar.b2[:, None] * fd_d1(frozen.Phi, grid.dr, axis=0)
    )

    # -- f2: remainder of the Poisson equation -----------------------------
    # Derived sign: Phi_rr + ... = (H - Hbar) - (b - b0), so the background-
    # charge perturbation enters as -(b - b0).
    f2 = (
        rho_frozen
        - bg.rho[:, None]
        - (bd.b_field - cfg.b0)
        + bar.c1[:, None] * frozen.U
        + bar.c2[:, None] * frozen.Phi
    )

    # -- f3 and the divergence potential ------------------------------------
    f3 = vorticity_source(S_tot, frozen.K, rho_frozen, U_tot, geo, grid, cfg)
    mdiv = basis.m if m_div is None else m_div
    phi_div = solve_div_potential(f3, geo, grid, mdiv)

    frak_f1 = (
        f1
        - state_coeffs.hat_a21 * phi_div.d2r()
        + state_coeffs.hat_a12 * phi_div.d2theta() / hat
        + (state_coeffs.hat_a11 / hat - state_coeffs.hat_a22) * phi_div.drdtheta()
        + (state_coeffs.hat_a11 / hat**2 + bar.a1[:, None] / hat) * phi_div.dtheta()
    )
    frak_f2 = f2 + bar.c1[:, None] * phi_div.dtheta() / hat

    # -- boundary lifts ------------------------------------------------------
    E0 = bg.E[0]
    E_en = np.asarray(bd.E_en(t), dtype=float)
    Phi_ex = np.asarray(bd.Phi_ex(t), dtype=float)
    V_en = np.asarray(bd.V_en(t), dtype=float)
    U_en = np.asarray(bd.U_en(t), dtype=float)
    Phi_star = (grid.r_nodes[:, None] - geo.R) * (E0 - E_en)[None, :] + (
        Phi_ex - bg.Phi[-1]
    )[None, :]

    F1 = (
        frak_f1
        - geo.r2 * state_coeffs.a22 * bd.dV_en_eval(t)[None, :]
        - state_coeffs.a2 * geo.r2 * V_en[None, :]
        - bar.b1[:, None] * Phi_star
        - bar.b2[:, None] * (E0 - E_en)[None, :]
    )
    F2 = (
        frak_f2
        - (
            (geo.R - grid.r_nodes)[:, None] * bd.d2E_en_eval(t)[None, :]
            + bd.d2Phi_ex_eval(t)[None, :]
        )
        / hat**2
        + (E0 - E_en)[None, :] / hat
        - bar.c2[:, None] * Phi_star
    )
    g = U_en - bg.U[0] + phi_div.dtheta()[0] / geo.r2

    gbar = np.zeros(grid.Ntheta)
    np.cumsum(
        (geo.r2 * V_en[1:] + geo.r2 * V_en[:-1]) * (grid.dtheta / 2.0), out=gbar[1:]
    )
    return RhsBundle(
        f1=f1, f2=f2, f3=f3, F1=F1, F2=F2, g=g,
        phi_div=phi_div, Phi_star=Phi_star, gbar=gbar,
        state_coeffs=state_coeffs, bar=bar,
    )


def inner_map_T1(
    QS,
    QK,
    current: PerturbationState,
    bg: BackgroundSolution,
    bd: BoundaryData,
    cfg: GasConfig,
    geo: NozzleGeometry,
    grid: Grid,
    basis: CosineBasis,
    opts: SolverOptions = None,
) -> tuple[PerturbationState, dict]:
    """One application of the velocity/potential map at frozen scalars."""
    opts = opts or SolverOptions()
    frozen = PerturbationState(
        U=current.U, V=current.V, Phi=current.Phi,
        S=np.asarray(QS, dtype=float), K=np.asarray(QK, dtype=float),
    )
    bundle = assemble_rhs(frozen, bg, bd, cfg, geo, grid, basis, opts.m_div)
    bvp = galerkin_reduce(
        bundle.state_coeffs, bundle.bar, bundle.F1, bundle.F2, bundle.g,
        basis, grid, geo,
    )
    theta_c, nu_c = solve_spectral_bvp(bvp)

    eta = basis.sample(grid.theta_nodes)
    etap = basis.sample_deriv(grid.theta_nodes)
    hat = geo.hat(grid.r_nodes)[:, None]

    # psi = varphi + gbar; Ucheck = psi_r, Vcheck = psi_theta / hat r,
    # and gbar' = r2 V_en
    dtheta_c = fd_d1(theta_c, grid.dr, axis=0)
    U_check = dtheta_c @ eta
    V_en = np.asarray(bd.V_en(grid.theta_nodes), dtype=float)
    V_check = (theta_c @ etap + geo.r2 * V_en[None, :]) / hat
    Phi_dev = nu_c @ eta + bundle.Phi_star

    U_new = U_check - bundle.phi_div.dtheta() / hat
    V_new = V_check + bundle.phi_div.dr()

    new = PerturbationState(U=U_new, V=V_new, Phi=Phi_dev, S=frozen.S, K=frozen.K)
    info = {
        "wall_defect": bvp.wall_defect,
        "set_radius_flag": bool(
            new.velocity_potential_norm(grid) > opts.delta_nu
        ),
    }
    return new, info


def inner_fixed_point(
    QS,
    QK,
    bg,
    bd,
    cfg,
    geo,
    grid,
    basis,
    opts: SolverOptions = None,
    start: PerturbationState = None,
):
    """Iterate the inner map until the low-order increment drops below tol.

    Returns (fixed point, info) where info carries the increment history and
    the measured contraction ratios.
    """
    opts = opts or SolverOptions()
    current = start.copy() if start is not None else PerturbationState.zero(grid)
    increments, ratios = [], []
    flag = False
    wall_defect = 0.0
    for _ in range(opts.max_iter_inner):
        new, info = inner_map_T1(QS, QK, current, bg, bd, cfg, geo, grid, basis, opts)
        flag = flag or info["set_radius_flag"]
        wall_defect = max(wall_defect, info["wall_defect"])
        if opts.relax != 1.0:
            new = PerturbationState(
                U=current.U + opts.relax * (new.U - current.U),
                V=current.V + opts.relax * (new.V - current.V),
                Phi=current.Phi + opts.relax * (new.Phi - current.Phi),
                S=new.S, K=new.K,
            )
        inc = new.low_order_distance(current, grid)
        increments.append(inc)
        if len(increments) >= 2 and increments[-2] > 0:
            ratios.append(increments[-1] / increments[-2])
        current = new
        if inc < opts.tol_inner:
            return current, {
                "increments": increments,
                "ratios": ratios,
                "set_radius_flag": flag,
                "wall_defect": wall_defect,
            }
    raise NonConvergenceError(
        f"inner loop did not reach {opts.tol_inner} in {opts.max_iter_inner} "
        f"iterations (last increment {increments[-1]:.3e})",
        history=increments,
    )


def outer_map_T2(
    QS, QK, bg, bd, cfg, geo, grid, basis, opts: SolverOptions = None, start=None
):
    """Inner fixed point, then transport of the inlet scalars.

    Returns (S_new, K_new, inner fixed point, inner info).  The stream
    function is built with the density frozen at (S*, K*), matching the map
    whose fixed point the outer loop seeks.
    """
    opts = opts or SolverOptions()
    inner, info = inner_fixed_point(
        QS, QK, bg, bd, cfg, geo, grid, basis, opts, start=start
    )
    U_tot = bg.U[:, None] + inner.U
    V_tot = inner.V
    Phi_tot = bg.Phi[:, None] + inner.Phi
    rho_frozen, _ = density_from_state(
        bg.S0 + np.asarray(QS, dtype=float), np.asarray(QK, dtype=float),
        U_tot, V_tot, Phi_tot, cfg,
    )
    stream = build_stream_function(rho_frozen, U_tot, V_tot, geo, grid)
    theta_star = stream.invert_inlet(stream.w)
    S_new = np.asarray(bd.S_en(theta_star), dtype=float) - bg.S0
    K_new = np.asarray(bd.K_en(theta_star), dtype=float)
    return S_new, K_new, inner, info


def solve_problem(
    cfg: GasConfig,
    geo: NozzleGeometry,
    inlet: InletState,
    bd: BoundaryData,
    grid: Grid,
    basis: CosineBasis,
    opts: SolverOptions = None,
    bg: BackgroundSolution = None,
) -> tuple[FlowState, DiagnosticsReport]:
    """Full nonlinear solve: outer loop over the scalar transport map."""
    opts = opts or SolverOptions()
    watch = Stopwatch()
    report = DiagnosticsReport()

    checks = validate_inlet(cfg, inlet, geo)
    if not checks.all_ok:
        raise RegimeFailureError(f"inlet validation failed: {checks.as_dict()}")
    if bg is None:
        bg = integrate_background(cfg, inlet, geo, grid.Nr)

    defects = bd.compatibility_defects(grid)
    report.compatibility_defect = max(defects.values())

    s1, s2, s3, sigma = bd.sigma(bg, cfg, grid)
    report.sigma1, report.sigma2, report.sigma3, report.sigma = s1, s2, s3, sigma

    QS = np.zeros((grid.Nr, grid.Ntheta))
    QK = np.zeros((grid.Nr, grid.Ntheta))
    warm = None
    outer_incs = []
    inner_total = 0
    first_inner_info = None
    set_radius = False
    wall_defect = 0.0
    inner = PerturbationState.zero(grid)
    for n in range(1, opts.max_iter_outer + 1):
        S_new, K_new, inner, info = outer_map_T2(
            QS, QK, bg, bd, cfg, geo, grid, basis, opts, start=warm
        )
        inner_total += len(info["increments"])
        if first_inner_info is None:
            first_inner_info = info
        set_radius = set_radius or info["set_radius_flag"]
        wall_defect = max(wall_defect, info["wall_defect"])
        inc = float(
            np.hypot(
                discrete_norm(S_new - QS, grid, 1), discrete_norm(K_new - QK, grid, 1)
            )
        )
        outer_incs.append(inc)
        QS, QK = S_new, K_new
        warm = inner
        report.outer_iterations = n
        if inc < opts.tol_outer:
            break
    else:
        raise NonConvergenceError(
            f"outer loop did not reach {opts.tol_outer} in "
            f"{opts.max_iter_outer} iterations",
            history=outer_incs,
        )

    final = PerturbationState(U=inner.U, V=inner.V, Phi=inner.Phi, S=QS, K=QK)
    flow = FlowState.from_perturbation(bg, final, grid, cfg)

    report.inner_iterations_total = inner_total
    report.inner_history = first_inner_info["increments"]
    report.outer_history = outer_incs
    # cold-start inner ratios, then the outer-loop ratios
    report.contraction_ratios = list(first_inner_info["ratios"]) + [
        outer_incs[i + 1] / outer_incs[i]
        for i in range(len(outer_incs) - 1)
        if outer_incs[i] > 0
    ]
    report.set_radius_flag = bool(
        set_radius or final.scalar_norm(grid) > opts.delta_mu
    )
    report.wall_defect = wall_defect
    report.deviation_velocity_potential = final.velocity_potential_norm(grid)
    report.deviation_scalars = final.scalar_norm(grid)
    report.residuals = full_system_residual(flow, cfg, geo, b_field=bd.b_field)
    report.vorticity_residual = vorticity_identity_residual(flow, cfg, geo)
    report.kappa = supersonic_margin(flow, cfg)
    if report.kappa <= 0.0:
        raise RegimeFailureError(
            f"converged state lost the supersonic margin (kappa = {report.kappa})"
        )
    hat = geo.hat(grid.r_nodes)[:, None]
    report.mass_flux_drift = float(
        np.abs(hat * flow.rho * flow.U - bg.J0).max() / bg.J0
    )
    report.elapsed_seconds = watch.elapsed()
    return flow, report
