"""Cosine-Galerkin reduction of the hyperbolic-elliptic system and its solver.

Projecting the linearized system

    L1(phi, Psi) = a11 phi_rr + a22 phi_tt + 2 a12 phi_rt + abar1 phi_r
                   + a2 phi_t + bbar1 Psi + bbar2 Psi_r = F1,
    L2(phi, Psi) = Psi_rr + Psi_tt/hat r^2 - Psi_r/hat r
                   + cbar1 phi_r + cbar2 Psi = F2,

onto the Neumann cosine eigenbasis turns it into coupled ODE families in r
for the coefficients (theta_k, nu_k).  The theta family carries both of its
conditions at the entrance (the hyperbolic part marches), the nu family is
a two-point problem (entrance Neumann, exit Dirichlet).  Instead of the
fixed-point integral formulation, the families are discretized by
second-order centered collocation on the shared r-grid and solved as one
global sparse linear system of size 2 (m+1) Nr.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coefficients import BarCoefficients, StateCoefficients
from .core import (
    CosineBasis,
    Grid,
    discrete_norm,
    fd_d1,
    l2_norm,
    line_l2_norm,
    project,
    synthesize,
    trapezoid_weights,
)
from .errors import NozzleEPError, SolverFailureError, UndefinedRatioError


@dataclass
class SpectralBVP:
    """Galerkin-reduced data: per-node coupling matrices and projected sources.

    Coupling matrices are indexed [i, k, j] = <a eta_j, eta_k> at r-node i
    (k = test row, j = trial column).  dnu0 / nuR carry optional
    inhomogeneous data for the nu family so manufactured solutions with
    nonzero exit/entrance traces can be verified; the physical problem
    leaves them at zero.
    """

    basis: CosineBasis
    r_nodes: np.ndarray
    M11: np.ndarray
    M12: np.ndarray
    M22: np.ndarray
    M2: np.ndarray
    abar1: np.ndarray
    bbar1: np.ndarray
    bbar2: np.ndarray
    cbar1: np.ndarray
    cbar2: np.ndarray
    inv_hat: np.ndarray
    inv_hat2: np.ndarray
    F1k: np.ndarray
    F2k: np.ndarray
    gk: np.ndarray
    dnu0: np.ndarray = field(default=None)
    nuR: np.ndarray = field(default=None)
    wall_defect: float = 0.0

    def __post_init__(self):
        m1 = self.basis.m + 1
        if self.dnu0 is None:
            self.dnu0 = np.zeros(m1)
        if self.nuR is None:
            self.nuR = np.zeros(m1)


def _wall_defect(F, grid: Grid):
    """Max one-sided wall theta-derivative of a source field."""
    Ft = fd_d1(F, grid.dtheta, axis=1)
    return float(max(np.abs(Ft[:, 0]).max(), np.abs(Ft[:, -1]).max()))


def galerkin_reduce(
    state: StateCoefficients,
    bar: BarCoefficients,
    F1,
    F2,
    g,
    basis: CosineBasis,
    grid: Grid,
    geo,
    dnu0=None,
    nuR=None,
    wall_rtol=1e-2,
) -> SpectralBVP:
    """Assemble coupling matrices and projected sources for the reduced system.

    The eta_j' pairings use the analytic derivative of the basis.  Source
    fields must be wall-compatible (flat in theta at the walls); the defect
    is measured with one-sided differences and rejected above wall_rtol
    relative to the field scale.
    """
    F1 = np.asarray(F1, dtype=float)
    F2 = np.asarray(F2, dtype=float)
    eta = basis.sample(grid.theta_nodes)
    etap = basis.sample_deriv(grid.theta_nodes)
    w = trapezoid_weights(grid.theta_nodes)

    defect = 0.0
    for F in (F1, F2):
        scale = max(1.0, float(np.abs(F).max()))
        d = _wall_defect(F, grid)
        defect = max(defect, d / scale)
        if d > wall_rtol * scale:
            raise NozzleEPError(
                f"source field violates wall compatibility: defect {d:.3e} "
                f"against scale {scale:.3e}"
            )

    M11 = np.einsum("it,kt,jt,t->ikj", state.a11, eta, eta, w, optimize=True)
    M12 = np.einsum("it,kt,jt,t->ikj", 2.0 * state.a12, eta, etap, w, optimize=True)
    M22 = np.einsum("it,kt,jt,t->ikj", state.a22, eta, eta, w, optimize=True)
    M2 = np.einsum("it,kt,jt,t->ikj", state.a2, eta, etap, w, optimize=True)

    hat = geo.hat(grid.r_nodes)
    return SpectralBVP(
        basis=basis,
        r_nodes=grid.r_nodes,
        M11=M11,
        M12=M12,
        M22=M22,
        M2=M2,
        abar1=bar.a1,
        bbar1=bar.b1,
        bbar2=bar.b2,
        cbar1=bar.c1,
        cbar2=bar.c2,
        inv_hat=1.0 / hat,
        inv_hat2=1.0 / hat**2,
        F1k=project(F1, basis, grid.theta_nodes),
        F2k=project(F2, basis, grid.theta_nodes),
        gk=project(np.asarray(g, dtype=float), basis, grid.theta_nodes),
        dnu0=dnu0,
        nuR=nuR,
        wall_defect=defect,
    )


def solve_spectral_bvp(bvp: SpectralBVP, geo=None, Nr=None):
    """Solve the reduced ODE families as one sparse linear system.

    Split conditions: theta_k(0) = 0 and theta_k'(0) = <g, eta_k> (both at
    the entrance - the hyperbolic part marches), nu_k'(0) = dnu0_k and
    nu_k(R) = nuR_k (two-point - the elliptic part).  One-sided boundary
    stencils are second order to match the interior collocation.
    """
    r = bvp.r_nodes
    n = len(r)
    if Nr is not None and Nr != n:
        raise NozzleEPError("Nr inconsistent with the assembled system")
    m1 = bvp.basis.m + 1
    dr = r[1] - r[0]
    ii = np.arange(1, n - 1)          # interior nodes
    upsilon = bvp.basis.eigenvalues

    size = 2 * m1 * n
    off_nu = m1 * n

    rows, cols, vals = [], [], []

    def add(rw, cl, vl):
        rw, cl, vl = np.broadcast_arrays(
            np.asarray(rw), np.asarray(cl), np.asarray(vl, dtype=float)
        )
        rows.append(rw.ravel())
        cols.append(cl.ravel())
        vals.append(vl.ravel())

    kk = np.arange(m1)
    # --- theta-family interior collocation -------------------------------
    # rows (k, i) for i interior; couple to trial modes j at i-1, i, i+1.
    row_ki = kk[None, :, None] * n + ii[:, None, None]
    col_j = kk[None, None, :] * n
    M11 = bvp.M11[ii]                  # (ni, k, j)
    M12 = bvp.M12[ii]
    stiff = -upsilon[None, None, :] * bvp.M22[ii] + bvp.M2[ii]

    add(row_ki, col_j + (ii - 1)[:, None, None], M11 / dr**2 - M12 / (2.0 * dr))
    add(row_ki, col_j + ii[:, None, None], -2.0 * M11 / dr**2 + stiff)
    add(row_ki, col_j + (ii + 1)[:, None, None], M11 / dr**2 + M12 / (2.0 * dr))

    # diagonal abar1 theta_k' and the nu coupling terms
    row_d = kk[None, :] * n + ii[:, None]
    a1 = bvp.abar1[ii][:, None]
    add(row_d, row_d - 1, -a1 / (2.0 * dr) * np.ones_like(row_d, dtype=float))
    add(row_d, row_d + 1, a1 / (2.0 * dr) * np.ones_like(row_d, dtype=float))
    b2 = bvp.bbar2[ii][:, None]
    b1 = bvp.bbar1[ii][:, None]
    add(row_d, off_nu + row_d - 1, -b2 / (2.0 * dr) * np.ones_like(row_d, dtype=float))
    add(row_d, off_nu + row_d + 1, b2 / (2.0 * dr) * np.ones_like(row_d, dtype=float))
    add(row_d, off_nu + row_d, b1 * np.ones_like(row_d, dtype=float))

    rhs = np.zeros(size)
    rhs[row_d.T.ravel()] = bvp.F1k[ii].T.ravel()

    # --- theta-family boundary rows --------------------------------------
    r0 = kk * n
    add(r0, r0, np.ones(m1))                       # theta_k(0) = 0
    rN = kk * n + (n - 1)
    add(rN, r0, np.full(m1, -3.0 / (2.0 * dr)))    # theta_k'(0) = g_k
    add(rN, r0 + 1, np.full(m1, 4.0 / (2.0 * dr)))
    add(rN, r0 + 2, np.full(m1, -1.0 / (2.0 * dr)))
    rhs[rN] = bvp.gk

    # --- nu-family interior collocation (mode-diagonal) -------------------
    row_nu = off_nu + row_d
    inv_hat = bvp.inv_hat[ii][:, None]
    inv_hat2 = bvp.inv_hat2[ii][:, None]
    c2 = bvp.cbar2[ii][:, None]
    c1 = bvp.cbar1[ii][:, None]
    one = np.ones_like(row_d, dtype=float)
    add(row_nu, row_nu - 1, one / dr**2 + inv_hat / (2.0 * dr))
    add(
        row_nu,
        row_nu,
        -2.0 * one / dr**2 - upsilon[None, :] * inv_hat2 + c2,
    )
    add(row_nu, row_nu + 1, one / dr**2 - inv_hat / (2.0 * dr))
    add(row_nu, row_d - 1, -c1 / (2.0 * dr) * one)
    add(row_nu, row_d + 1, c1 / (2.0 * dr) * one)
    rhs[row_nu.T.ravel()] = bvp.F2k[ii].T.ravel()

    # --- nu-family boundary rows ------------------------------------------
    s0 = off_nu + kk * n
    sN = off_nu + kk * n + (n - 1)
    add(s0, s0, np.full(m1, -3.0 / (2.0 * dr)))    # nu_k'(0) = dnu0_k
    add(s0, s0 + 1, np.full(m1, 4.0 / (2.0 * dr)))
    add(s0, s0 + 2, np.full(m1, -1.0 / (2.0 * dr)))
    rhs[s0] = bvp.dnu0
    add(sN, sN, np.ones(m1))                       # nu_k(R) = nuR_k
    rhs[sN] = bvp.nuR

    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    ).tocsc()
    try:
        lu = spla.splu(A)
        x = lu.solve(rhs)
    except RuntimeError as exc:
        cond = _condition_estimate(A)
        raise SolverFailureError(
            f"sparse factorization failed ({exc}); condition ~ {cond:.3e}",
            condition=cond,
        ) from exc
    if not np.isfinite(x).all():
        cond = _condition_estimate(A)
        raise SolverFailureError(
            f"non-finite solution; condition ~ {cond:.3e}", condition=cond
        )
    theta = x[:off_nu].reshape(m1, n).T
    nu = x[off_nu:].reshape(m1, n).T
    return theta, nu


def _condition_estimate(A):
    try:
        return float(spla.onenormest(A) * spla.onenormest(spla.inv(A.tocsc())))
    except Exception:
        return float("inf")


def synthesize_solution(theta_coeffs, nu_coeffs, basis: CosineBasis, theta_nodes):
    """Tensor synthesis (phi, Psi) = (sum_k theta_k eta_k, sum_k nu_k eta_k)."""
    return (
        synthesize(theta_coeffs, basis, theta_nodes),
        synthesize(nu_coeffs, basis, theta_nodes),
    )


def energy_estimate_ratio(phi, Psi, F1, F2, g, grid: Grid, multiplier=None):
    """Measured stability constant ||(phi,Psi)||_{H^1} / (||F1|| + ||F2|| + ||g||).

    The multiplier argument is accepted for provenance only (a valid G
    certifies that the ratio is bounded); it does not enter the number.
    """
    den = (
        l2_norm(np.asarray(F1, dtype=float), grid)
        + l2_norm(np.asarray(F2, dtype=float), grid)
        + line_l2_norm(np.asarray(g, dtype=float), grid.theta_nodes)
    )
    if den < 1e-300:
        raise UndefinedRatioError("energy ratio undefined for zero data")
    num = np.hypot(discrete_norm(phi, grid, 1), discrete_norm(Psi, grid, 1))
    return float(num / den)


def manufactured_mode1_case(bar: BarCoefficients, basis: CosineBasis, grid: Grid, geo, case="quadratic"):
    """Exact single-mode verification problem with background coefficients.

    The "quadratic" case is theta_1(r) = r^2, nu_1(r) = (R - r)^2, whose nu
    entrance slope -2R enters as inhomogeneous boundary data.  Centered
    second-order stencils are exact on quadratics, so this case checks the
    assembly to round-off; the "trig" case theta_1 = r^2 cos(3r/R),
    nu_1 = (R-r)^2 cos(2(R-r)/R) has nonvanishing truncation error and is
    what the order-of-convergence study measures.
    Returns (bvp, exact theta profile, exact nu profile).
    """
    if basis.m < 1:
        raise NozzleEPError("need at least mode 1")
    r = grid.r_nodes
    R = geo.R
    hat = geo.hat(r)
    ups1 = basis.eigenvalues[1]

    if case == "quadratic":
        th = r**2
        nu = (R - r) ** 2
        thp, thpp = 2.0 * r, 2.0 * np.ones_like(r)
        nup, nupp = -2.0 * (R - r), 2.0 * np.ones_like(r)
    elif case == "trig":
        a, b = 3.0 / R, 2.0 / R
        s = R - r
        th = r**2 * np.cos(a * r)
        thp = 2.0 * r * np.cos(a * r) - a * r**2 * np.sin(a * r)
        thpp = (
            (2.0 - a**2 * r**2) * np.cos(a * r) - 4.0 * a * r * np.sin(a * r)
        )
        nu = s**2 * np.cos(b * s)
        # d/dr = -d/ds
        nup = -(2.0 * s * np.cos(b * s) - b * s**2 * np.sin(b * s))
        nupp = (2.0 - b**2 * s**2) * np.cos(b * s) - 4.0 * b * s * np.sin(b * s)
    else:
        raise NozzleEPError(f"unknown manufactured case '{case}'")

    a11 = bar.a11
    F1_1 = a11 * thpp + bar.a1 * thp - ups1 * bar.a22 * th + bar.b2 * nup + bar.b1 * nu
    F2_1 = nupp - nup / hat - ups1 * nu / hat**2 + bar.c2 * nu + bar.c1 * thp

    m1 = basis.m + 1
    F1k = np.zeros((grid.Nr, m1))
    F2k = np.zeros((grid.Nr, m1))
    F1k[:, 1] = F1_1
    F2k[:, 1] = F2_1
    gk = np.zeros(m1)
    gk[1] = thp[0]
    dnu0 = np.zeros(m1)
    dnu0[1] = nup[0]
    nuR = np.zeros(m1)
    nuR[1] = nu[-1]

    eta0 = basis.sample(grid.theta_nodes)
    etap0 = basis.sample_deriv(grid.theta_nodes)
    w = trapezoid_weights(grid.theta_nodes)
    diag = lambda prof: np.einsum(
        "i,kt,jt,t->ikj", prof, eta0, eta0, w, optimize=True
    )
    diagp = lambda prof: np.einsum(
        "i,kt,jt,t->ikj", prof, eta0, etap0, w, optimize=True
    )
    bvp = SpectralBVP(
        basis=basis,
        r_nodes=grid.r_nodes,
        M11=diag(bar.a11),
        M12=diagp(np.zeros(grid.Nr)),
        M22=diag(bar.a22),
        M2=diagp(np.zeros(grid.Nr)),
        abar1=bar.a1,
        bbar1=bar.b1,
        bbar2=bar.b2,
        cbar1=bar.c1,
        cbar2=bar.c2,
        inv_hat=1.0 / hat,
        inv_hat2=1.0 / hat**2,
        F1k=F1k,
        F2k=F2k,
        gk=gk,
        dnu0=dnu0,
        nuR=nuR,
    )
    return bvp, th, nu


def manufactured_verification(cfg, inlet, geo, m=8, nr_list=(65, 129, 257), case="trig"):
    """Grid-refinement study on the manufactured single-mode problem.

    Returns a list of dicts with Nr, discrete-H^1 recovery error, the
    energy-estimate ratio, and the observed order between successive grids.
    """
    from .background import integrate_background
    from .coefficients import assemble_bar_coefficients

    basis = CosineBasis(geo.theta0, m)
    ntheta = 8 * m + 1
    rows = []
    prev_err = None
    for Nr in nr_list:
        bg = integrate_background(cfg, inlet, geo, Nr)
        bar = assemble_bar_coefficients(bg, cfg, geo)
        grid = Grid.make(geo, Nr, ntheta)
        bvp, th_exact, nu_exact = manufactured_mode1_case(bar, basis, grid, geo, case)
        th, nu = solve_spectral_bvp(bvp)
        phi, Psi = synthesize_solution(th, nu, basis, grid.theta_nodes)
        eta1 = basis.sample(grid.theta_nodes)[1]
        phi_ex = np.outer(th_exact, eta1)
        Psi_ex = np.outer(nu_exact, eta1)
        err = float(
            np.hypot(
                discrete_norm(phi - phi_ex, grid, 1),
                discrete_norm(Psi - Psi_ex, grid, 1),
            )
        )
        F1 = synthesize(bvp.F1k, basis, grid.theta_nodes)
        F2 = synthesize(bvp.F2k, basis, grid.theta_nodes)
        g = synthesize(bvp.gk, basis, grid.theta_nodes)
        ratio = energy_estimate_ratio(phi, Psi, F1, F2, g, grid)
        order = None if prev_err is None else float(np.log2(prev_err / err))
        rows.append({"Nr": Nr, "h1_error": err, "energy_ratio": ratio, "order": order})
        prev_err = err
    return rows
