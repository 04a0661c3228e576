"""Divergence potential, velocity shift, and curl potential.

The vorticity source f3 is absorbed into a potential phi solving

    phi_rr + phi_tt/hat r^2 - phi_r/hat r = f3/hat r,
    phi_r(0, .) = phi_r(R, .) = 0,   phi(., +-theta0) = 0,

after which the shifted velocity (Ucheck, Vcheck) = (U + phi_t/hat r,
V - phi_r) is curl-free and admits a potential psi with psi_r = Ucheck,
psi_t = hat r Vcheck, anchored at psi(0, -theta0) = 0.

The Dirichlet wall condition is enforced with the half-wave sine basis
zeta_k(theta) = sin(k pi (theta + theta0) / (2 theta0)), k >= 1, which is
exactly the eigenbasis of the odd reflection of the strip onto
(-3 theta0, 3 theta0); solving per mode on the original sector avoids
building the tripled domain.  Each mode is a tridiagonal two-point problem
in r with Neumann ends (ghost-node closure keeps second order).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .core import Grid, NozzleGeometry, fd_d1, trapezoid_weights
from .errors import NotIntegrableError, NozzleEPError, SolverFailureError


@dataclass(frozen=True)
class SineBasis:
    """Orthonormal Dirichlet half-wave sine basis on (-theta0, theta0)."""

    theta0: float
    m: int

    @property
    def eigenvalues(self):
        k = np.arange(1, self.m + 1)
        return (k * np.pi / (2.0 * self.theta0)) ** 2

    def sample(self, theta):
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, self.m + 1)[:, None]
        return np.sqrt(1.0 / self.theta0) * np.sin(
            k * np.pi * (theta[None, :] + self.theta0) / (2.0 * self.theta0)
        )

    def sample_deriv(self, theta):
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, self.m + 1)[:, None]
        return (
            np.sqrt(1.0 / self.theta0)
            * (k * np.pi / (2.0 * self.theta0))
            * np.cos(k * np.pi * (theta[None, :] + self.theta0) / (2.0 * self.theta0))
        )


@dataclass
class DivPotential:
    """Solved divergence potential: field plus its modal representation."""

    phi: np.ndarray
    coeffs: np.ndarray          # (Nr, m) mode profiles
    basis: SineBasis
    grid: Grid

    def dtheta(self):
        """Analytic theta-derivative synthesized from the sine modes."""
        return self.coeffs @ self.basis.sample_deriv(self.grid.theta_nodes)

    def dr(self):
        """Radial derivative of the mode profiles, synthesized."""
        dcoef = fd_d1(self.coeffs, self.grid.dr, axis=0)
        return dcoef @ self.basis.sample(self.grid.theta_nodes)

    def d2r(self):
        from .core import fd_d2

        return fd_d2(self.coeffs, self.grid.dr, axis=0) @ self.basis.sample(
            self.grid.theta_nodes
        )

    def d2theta(self):
        lam = self.basis.eigenvalues
        return -(self.coeffs * lam[None, :]) @ self.basis.sample(
            self.grid.theta_nodes
        )

    def drdtheta(self):
        return fd_d1(self.coeffs, self.grid.dr, axis=0) @ self.basis.sample_deriv(
            self.grid.theta_nodes
        )


def solve_div_potential(f3, geo: NozzleGeometry, grid: Grid, m: int) -> DivPotential:
    """Expand f3 in the sine basis and solve the mode problems tridiagonally.

    Mode k solves  phi_k'' - phi_k'/hat r - lam_k phi_k / hat r^2 = (f3)_k/hat r
    with phi_k'(0) = phi_k'(R) = 0.
    """
    f3 = np.asarray(f3, dtype=float)
    if f3.shape != (grid.Nr, grid.Ntheta):
        raise NozzleEPError("f3 not sampled on the grid")
    basis = SineBasis(geo.theta0, m)
    zeta = basis.sample(grid.theta_nodes)
    w = trapezoid_weights(grid.theta_nodes)
    fk = (f3 * w) @ zeta.T                     # (Nr, m)

    r = grid.r_nodes
    n = grid.Nr
    dr = grid.dr
    hat = geo.hat(r)
    lam = basis.eigenvalues

    coeffs = np.empty((n, m))
    for j in range(m):
        # banded rows: ab[0]=super, ab[1]=diag, ab[2]=sub
        ab = np.zeros((3, n))
        rhs = np.empty(n)
        ab[1, :] = -2.0 / dr**2 - lam[j] / hat**2
        ab[0, 2:] = 1.0 / dr**2 - 1.0 / (2.0 * dr * hat[1:-1])
        ab[2, :-2] = 1.0 / dr**2 + 1.0 / (2.0 * dr * hat[1:-1])
        rhs[1:-1] = fk[1:-1, j] / hat[1:-1]
        # Neumann ghost closure: phi_{-1} = phi_1 kills the phi' term at the wall
        ab[0, 1] = 2.0 / dr**2
        rhs[0] = fk[0, j] / hat[0]
        ab[2, n - 2] = 2.0 / dr**2
        rhs[n - 1] = fk[n - 1, j] / hat[n - 1]
        try:
            coeffs[:, j] = solve_banded((1, 1), ab, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverFailureError(f"mode {j + 1} system singular: {exc}") from exc
        if not np.isfinite(coeffs[:, j]).all():
            raise SolverFailureError(f"mode {j + 1} solve produced non-finite values")

    phi = coeffs @ zeta
    return DivPotential(phi=phi, coeffs=coeffs, basis=basis, grid=grid)


def shift_velocity(U_pert, V_pert, phi, geo: NozzleGeometry, grid: Grid):
    """Shifted pair (Ucheck, Vcheck) = (U + phi_t/hat r, V - phi_r).

    phi may be a DivPotential (analytic modal derivatives) or a raw field
    (finite differences).
    """
    U_pert = np.asarray(U_pert, dtype=float)
    V_pert = np.asarray(V_pert, dtype=float)
    if isinstance(phi, DivPotential):
        phi_t = phi.dtheta()
        phi_r = phi.dr()
    else:
        phi = np.asarray(phi, dtype=float)
        phi_t = fd_d1(phi, grid.dtheta, axis=1)
        phi_r = fd_d1(phi, grid.dr, axis=0)
    hat = geo.hat(grid.r_nodes)[:, None]
    return U_pert + phi_t / hat, V_pert - phi_r


def discrete_curl(U_check, V_check, geo: NozzleGeometry, grid: Grid):
    """(hat r V)_r - U_theta with centered differences."""
    hat = geo.hat(grid.r_nodes)[:, None]
    return fd_d1(hat * V_check, grid.dr, axis=0) - fd_d1(
        U_check, grid.dtheta, axis=1
    )


def _cumtrap(y, h, axis=0):
    y = np.moveaxis(np.asarray(y, dtype=float), axis, 0)
    out = np.zeros_like(y)
    np.cumsum((y[1:] + y[:-1]) * (h / 2.0), axis=0, out=out[1:])
    return np.moveaxis(out, 0, axis)


def curl_potential(U_check, V_check, geo: NozzleGeometry, grid: Grid, curl_tol=1e-6):
    """Line-integrate psi with psi_r = Ucheck, psi_t = hat r Vcheck.

    Path: along r on the lower wall first, then along theta; anchored at
    psi(0, -theta0) = 0.  Rejects fields whose discrete curl (normalized by
    the field scale) exceeds curl_tol.
    """
    U_check = np.asarray(U_check, dtype=float)
    V_check = np.asarray(V_check, dtype=float)
    scale = max(1.0, float(np.abs(U_check).max()), float(np.abs(V_check).max()))
    curl = discrete_curl(U_check, V_check, geo, grid)
    worst = float(np.abs(curl[1:-1, 1:-1]).max()) if grid.Nr > 2 else 0.0
    if worst > curl_tol * scale:
        raise NotIntegrableError(
            f"discrete curl {worst:.3e} exceeds tolerance {curl_tol:.1e} x {scale:.3e}"
        )
    hat = geo.hat(grid.r_nodes)[:, None]
    psi_wall = _cumtrap(U_check[:, :1], grid.dr, axis=0)      # along theta = -theta0
    psi = psi_wall + _cumtrap(hat * V_check, grid.dtheta, axis=1)
    return psi


def curl_potential_cross_path(U_check, V_check, geo: NozzleGeometry, grid: Grid):
    """Same potential integrated theta-first; used to quantify path error."""
    hat = geo.hat(grid.r_nodes)[:, None]
    psi_inlet = _cumtrap(hat[0] * V_check[:1, :], grid.dtheta, axis=1)
    psi = psi_inlet + _cumtrap(U_check, grid.dr, axis=0)
    return psi
