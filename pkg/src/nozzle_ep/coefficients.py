"""Linearized coefficients around the background and around a frozen state.

Two families enter the hyperbolic-elliptic solve:

  - radial ("bar") profiles from the background alone:
        abar11 = 1 - Ubar^2/cbar^2 < 0,   abar22 = 1/hat r^2,
        abar1, bbar1, bbar2 (first-order operator),  cbar1, cbar2 (Poisson),

  - tensor ("state") fields frozen at P = (U*, V*, Phi*) and K*:
        A11 = c^2 - U^2, A22 = (c^2 - V^2)/hat r, A12 = -UV/hat r, A21 = -UV,
    each divided by cbar^2, with the frozen sound speed
        c^2 = (gamma - 1)(K + Phi - (U^2+V^2)/2).

The state coefficients are stored both in first-order form (hat_*) used by
the divergence-potential shift, and in the second-order form (a11, a12,
a22, a2) that multiplies the potential in the Galerkin reduction.
"""

from dataclasses import dataclass

import numpy as np

from .background import BackgroundSolution
from .core import GasConfig, Grid, NozzleGeometry
from .errors import InvalidBackgroundError, VacuumError


@dataclass(frozen=True)
class BarCoefficients:
    """Radial coefficient profiles of the linearized operators."""

    r_nodes: np.ndarray
    a1: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    a11: np.ndarray
    a22: np.ndarray
    hweight: np.ndarray  # rhobar/cbar^2 - 1/(2 hat r^2)
    mu0_prime: float     # band parameter: -1/mu0' <= abar11 <= -mu0'

    @property
    def supersonic_ok(self):
        return bool(np.all(self.a11 < 0.0))


def assemble_bar_coefficients(
    bg: BackgroundSolution, cfg: GasConfig, geo: NozzleGeometry
) -> BarCoefficients:
    """Evaluate the seven radial profiles nodewise from the background."""
    if np.any(bg.csq <= 0.0):
        raise InvalidBackgroundError("background sound speed must be positive")
    gamma = cfg.gamma
    hat = bg.hat
    U = bg.U
    csq = bg.csq
    Up = bg.dU_dr()

    a11 = 1.0 - U**2 / csq
    a22 = 1.0 / hat**2
    # Two equivalent closed forms exist for abar1; we use the Mach-number
    # form, the momentum-balance form is cross-checked in the tests.
    a1 = (U**2 / csq) * ((gamma - 1.0) / hat - gamma * Up / U) - Up / U
    b1 = -(gamma - 1.0) * U / (hat * csq) + (gamma - 1.0) * Up / csq
    b2 = U / csq
    c1 = bg.rho * U / csq
    c2 = -bg.rho / csq
    hweight = bg.rho / csq - 1.0 / (2.0 * hat**2)

    neg = -a11
    mu0_prime = float(min(neg.min(), 1.0 / neg.max())) if np.all(neg > 0) else 0.0
    return BarCoefficients(
        r_nodes=bg.r_nodes, a1=a1, b1=b1, b2=b2, c1=c1, c2=c2,
        a11=a11, a22=a22, hweight=hweight, mu0_prime=mu0_prime,
    )


def bar_a1_alternative(bg: BackgroundSolution, cfg: GasConfig):
    """Second closed form of abar1 (momentum-balance flavor); test oracle."""
    gamma = cfg.gamma
    Up = bg.dU_dr()
    return ((gamma - 1.0) * bg.U**2 - bg.csq) / (bg.hat * bg.csq) - (
        (gamma + 1.0) * bg.U * Up + bg.E
    ) / bg.csq


@dataclass(frozen=True)
class StateCoefficients:
    """Frozen-state coefficient fields on the tensor grid.

    First-order form (multiplies U_r, V_theta, U_theta, V_r):
        hat_a11, hat_a22, hat_a12, hat_a21
    Second-order form (multiplies psi_rr, psi_thetatheta, psi_rtheta, psi_theta):
        a11 = hat_a11, a22 = hat_a22/hat r, a12 = hat_a12, a2 = hat_a12/hat r
    """

    hat_a11: np.ndarray
    hat_a12: np.ndarray
    hat_a21: np.ndarray
    hat_a22: np.ndarray
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    a2: np.ndarray
    csq_frozen: np.ndarray
    deviation_a11: float
    deviation_a22: float

    def bounds(self):
        """Measured band constants (kappa0, kappa1) for a11 < 0 < a22."""
        neg = -self.a11
        kappa0 = float(min(neg.min(), 1.0 / neg.max())) if np.all(neg > 0) else 0.0
        pos = self.a22
        kappa1 = float(min(pos.min(), 1.0 / pos.max())) if np.all(pos > 0) else 0.0
        return kappa0, kappa1


def sound_speed_squared(K, U, V, Phi, gamma):
    """c^2 = (gamma - 1)(Phi - (U^2 + V^2)/2 + K) for total fields."""
    return (gamma - 1.0) * (Phi - (U**2 + V**2) / 2.0 + K)


def assemble_state_coefficients(
    bg: BackgroundSolution,
    frozen_U,
    frozen_V,
    frozen_Phi,
    frozen_K,
    cfg: GasConfig,
    geo: NozzleGeometry,
    grid: Grid,
) -> StateCoefficients:
    """Coefficient fields frozen at the perturbation state (U*, V*, Phi*, K*).

    Inputs are perturbation fields; totals are formed against the background
    internally.  Fails if the frozen sound speed loses positivity.
    """
    U = bg.U[:, None] + np.asarray(frozen_U, dtype=float)
    V = np.asarray(frozen_V, dtype=float) * np.ones((grid.Nr, grid.Ntheta))
    Phi = bg.Phi[:, None] + np.asarray(frozen_Phi, dtype=float)
    K = np.asarray(frozen_K, dtype=float) * np.ones((grid.Nr, grid.Ntheta))

    csq = sound_speed_squared(K, U, V, Phi, cfg.gamma)
    if np.any(csq <= 0.0):
        node = np.unravel_index(int(np.argmin(csq)), csq.shape)
        raise VacuumError(
            f"frozen state has nonpositive sound speed at node {node}", node=node
        )
    hat = geo.hat(grid.r_nodes)[:, None]
    cbsq = bg.csq[:, None]

    hat_a11 = (csq - U**2) / cbsq
    hat_a22 = (csq - V**2) / (hat * cbsq)
    hat_a12 = -U * V / (hat * cbsq)
    hat_a21 = -U * V / cbsq

    a11 = hat_a11
    a22 = hat_a22 / hat
    a12 = hat_a12
    a2 = hat_a12 / hat

    bar_a11 = (1.0 - bg.Msq)[:, None]
    bar_a22 = (1.0 / bg.hat**2)[:, None]
    return StateCoefficients(
        hat_a11=hat_a11, hat_a12=hat_a12, hat_a21=hat_a21, hat_a22=hat_a22,
        a11=a11, a12=a12, a22=a22, a2=a2, csq_frozen=csq,
        deviation_a11=float(np.abs(a11 - bar_a11).max()),
        deviation_a22=float(np.abs(a22 - bar_a22).max()),
    )
