"""Radially symmetric supersonic background flow.

The background is the solution of the ODE initial-value problem

    (Mbar^2)'   = h1(r, Mbar^2, Ebar)
    (hat r Ebar)' = h2(r, Mbar^2, Ebar)
    Phibar'     = -Ebar

marched from the entrance r = 0 toward the throat with classical RK4 on a
fixed uniform step.  Primitive profiles are reconstructed algebraically:

    rhobar = mu0 (hat r^2 Mbar^2)^{-1/(gamma+1)},  mu0 = (J0^2/(gamma e^{S0}))^{1/(gamma+1)}
    Ubar   = J0 / (hat r rhobar),   Pbar = e^{S0} rhobar^gamma.

Phibar is co-integrated with the march rather than post-quadratured so the
pseudo-Bernoulli identity Bbar - Phibar = 0 holds to the RK4 error level
(a trapezoid reconstruction leaves O(h^2) ~ 1e-7 drift, which is too coarse
for the invariant checks).
"""

from dataclasses import dataclass

import numpy as np

from .core import GasConfig, Grid, InletState, NozzleGeometry
from .errors import (
    DivergenceError,
    IntegrationAbortError,
    NozzleEPError,
    SonicSingularityError,
)

SONIC_GUARD = 1e-8
BLOWUP_GUARD = 1e6


@dataclass(frozen=True)
class BackgroundSolution:
    """Sampled radial profiles of the supersonic background."""

    r_nodes: np.ndarray
    Msq: np.ndarray
    E: np.ndarray
    rho: np.ndarray
    U: np.ndarray
    P: np.ndarray
    Phi: np.ndarray
    csq: np.ndarray
    mu0: float
    Bern: np.ndarray
    gamma: float
    S0: float
    J0: float
    b0: float
    r2: float

    @property
    def hat(self):
        return self.r2 - self.r_nodes

    def dU_dr(self):
        """Analytic Ubar' from the reduced momentum balance (no finite differences)."""
        return self.U * self.E / (self.csq * (1.0 - self.Msq)) + self.U / (
            self.hat * (1.0 - self.Msq)
        )

    def mass_flux_drift(self):
        """max |hat r rhobar Ubar - J0| / J0 over the nodes."""
        return float(np.abs(self.hat * self.rho * self.U - self.J0).max() / self.J0)

    def bernoulli_defect(self):
        """max |Bbar - Phibar|; nontrivial because Phibar comes from integration."""
        return float(np.abs(self.Bern - self.Phi).max())


def _mu0(cfg: GasConfig, inlet: InletState, geo: NozzleGeometry):
    S0 = inlet.S0_of(cfg.gamma)
    J0 = inlet.J0(geo)
    return (J0**2 / (cfg.gamma * np.exp(S0))) ** (1.0 / (cfg.gamma + 1.0))


def rhs(r, Msq, rE, cfg: GasConfig, inlet: InletState, geo: NozzleGeometry):
    """Right-hand sides (h1, h2) of the reduced background system.

    Takes the state (Mbar^2, hat r Ebar); the field itself is recovered as
    Ebar = rE / hat r.  Raises near the sonic line where h1 degenerates.
    """
    if Msq <= 0.0:
        raise NozzleEPError(f"Msq must be positive, got {Msq}")
    if abs(Msq - 1.0) < SONIC_GUARD:
        raise SonicSingularityError(f"M^2 = {Msq} within {SONIC_GUARD} of sonic")
    gamma = cfg.gamma
    hat = geo.r2 - r
    if hat <= 0.0:
        raise NozzleEPError("hat r must remain positive")
    E = rE / hat
    S0 = inlet.S0_of(gamma)
    mu0 = _mu0(cfg, inlet, geo)
    csq = gamma * np.exp(S0) * mu0 ** (gamma - 1.0) * (hat**2 * Msq) ** (
        -(gamma - 1.0) / (gamma + 1.0)
    )
    dMsq = Msq / (1.0 - Msq) * (
        (gamma + 1.0) * E / csq + (2.0 + (gamma - 1.0) * Msq) / hat
    )
    rho = mu0 * (hat**2 * Msq) ** (-1.0 / (gamma + 1.0))
    drE = -hat * (rho - cfg.b0)
    return dMsq, drE


def integrate_background(
    cfg: GasConfig, inlet: InletState, geo: NozzleGeometry, Nr: int
) -> BackgroundSolution:
    """March (Mbar^2, hat r Ebar, Phibar) over [0, R] with fixed-step RK4."""
    if Nr < 3:
        raise NozzleEPError("need Nr >= 3")
    gamma = cfg.gamma
    S0 = inlet.S0_of(gamma)
    J0 = inlet.J0(geo)
    mu0 = _mu0(cfg, inlet, geo)
    eS0 = np.exp(S0)

    r = np.linspace(0.0, geo.R, Nr)
    h = r[1] - r[0]
    # Phibar(0) equals the entrance Bernoulli constant, which makes the
    # pseudo-Bernoulli difference vanish identically.
    phi0 = inlet.U0**2 / 2.0 + gamma * eS0 / (gamma - 1.0) * (
        J0 / (geo.r2 * inlet.U0)
    ) ** (gamma - 1.0)

    def f(ri, y):
        dMsq, drE = rhs(ri, y[0], y[1], cfg, inlet, geo)
        E = y[1] / (geo.r2 - ri)
        return np.array([dMsq, drE, -E])

    Y = np.empty((Nr, 3))
    Y[0] = (inlet.M0sq(gamma), geo.r2 * inlet.E_entrance, phi0)
    for i in range(Nr - 1):
        y = Y[i]
        try:
            k1 = f(r[i], y)
            k2 = f(r[i] + h / 2.0, y + h / 2.0 * k1)
            k3 = f(r[i] + h / 2.0, y + h / 2.0 * k2)
            k4 = f(r[i] + h, y + h * k3)
        except SonicSingularityError as exc:
            raise IntegrationAbortError(
                f"sonic crossing near r = {r[i]:.6g}", radius=r[i]
            ) from exc
        Y[i + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(Y[i + 1]).all() or abs(Y[i + 1, 0]) > BLOWUP_GUARD:
            raise DivergenceError(f"background march blew up near r = {r[i+1]:.6g}")
        if Y[i + 1, 0] <= 1.0:
            raise IntegrationAbortError(
                f"sonic crossing near r = {r[i+1]:.6g}", radius=r[i + 1]
            )

    Msq, rE, Phi = Y.T
    hat = geo.r2 - r
    E = rE / hat
    rho = mu0 * (hat**2 * Msq) ** (-1.0 / (gamma + 1.0))
    U = J0 / (hat * rho)
    P = eS0 * rho**gamma
    csq = gamma * eS0 * rho ** (gamma - 1.0)
    Bern = U**2 / 2.0 + gamma * P / ((gamma - 1.0) * rho)
    return BackgroundSolution(
        r_nodes=r, Msq=Msq, E=E, rho=rho, U=U, P=P, Phi=Phi, csq=csq,
        mu0=float(mu0), Bern=Bern, gamma=gamma, S0=S0, J0=J0,
        b0=cfg.b0, r2=geo.r2,
    )


@dataclass(frozen=True)
class ValidationReport:
    """Independent admissibility checks on the entrance data (report-only)."""

    M0sq: float
    supersonic_ok: bool
    log_ratio: float
    log_ratio_bound: float
    log_ratio_ok: bool
    U_threshold: float
    U_threshold_ok: bool

    @property
    def all_ok(self):
        return self.supersonic_ok and self.log_ratio_ok and self.U_threshold_ok

    def as_dict(self):
        return {
            "M0sq": self.M0sq,
            "supersonic_ok": self.supersonic_ok,
            "log_ratio": self.log_ratio,
            "log_ratio_bound": self.log_ratio_bound,
            "log_ratio_ok": self.log_ratio_ok,
            "U_threshold": self.U_threshold,
            "U_threshold_ok": self.U_threshold_ok,
            "all_ok": self.all_ok,
        }


def validate_inlet(cfg: GasConfig, inlet: InletState, geo: NozzleGeometry) -> ValidationReport:
    """Check the three entrance admissibility conditions independently.

    - supersonic entrance M0sq > 1,
    - geometric depth bound ln(r2/r1) < (gamma+1)/(2(gamma-1)),
    - entrance speed above the threshold
      U_a = J0 (gamma e^{S0} / (2 r1^gamma))^{1/(gamma-2)}.
    """
    gamma = cfg.gamma
    M0sq = inlet.M0sq(gamma)
    log_ratio = float(np.log(geo.r2 / geo.r1))
    bound = (gamma + 1.0) / (2.0 * (gamma - 1.0))
    S0 = inlet.S0_of(gamma)
    J0 = inlet.J0(geo)
    Ua = J0 * (gamma * np.exp(S0) / (2.0 * geo.r1**gamma)) ** (1.0 / (gamma - 2.0))
    return ValidationReport(
        M0sq=float(M0sq),
        supersonic_ok=bool(M0sq > 1.0),
        log_ratio=log_ratio,
        log_ratio_bound=float(bound),
        log_ratio_ok=bool(log_ratio < bound),
        U_threshold=float(Ua),
        U_threshold_ok=bool(inlet.U0 > Ua),
    )


def positivity_weight(bg: BackgroundSolution, geo: NozzleGeometry):
    """Energy weight h(r) = rhobar/cbar^2 - 1/(2 hat r^2) and its minimum mu_R.

    mu_R > 0 is what makes the Psi-part of the weighted energy coercive;
    it is implied by the entrance-speed threshold and verified here
    numerically on the computed profile.
    """
    h = bg.rho / bg.csq - 1.0 / (2.0 * bg.hat**2)
    return h, float(h.min())


def critical_entrance_field(
    cfg: GasConfig,
    inlet: InletState,
    geo: NozzleGeometry,
    Nr: int = 257,
    magnitude_hi: float = 1e3,
    tol: float = 1e-6,
    max_bisect: int = 80,
):
    """Bisect for the smallest |E(0)| that keeps Mbar^2 monotone on [0, R].

    Diagnostic stand-in for the threshold field strength of the
    admissibility proposition (which has no closed form).  Scans the signed
    field -|E|; returns the critical magnitude.
    """

    def monotone(mag):
        trial = InletState(inlet.rho0, inlet.U0, inlet.P0, -mag)
        try:
            bg = integrate_background(cfg, trial, geo, Nr)
        except NozzleEPError:
            return False
        return bool(np.all(np.diff(bg.Msq) > 0.0))

    lo, hi = 0.0, magnitude_hi
    if not monotone(hi):
        raise NozzleEPError(f"no monotone profile up to |E(0)| = {magnitude_hi}")
    for _ in range(max_bisect):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if monotone(mid):
            hi = mid
        else:
            lo = mid
    return hi


def background_grid_profiles(bg: BackgroundSolution, grid: Grid):
    """Broadcast the radial profiles onto an (Nr, Ntheta) tensor grid."""
    if len(bg.r_nodes) != grid.Nr or not np.allclose(bg.r_nodes, grid.r_nodes):
        raise NozzleEPError("background not sampled on the grid's r-nodes")
    ones = np.ones(grid.Ntheta)
    return {
        "U": np.outer(bg.U, ones),
        "Phi": np.outer(bg.Phi, ones),
        "rho": np.outer(bg.rho, ones),
        "csq": np.outer(bg.csq, ones),
    }
