"""Riccati multiplier for the weighted energy identity.

The positive weight G(r) must satisfy

    -G' + 2 p G - q G^2 - h = lambda0,   G > 0 on [0, R],

with conservative constants (p, q, h) extracted from the linearized
coefficients.  Both closed-form branches are implemented:

    tan branch  (h q - p^2 > 0):
        G = chi tan(pi/2 - lambda0 - q chi r) + p/q,
        chi = ((h + lambda0) q - p^2)^{1/2} / q,
    cot branch  (p^2 - h q > 0):
        G = xi^{1/2} cot(xi + q xi^{1/2} r) + p/q,
        xi = (lambda0 - z*)/q,  z* = (p^2 - h q)/q.

chi is fixed by requiring the ODE to hold exactly (the amplitude that makes
q chi^2 = h + lambda0 - p^2/q); the cot phase constant is the dimensionless
xi itself, exactly as printed in the source construction, and is validated
a posteriori through the Riccati residual.
"""

from dataclasses import dataclass

import numpy as np

from .coefficients import BarCoefficients, StateCoefficients
from .core import Grid, NozzleGeometry, fd_d1
from .errors import DomainTooDeepError, NozzleEPError, SlackTooSmallError

BRANCH_TIE_EPS = 1e-12


@dataclass(frozen=True)
class MultiplierG:
    """Sampled multiplier profile with its construction data."""

    lambda0: float
    p: float
    q: float
    h: float
    branch: str            # "tan" or "cot"
    amplitude: float       # chi for tan, xi for cot
    r_nodes: np.ndarray
    G: np.ndarray
    Rbar: float

    def evaluate(self, r):
        """Closed-form G(r)."""
        r = np.asarray(r, dtype=float)
        if self.branch == "tan":
            return self.amplitude * np.tan(
                np.pi / 2.0 - self.lambda0 - self.q * self.amplitude * r
            ) + self.p / self.q
        s = np.sqrt(self.amplitude)
        return s / np.tan(self.amplitude + self.q * s * r) + self.p / self.q

    def derivative(self, r):
        """Closed-form G'(r)."""
        r = np.asarray(r, dtype=float)
        if self.branch == "tan":
            u = np.pi / 2.0 - self.lambda0 - self.q * self.amplitude * r
            return -self.q * self.amplitude**2 / np.cos(u) ** 2
        s = np.sqrt(self.amplitude)
        u = self.amplitude + self.q * s * r
        return -self.q * self.amplitude / np.sin(u) ** 2

    def riccati_residual(self, r=None, fd_step=None):
        """|-G' + 2pG - qG^2 - h - lambda0| sampled at r (default: the nodes).

        With fd_step=None the closed-form derivative is used, so the
        residual is pure round-off.  A float fd_step switches to a centered
        difference of the closed form with that step, which is the
        grid-free analogue of the invariant check.
        """
        r = self.r_nodes if r is None else np.asarray(r, dtype=float)
        G = self.evaluate(r)
        if fd_step is None:
            Gp = self.derivative(r)
        else:
            Gp = (self.evaluate(r + fd_step) - self.evaluate(r - fd_step)) / (
                2.0 * fd_step
            )
        return np.abs(-Gp + 2.0 * self.p * G - self.q * G**2 - self.h - self.lambda0)


def multiplier_from_constants(p, q, h, lambda0, r_nodes) -> MultiplierG:
    """Construct G on the given nodes from scalar Riccati data.

    Selects the branch from the sign of hq - p^2 (ties collapse to the tan
    branch with the p^2 term dropped, where the two formulas coincide) and
    returns the admissibility bound Rbar together with the sampled profile.
    """
    if q <= 0.0 or h <= 0.0:
        raise NozzleEPError(f"need q > 0 and h > 0, got q={q}, h={h}")
    if lambda0 <= 0.0:
        raise NozzleEPError("energy slack lambda0 must be positive")
    r_nodes = np.asarray(r_nodes, dtype=float)
    disc = h * q - p**2

    if disc > -BRANCH_TIE_EPS:
        p_eff = 0.0 if abs(disc) < BRANCH_TIE_EPS else p
        chi = np.sqrt((h + lambda0) * q - p_eff**2) / q
        rbar = (np.pi / 2.0 - lambda0 - np.arctan(abs(p_eff) / (q * chi))) / (q * chi)
        mult = MultiplierG(
            lambda0=lambda0, p=p_eff, q=q, h=h, branch="tan",
            amplitude=float(chi), r_nodes=r_nodes,
            G=np.empty(0), Rbar=float(rbar),
        )
    else:
        z_star = (p**2 - h * q) / q
        if lambda0 <= z_star:
            raise SlackTooSmallError(
                f"cot branch needs lambda0 > z* = {z_star}, got {lambda0}"
            )
        xi = (lambda0 - z_star) / q
        s = np.sqrt(xi)
        # Positivity holds up to where cot(xi + q s r) meets -p/(q s);
        # the phase must also stay short of pi.
        if p >= 0.0:
            u_max = np.pi - np.arctan(q * s / p) if p > 0.0 else np.pi / 2.0
        else:
            u_max = np.arctan(-q * s / p)
        rbar = (u_max - xi) / (q * s)
        if rbar <= 0.0:
            raise SlackTooSmallError(
                f"cot phase xi = {xi} leaves no admissible depth"
            )
        mult = MultiplierG(
            lambda0=lambda0, p=p, q=q, h=h, branch="cot",
            amplitude=float(xi), r_nodes=r_nodes,
            G=np.empty(0), Rbar=float(rbar),
        )

    G = mult.evaluate(r_nodes)
    object.__setattr__(mult, "G", G)
    return mult


def riccati_constants(
    bar: BarCoefficients,
    state: StateCoefficients,
    grid: Grid,
    Kstar_delta1: float = 1e-2,
):
    """Conservative (p, q, h) plus the band constants they were built from.

    h and q are maxima of the coupling-control terms over the profile,
    p is the minimum of the logarithmic-derivative expressions of the
    frozen-state coefficients.  Kstar_delta1 is the product K* delta1 of
    the two unknowable smallness constants; it only inflates h and q.
    """
    kappa0, kappa1 = state.bounds()
    if kappa0 <= 0.0 or kappa1 <= 0.0:
        raise NozzleEPError("state coefficients violate the sign bands")
    mu = float(bar.hweight.min())
    if mu <= 0.0:
        raise NozzleEPError(f"positivity weight must be positive, min = {mu}")

    h = 2.0 * Kstar_delta1 / kappa1 + float(
        (4.0 * bar.c1**2 / (kappa0 * mu)).max()
    )
    q = float(
        (4.0 / kappa0 * (bar.b2**2 + bar.b1**2 / mu + Kstar_delta1 / 8.0)).max()
    )

    da11 = fd_d1(state.a11, grid.dr, axis=0)
    da12_dth = fd_d1(state.a12, grid.dtheta, axis=1)
    da22 = fd_d1(state.a22, grid.dr, axis=0)
    p1 = float(
        (
            -da11 / (2.0 * state.a11)
            - da12_dth / state.a11
            + bar.a1[:, None] / state.a11
        ).min()
    )
    p2 = float((-da22 / (2.0 * state.a22)).min())
    p = min(p1, p2)
    return p, q, h, kappa0, kappa1, mu


def build_multiplier(
    bar: BarCoefficients,
    state: StateCoefficients,
    lambda0: float,
    geo: NozzleGeometry,
    grid: Grid,
    Kstar_delta1: float = 1e-2,
) -> MultiplierG:
    """Construct the multiplier for the given profiles and check admissibility.

    Raises DomainTooDeepError when the requested depth R reaches the bound
    Rbar of the selected branch, and verifies G > 0 on the returned nodes.
    """
    p, q, h, _, _, _ = riccati_constants(bar, state, grid, Kstar_delta1)
    mult = multiplier_from_constants(p, q, h, lambda0, bar.r_nodes)
    if geo.R >= mult.Rbar:
        raise DomainTooDeepError(
            f"depth R = {geo.R} exceeds admissible Rbar = {mult.Rbar}",
            rbar=mult.Rbar,
        )
    if np.any(mult.G <= 0.0):
        raise NozzleEPError("constructed multiplier lost positivity")
    return mult


def pointwise_conditions(
    mult: MultiplierG,
    bar: BarCoefficients,
    state: StateCoefficients,
    grid: Grid,
    Kstar_delta1: float = 1e-2,
):
    """Minimum margins of the two coercivity conditions over the grid.

    Returns (min over grid of -2/a11 (q1 - q3), min of 2/a22 (q2 - K*delta));
    both must be >= lambda0 for the weighted energy identity to close.
    Coefficient r-derivatives are finite differences of the (smooth)
    profiles; G' uses the closed form.
    """
    _, _, _, kappa0, _, mu = riccati_constants(bar, state, grid, Kstar_delta1)
    G = mult.evaluate(grid.r_nodes)[:, None]
    Gp = mult.derivative(grid.r_nodes)[:, None]

    a11 = state.a11
    a12 = state.a12
    a22 = state.a22
    da11 = fd_d1(a11, grid.dr, axis=0)
    da22 = fd_d1(a22, grid.dr, axis=0)
    da12_dth = fd_d1(a12, grid.dtheta, axis=1)

    q1 = 0.5 * (da11 * G + a11 * Gp) + da12_dth * G - bar.a1[:, None] * G
    q3 = 2.0 * (
        (bar.b2[:, None] ** 2 + bar.b1[:, None] ** 2 / mu + Kstar_delta1 / 8.0)
        * G**2
        + bar.c1[:, None] ** 2 / mu
    )
    cond1 = -2.0 / a11 * (q1 - q3)
    q2 = -0.5 * (da22 * G + a22 * Gp)
    cond2 = 2.0 / a22 * (q2 - Kstar_delta1)
    return float(cond1.min()), float(cond2.min())
