"""Density reconstruction, stream function, and scalar transport.

Entropy S and the pseudo-Bernoulli quantity K are constant along mass-flux
streamlines, so instead of discretizing their transport PDEs the solver
builds the stream function

    w(r, theta) = int_{-theta0}^{theta} (r2 rho U)(0, s) ds
                  - int_0^r (rho V)(s, -theta0) ds,

inverts its inlet trace, and composes inlet data with w0^{-1}(w).  The
inverse is a monotone cubic interpolant refined by bisection, so transported
values can never leave the inlet range (a maximum principle by construction).
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .core import GasConfig, Grid, NozzleGeometry, fd_d1
from .errors import (
    MonotonicityError,
    NozzleEPError,
    StagnationError,
    StreamlineEscapeError,
    VacuumError,
)

ESCAPE_TOL = 1e-10   # relative round-off clamp at the range ends
INVERT_TOL = 1e-12   # bisection tolerance in stream value, relative to range


def density_law(gamma, S, K, U, V, Phi):
    """rho = ((gamma-1)/(gamma e^S) (K + Phi - (U^2+V^2)/2))^{1/(gamma-1)} and c^2.

    Raw form taking gamma directly (valid for any gamma > 1, including the
    gamma = 2 algebra); density_from_state wraps it with a GasConfig.
    """
    S = np.asarray(S, dtype=float)
    arg = np.asarray(K + Phi - (U**2 + V**2) / 2.0, dtype=float)
    if np.any(arg <= 0.0):
        node = np.unravel_index(int(np.argmin(arg)), np.shape(arg)) if arg.ndim else ()
        raise VacuumError(
            f"density argument nonpositive (min {arg.min():.6g}) at node {node}",
            node=node,
        )
    rho = ((gamma - 1.0) / (gamma * np.exp(S)) * arg) ** (1.0 / (gamma - 1.0))
    csq = (gamma - 1.0) * arg
    return rho, csq


def density_from_state(S, K, U, V, Phi, cfg: GasConfig):
    """Density and squared sound speed from total fields (vacuum-guarded)."""
    return density_law(cfg.gamma, S, K, U, V, Phi)


@dataclass
class StreamData:
    """Stream function with a monotone inverse of its inlet trace."""

    w: np.ndarray
    w0: np.ndarray
    theta_nodes: np.ndarray
    _forward: PchipInterpolator

    @property
    def w_range(self):
        return float(self.w0[0]), float(self.w0[-1])

    def mass_drift(self):
        """Relative r-variation of the total flux w(r, theta0) - w(r, -theta0).

        Zero for exactly mass-conserving fields; for discrete solves it sits
        at the continuity-residual level and bounds the legitimate escape of
        stream values past the inlet range.
        """
        total = self.w[:, -1] - self.w[:, 0]
        span = self.w0[-1] - self.w0[0]
        return float(np.abs(total - span).max() / span)

    def invert_inlet(self, values):
        """theta* with w(0, theta*) = value, clamped at round-off escapes.

        A bisection on the monotone forward interpolant makes the inversion
        exact at the inlet nodes and monotone everywhere.  Escapes beyond
        the inlet range are clamped up to max(round-off, the measured
        mass-flux drift); larger escapes are genuine inconsistencies and
        raise.
        """
        values = np.asarray(values, dtype=float)
        lo, hi = self.w_range
        span = hi - lo
        over = np.maximum(values - hi, 0.0).max(initial=0.0)
        under = np.maximum(lo - values, 0.0).max(initial=0.0)
        allowed = max(ESCAPE_TOL, 2.0 * self.mass_drift())
        if max(over, under) > allowed * span:
            raise StreamlineEscapeError(
                f"stream value escapes inlet range by {max(over, under):.3e} "
                f"(range span {span:.3e}, allowance {allowed:.3e})"
            )
        v = np.clip(values, lo, hi)

        a = np.full(v.shape, self.theta_nodes[0])
        b = np.full(v.shape, self.theta_nodes[-1])
        # bisection on the forward interpolant; ~60 halvings reach 1e-18
        for _ in range(64):
            mid = 0.5 * (a + b)
            fm = self._forward(mid)
            take = fm < v
            a = np.where(take, mid, a)
            b = np.where(take, b, mid)
            if np.max(b - a) < 1e-16 * max(1.0, self.theta_nodes[-1]):
                break
        theta = 0.5 * (a + b)
        # snap to inlet nodes where the stream value matches to round-off
        exact = np.abs(values[..., None] - self.w0) <= INVERT_TOL * span
        idx = np.argmax(exact, axis=-1)
        theta = np.where(exact.any(axis=-1), self.theta_nodes[idx], theta)
        return theta


def build_stream_function(rho, U, V, geo: NozzleGeometry, grid: Grid) -> StreamData:
    """Composite-trapezoid stream function anchored at the lower inlet corner.

    The mass-flux one-form (-rho V dr + hat r rho U dtheta) is closed for
    solutions of the continuity equation, so w is path-independent; the
    quadrature path runs down the lower wall to (r, -theta0) and then across
    in theta at fixed r, which realizes w_r = -rho V and w_theta = hat r
    rho U pointwise.  The inlet trace w(0, .) reduces to the inlet-flux
    integral and is the profile the transport inversion uses.
    """
    rho = np.asarray(rho, dtype=float)
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if rho.shape != (grid.Nr, grid.Ntheta):
        raise NozzleEPError("fields not sampled on the grid")

    inlet_flux = geo.r2 * rho[0] * U[0]
    if np.any(inlet_flux <= 0.0):
        raise MonotonicityError("inlet mass flux r2 rho U must be positive")

    flux = geo.hat(grid.r_nodes)[:, None] * rho * U
    w = np.zeros((grid.Nr, grid.Ntheta))
    np.cumsum(
        (flux[:, 1:] + flux[:, :-1]) * (grid.dtheta / 2.0), axis=1, out=w[:, 1:]
    )
    wall_flux = rho[:, 0] * V[:, 0]
    wall_int = np.zeros(grid.Nr)
    np.cumsum((wall_flux[1:] + wall_flux[:-1]) * (grid.dr / 2.0), out=wall_int[1:])
    w -= wall_int[:, None]

    w0 = w[0]
    if np.any(np.diff(w0) <= 0.0):
        raise MonotonicityError("inlet stream profile is not strictly increasing")
    forward = PchipInterpolator(grid.theta_nodes, w0)
    return StreamData(w=w, w0=w0, theta_nodes=grid.theta_nodes, _forward=forward)


def transport_scalars(stream: StreamData, S_en, K_en):
    """Compose inlet data with the inverted stream function.

    S_en and K_en are callables of theta; returns the transported fields
    S(r, theta) = S_en(w0^{-1}(w)) and likewise for K.  Values never leave
    the inlet data range (the composition is through theta*).
    """
    theta_star = stream.invert_inlet(stream.w)
    return np.asarray(S_en(theta_star), dtype=float), np.asarray(
        K_en(theta_star), dtype=float
    )


def vorticity_source(S, K, rho, U_total, geo: NozzleGeometry, grid: Grid, cfg: GasConfig):
    """f3 = (e^S rho^{gamma-1}/(gamma-1) S_theta - K_theta) / U.

    S is the total entropy field; theta-derivatives are centered differences
    of the transported fields (matching what the discrete iteration feeds
    back, rather than differentiating the composition analytically).
    """
    U_total = np.asarray(U_total, dtype=float)
    if np.any(U_total <= 0.0):
        raise StagnationError("total radial velocity must stay positive")
    S = np.asarray(S, dtype=float)
    S_t = fd_d1(S, grid.dtheta, axis=1)
    K_t = fd_d1(np.asarray(K, dtype=float), grid.dtheta, axis=1)
    gamma = cfg.gamma
    return (
        np.exp(S) * np.asarray(rho, dtype=float) ** (gamma - 1.0) / (gamma - 1.0) * S_t
        - K_t
    ) / U_total
