"""Problem definition, grids, spectral bases and discrete norms.

Conventions used throughout the package:
    - The nozzle is the rectangle (r, theta) in [0, R] x [-theta0, theta0]
      with hat(r) = r2 - r the physical radius (flow marches toward r = R,
      i.e. toward the inner radius r1).
    - Scalar fields are numpy arrays of shape (Nr, Ntheta); axis 0 is r,
      axis 1 is theta.
    - Quadrature is composite trapezoid on the uniform tensor grid.
    - Finite differences are second-order centered with second-order
      one-sided closures at boundaries.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AliasingError,
    ConfigError,
    SizeMismatchError,
    UnsupportedOrderError,
)


@dataclass(frozen=True)
class GasConfig:
    """Adiabatic exponent and ion background density.

    gamma must stay away from 2: the supersonic admissibility threshold
    is singular there.
    """

    gamma: float
    b0: float
    b_field: np.ndarray | None = None

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ConfigError(f"gamma must exceed 1, got {self.gamma}")
        if abs(self.gamma - 2.0) <= 1e-9:
            raise ConfigError("gamma == 2 is excluded (threshold singular)")
        if not self.b0 > 0.0:
            raise ConfigError(f"b0 must be positive, got {self.b0}")
        if self.b_field is not None and not np.all(np.asarray(self.b_field) > 0.0):
            raise ConfigError("b_field must be positive pointwise")


@dataclass(frozen=True)
class NozzleGeometry:
    """Annular-sector nozzle: radii r1 < r2, half-angle theta0, working depth R."""

    r1: float
    r2: float
    theta0: float
    R: float

    def __post_init__(self):
        if not 0.0 < self.r1 < self.r2:
            raise ConfigError(f"need 0 < r1 < r2, got r1={self.r1}, r2={self.r2}")
        if not 0.0 < self.theta0 < np.pi / 2:
            raise ConfigError(f"theta0 must lie in (0, pi/2), got {self.theta0}")
        if not 0.0 < self.R < self.r2 - self.r1:
            raise ConfigError(
                f"working depth must lie in (0, r2-r1), got R={self.R}"
            )

    def hat(self, r):
        """Physical radius hat(r) = r2 - r; stays in (r1, r2] on [0, R]."""
        return self.r2 - np.asarray(r, dtype=float)

    def log_ratio_margin(self, gamma):
        """Slack in the admissibility condition ln(r2/r1) < (gamma+1)/(2(gamma-1))."""
        return (gamma + 1.0) / (2.0 * (gamma - 1.0)) - np.log(self.r2 / self.r1)


@dataclass(frozen=True)
class InletState:
    """Entrance density / speed / pressure and the signed entrance field E(0).

    The sign of E_entrance is taken literally; no hidden convention.
    Supersonic entrance (M0sq > 1) is reported by validate_inlet rather
    than enforced here, so subsonic states remain constructible for the
    failure-path tests.
    """

    rho0: float
    U0: float
    P0: float
    E_entrance: float

    def __post_init__(self):
        for name in ("rho0", "U0", "P0"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")

    def J0(self, geo: NozzleGeometry) -> float:
        """Mass flux J0 = r2 rho0 U0."""
        return geo.r2 * self.rho0 * self.U0

    def S0_of(self, gamma: float) -> float:
        """Entrance entropy S0 = ln(P0 / rho0^gamma)."""
        return float(np.log(self.P0 / self.rho0**gamma))

    def M0sq(self, gamma: float) -> float:
        """Squared entrance Mach number rho0 U0^2 / (gamma P0)."""
        return self.rho0 * self.U0**2 / (gamma * self.P0)


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid over [0, R] x [-theta0, theta0], endpoints included."""

    r_nodes: np.ndarray
    theta_nodes: np.ndarray

    @classmethod
    def make(cls, geo: NozzleGeometry, Nr: int, Ntheta: int) -> "Grid":
        if Nr < 3 or Ntheta < 3:
            raise ConfigError("need Nr >= 3 and Ntheta >= 3")
        return cls(
            r_nodes=np.linspace(0.0, geo.R, Nr),
            theta_nodes=np.linspace(-geo.theta0, geo.theta0, Ntheta),
        )

    def __post_init__(self):
        for nodes in (self.r_nodes, self.theta_nodes):
            if len(nodes) < 3 or not np.all(np.diff(nodes) > 0):
                raise ConfigError("grid nodes must be >= 3 and strictly increasing")

    @property
    def Nr(self):
        return len(self.r_nodes)

    @property
    def Ntheta(self):
        return len(self.theta_nodes)

    @property
    def dr(self):
        return self.r_nodes[1] - self.r_nodes[0]

    @property
    def dtheta(self):
        return self.theta_nodes[1] - self.theta_nodes[0]


def trapezoid_weights(nodes):
    """Composite-trapezoid quadrature weights for a uniform 1-d grid."""
    h = nodes[1] - nodes[0]
    w = np.full(len(nodes), h)
    w[0] = w[-1] = h / 2.0
    return w


def inner_product(f, g, theta_nodes):
    """Trapezoid approximation of the L^2(-theta0, theta0) pairing of f and g."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape[-1] != len(theta_nodes) or g.shape[-1] != len(theta_nodes):
        raise SizeMismatchError(
            f"samples of length {f.shape[-1]}/{g.shape[-1]} on "
            f"{len(theta_nodes)} nodes"
        )
    w = trapezoid_weights(theta_nodes)
    return (f * g) @ w


@dataclass(frozen=True)
class CosineBasis:
    """Neumann cosine eigenbasis on (-theta0, theta0).

    eta_0 = (1/(2 theta0))^{1/2},
    eta_k = (1/theta0)^{1/2} cos(k pi theta / theta0)   for k >= 1,
    with eigenvalues upsilon_k = (k pi / theta0)^2 of -d^2/dtheta^2 under
    eta'(+-theta0) = 0.  All odd theta-derivatives of every eta_k vanish at
    the walls, which is what propagates the wall compatibility conditions.
    """

    theta0: float
    m: int

    def __post_init__(self):
        if self.m < 0:
            raise ConfigError("truncation order m must be >= 0")

    @property
    def eigenvalues(self):
        k = np.arange(self.m + 1)
        return (k * np.pi / self.theta0) ** 2

    def sample(self, theta):
        """Matrix eta[k, j] = eta_k(theta_j), shape (m+1, len(theta))."""
        theta = np.asarray(theta, dtype=float)
        k = np.arange(self.m + 1)[:, None]
        eta = np.sqrt(1.0 / self.theta0) * np.cos(k * np.pi * theta[None, :] / self.theta0)
        eta[0] = np.sqrt(1.0 / (2.0 * self.theta0))
        return eta

    def sample_deriv(self, theta):
        """Analytic eta_k'(theta): -(k pi/theta0) (1/theta0)^{1/2} sin(k pi theta/theta0)."""
        theta = np.asarray(theta, dtype=float)
        k = np.arange(self.m + 1)[:, None]
        return (
            -(k * np.pi / self.theta0)
            * np.sqrt(1.0 / self.theta0)
            * np.sin(k * np.pi * theta[None, :] / self.theta0)
        )

    def gram(self, theta_nodes):
        """Discrete Gram matrix under the module quadrature (identity up to round-off)."""
        eta = self.sample(theta_nodes)
        w = trapezoid_weights(theta_nodes)
        return (eta * w) @ eta.T


def project(field, basis: CosineBasis, theta_nodes):
    """Cosine coefficients (<field, eta_k>)_k of theta-sampled data.

    field may be a single theta-line (Ntheta,) or a tensor field
    (Nr, Ntheta); projection acts along the last axis.  Rejects
    truncations at or beyond Ntheta/2 (aliasing).
    """
    field = np.asarray(field, dtype=float)
    if field.shape[-1] != len(theta_nodes):
        raise SizeMismatchError("field not sampled on theta_nodes")
    if basis.m >= len(theta_nodes) / 2:
        raise AliasingError(
            f"m={basis.m} too high for Ntheta={len(theta_nodes)} (need m < Ntheta/2)"
        )
    eta = basis.sample(theta_nodes)
    w = trapezoid_weights(theta_nodes)
    return (field * w) @ eta.T


def synthesize(coeffs, basis: CosineBasis, theta_nodes):
    """Evaluate sum_k coeffs[..., k] eta_k(theta) on theta_nodes."""
    coeffs = np.asarray(coeffs, dtype=float)
    return coeffs @ basis.sample(theta_nodes)


def fd_d1(f, h, axis=0):
    """Second-order first derivative: centered interior, one-sided at the ends."""
    f = np.asarray(f, dtype=float)
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def fd_d2(f, h, axis=0):
    """Second-order second derivative with one-sided closures."""
    f = np.asarray(f, dtype=float)
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def fd_d1_o4(f, h, axis=0):
    """Fourth-order first derivative; used by the residual harness."""
    f = np.asarray(f, dtype=float)
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    c1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / (12.0 * h)
    out[0] = np.tensordot(c, f[:5], axes=(0, 0))
    out[1] = np.tensordot(c1, f[:5], axes=(0, 0))
    out[-1] = -np.tensordot(c, f[-5:][::-1], axes=(0, 0))
    out[-2] = -np.tensordot(c1, f[-5:][::-1], axes=(0, 0))
    return np.moveaxis(out, 0, axis)


def fd_d2_o4(f, h, axis=0):
    """Fourth-order second derivative (interior stencil, one-sided near ends)."""
    f = np.asarray(f, dtype=float)
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[2:-2] = (
        -f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]
    ) / (12.0 * h**2)
    c = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / (12.0 * h**2)
    c1 = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / (12.0 * h**2)
    out[0] = np.tensordot(c, f[:6], axes=(0, 0))
    out[1] = np.tensordot(c1, f[:6], axes=(0, 0))
    out[-1] = np.tensordot(c, f[-6:][::-1], axes=(0, 0))
    out[-2] = np.tensordot(c1, f[-6:][::-1], axes=(0, 0))
    return np.moveaxis(out, 0, axis)


def l2_norm(field, grid: Grid):
    """Tensor-trapezoid L^2 norm over the rectangle."""
    field = np.asarray(field, dtype=float)
    wr = trapezoid_weights(grid.r_nodes)
    wt = trapezoid_weights(grid.theta_nodes)
    return float(np.sqrt(np.einsum("ij,i,j->", field**2, wr, wt)))


def line_l2_norm(f, nodes):
    """Trapezoid L^2 norm of a 1-d sample."""
    w = trapezoid_weights(nodes)
    return float(np.sqrt(np.dot(np.asarray(f, dtype=float) ** 2, w)))


def discrete_norm(field, grid: Grid, k: int):
    """Discrete H^k norm, k in {0, 1, 2}: (sum_{|a|<=k} ||D^a field||_{L^2}^2)^{1/2}."""
    if k not in (0, 1, 2):
        raise UnsupportedOrderError(f"order k={k} not in {{0, 1, 2}}")
    field = np.asarray(field, dtype=float)
    if field.shape != (grid.Nr, grid.Ntheta):
        raise SizeMismatchError(
            f"field shape {field.shape} != grid ({grid.Nr}, {grid.Ntheta})"
        )
    total = l2_norm(field, grid) ** 2
    if k >= 1:
        fr = fd_d1(field, grid.dr, axis=0)
        ft = fd_d1(field, grid.dtheta, axis=1)
        total += l2_norm(fr, grid) ** 2 + l2_norm(ft, grid) ** 2
    if k >= 2:
        total += l2_norm(fd_d2(field, grid.dr, axis=0), grid) ** 2
        total += l2_norm(fd_d2(field, grid.dtheta, axis=1), grid) ** 2
        frt = fd_d1(fd_d1(field, grid.dr, axis=0), grid.dtheta, axis=1)
        total += l2_norm(frt, grid) ** 2
    return float(np.sqrt(total))


def ck_sup_norm(f_samples, nodes, k):
    """Discrete stand-in for the C^k norm: max sup-norm of FD derivatives up to k."""
    f = np.asarray(f_samples, dtype=float)
    h = nodes[1] - nodes[0]
    best = float(np.abs(f).max())
    for _ in range(k):
        f = fd_d1(f, h, axis=-1 if f.ndim > 1 else 0)
        best = max(best, float(np.abs(f).max()))
    return best
