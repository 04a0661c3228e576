"""Boundary data, perturbation states, and assembled flow states."""

from dataclasses import dataclass, field

import numpy as np

from .background import BackgroundSolution
from .core import (
    GasConfig,
    Grid,
    NozzleGeometry,
    ck_sup_norm,
    discrete_norm,
    fd_d1,
)
from .errors import ConfigError
from .transport import density_from_state


def _const(value):
    return lambda theta: value * np.ones_like(np.asarray(theta, dtype=float))


@dataclass
class BoundaryData:
    """Inlet/exit data as callables of theta plus the ion background field.

    dV_en, d2E_en and d2Phi_ex are the derivative callables needed by the
    boundary lifts; when absent they are replaced by finite differences of
    the sampled traces.  The canonical constructor wires exact derivatives.
    """

    U_en: callable
    V_en: callable
    E_en: callable
    K_en: callable
    S_en: callable
    Phi_ex: callable
    b_field: np.ndarray
    dV_en: callable = None
    d2E_en: callable = None
    d2Phi_ex: callable = None

    @classmethod
    def unperturbed(cls, bg: BackgroundSolution, cfg: GasConfig, geo: NozzleGeometry, grid: Grid):
        inlet_U = bg.U[0]
        E0 = bg.E[0]
        phiR = bg.Phi[-1]
        return cls(
            U_en=_const(inlet_U),
            V_en=_const(0.0),
            E_en=_const(E0),
            K_en=_const(0.0),
            S_en=_const(bg.S0),
            Phi_ex=_const(phiR),
            b_field=np.full((grid.Nr, grid.Ntheta), cfg.b0),
            dV_en=_const(0.0),
            d2E_en=_const(0.0),
            d2Phi_ex=_const(0.0),
        )

    @classmethod
    def canonical(
        cls,
        bg: BackgroundSolution,
        cfg: GasConfig,
        geo: NozzleGeometry,
        grid: Grid,
        u_en_amp=0.0,
        v_en_amp=0.0,
        e_en_amp=0.0,
        k_en_amp=0.0,
        s_en_amp=0.0,
        phi_ex_amp=0.0,
        b_amp=0.0,
    ):
        """Compatibility-respecting perturbation shapes.

        cos(pi theta/theta0) bumps for the even data (all odd derivatives
        vanish at the walls), sin(pi (theta+theta0)/theta0) for V_en (odd,
        vanishes with its second derivative at the walls), and a separable
        cos x cos bump for b.
        """
        th0 = geo.theta0
        U0 = bg.U[0]
        E0 = bg.E[0]
        phiR = bg.Phi[-1]
        S0 = bg.S0
        cosb = lambda a: (lambda t: a * np.cos(np.pi * np.asarray(t) / th0))
        b = cfg.b0 + b_amp * np.outer(
            np.cos(np.pi * grid.r_nodes / geo.R),
            np.cos(np.pi * grid.theta_nodes / th0),
        )
        return cls(
            U_en=lambda t: U0 + cosb(u_en_amp)(t),
            V_en=lambda t: v_en_amp * np.sin(np.pi * (np.asarray(t) + th0) / th0),
            E_en=lambda t: E0 + cosb(e_en_amp)(t),
            K_en=cosb(k_en_amp),
            S_en=lambda t: S0 + cosb(s_en_amp)(t),
            Phi_ex=lambda t: phiR + cosb(phi_ex_amp)(t),
            b_field=b,
            dV_en=lambda t: v_en_amp
            * (np.pi / th0)
            * np.cos(np.pi * (np.asarray(t) + th0) / th0),
            d2E_en=lambda t: -e_en_amp
            * (np.pi / th0) ** 2
            * np.cos(np.pi * np.asarray(t) / th0),
            d2Phi_ex=lambda t: -phi_ex_amp
            * (np.pi / th0) ** 2
            * np.cos(np.pi * np.asarray(t) / th0),
        )

    def dV_en_eval(self, theta_nodes):
        if self.dV_en is not None:
            return np.asarray(self.dV_en(theta_nodes), dtype=float)
        h = theta_nodes[1] - theta_nodes[0]
        return fd_d1(np.asarray(self.V_en(theta_nodes), dtype=float), h)

    def d2E_en_eval(self, theta_nodes):
        if self.d2E_en is not None:
            return np.asarray(self.d2E_en(theta_nodes), dtype=float)
        from .core import fd_d2

        h = theta_nodes[1] - theta_nodes[0]
        return fd_d2(np.asarray(self.E_en(theta_nodes), dtype=float), h)

    def d2Phi_ex_eval(self, theta_nodes):
        if self.d2Phi_ex is not None:
            return np.asarray(self.d2Phi_ex(theta_nodes), dtype=float)
        from .core import fd_d2

        h = theta_nodes[1] - theta_nodes[0]
        return fd_d2(np.asarray(self.Phi_ex(theta_nodes), dtype=float), h)

    def sigma(self, bg: BackgroundSolution, cfg: GasConfig, grid: Grid):
        """Perturbation sizes (sigma1, sigma2, sigma3, sigma).

        Discrete sup-norms of finite-difference derivatives stand in for
        the C^2/C^3/C^4 norms of the continuous formulation.
        """
        t = grid.theta_nodes
        U0 = bg.U[0]
        E0 = bg.E[0]
        db = self.b_field - cfg.b0
        # ck_sup_norm differentiates along the last axis, so each orientation
        # covers one coordinate's derivatives
        s1 = max(
            ck_sup_norm(db.T, grid.r_nodes, 2),
            ck_sup_norm(db, grid.theta_nodes, 2),
        )
        s2 = (
            ck_sup_norm(np.asarray(self.U_en(t)) - U0, t, 3)
            + ck_sup_norm(np.asarray(self.V_en(t)), t, 4)
            + ck_sup_norm(np.asarray(self.E_en(t)) - E0, t, 4)
            + ck_sup_norm(np.asarray(self.Phi_ex(t)) - bg.Phi[-1], t, 4)
        )
        s3 = ck_sup_norm(np.asarray(self.K_en(t)), t, 4) + ck_sup_norm(
            np.asarray(self.S_en(t)) - bg.S0, t, 4
        )
        return s1, s2, s3, s1 + s2 + s3

    def compatibility_defects(self, grid: Grid):
        """Wall values of the derivative combinations that must vanish.

        Returns the max |defect| over both walls for each named condition,
        measured with one-sided differences on the theta grid.
        """
        t = grid.theta_nodes
        h = grid.dtheta

        def wall_vals(f, order):
            g = np.asarray(f(t), dtype=float)
            for _ in range(order):
                g = fd_d1(g, h)
            return max(abs(float(g[0])), abs(float(g[-1])))

        out = {
            "dU_en": wall_vals(self.U_en, 1),
            "V_en": max(
                abs(float(self.V_en(t[0]))), abs(float(self.V_en(t[-1])))
            ),
            "d2V_en": wall_vals(self.V_en, 2),
        }
        for name, f in (
            ("E_en", self.E_en),
            ("Phi_ex", self.Phi_ex),
            ("K_en", self.K_en),
            ("S_en", self.S_en),
        ):
            out[f"d{name}"] = wall_vals(f, 1)
            out[f"d3{name}"] = wall_vals(f, 3)
        bt = fd_d1(self.b_field, h, axis=1)
        out["db_dtheta"] = max(
            float(np.abs(bt[:, 0]).max()), float(np.abs(bt[:, -1]).max())
        )
        return out


@dataclass
class PerturbationState:
    """Deviation fields (U, V, Phi, S, K) from the background."""

    U: np.ndarray
    V: np.ndarray
    Phi: np.ndarray
    S: np.ndarray
    K: np.ndarray

    @classmethod
    def zero(cls, grid: Grid):
        z = lambda: np.zeros((grid.Nr, grid.Ntheta))
        return cls(U=z(), V=z(), Phi=z(), S=z(), K=z())

    def copy(self):
        return PerturbationState(
            self.U.copy(), self.V.copy(), self.Phi.copy(), self.S.copy(), self.K.copy()
        )

    def velocity_potential_norm(self, grid: Grid):
        """Tracking norm ||(U, V)||_{H^1} + ||Phi||_{H^2} (discrete)."""
        return float(
            np.hypot(discrete_norm(self.U, grid, 1), discrete_norm(self.V, grid, 1))
            + discrete_norm(self.Phi, grid, 2)
        )

    def scalar_norm(self, grid: Grid):
        """Tracking norm ||(S, K)||_{H^2} (discrete)."""
        return float(
            np.hypot(discrete_norm(self.S, grid, 2), discrete_norm(self.K, grid, 2))
        )

    def low_order_distance(self, other, grid: Grid):
        """Contraction metric ||(dU, dV)||_{L^2} + ||dPhi||_{H^1}."""
        return float(
            np.hypot(
                discrete_norm(self.U - other.U, grid, 0),
                discrete_norm(self.V - other.V, grid, 0),
            )
            + discrete_norm(self.Phi - other.Phi, grid, 1)
        )

    def wall_defects(self, grid: Grid):
        """One-sided wall derivatives that the iteration sets require to vanish."""
        h = grid.dtheta
        out = {}
        for name, f, order in (
            ("dU", self.U, 1),
            ("V", self.V, 0),
            ("dPhi", self.Phi, 1),
            ("dS", self.S, 1),
            ("dK", self.K, 1),
        ):
            g = f
            for _ in range(order):
                g = fd_d1(g, h, axis=1)
            out[name] = max(float(np.abs(g[:, 0]).max()), float(np.abs(g[:, -1]).max()))
        return out


@dataclass
class FlowState:
    """Total fields of a candidate solution on the tensor grid."""

    grid: Grid
    U: np.ndarray
    V: np.ndarray
    Phi: np.ndarray
    S: np.ndarray
    K: np.ndarray
    rho: np.ndarray = field(default=None)
    csq: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("U", "V", "Phi", "S", "K"):
            arr = getattr(self, name)
            if np.asarray(arr).shape != (self.grid.Nr, self.grid.Ntheta):
                raise ConfigError(f"field {name} not sampled on the grid")

    def with_density(self, cfg: GasConfig):
        rho, csq = density_from_state(self.S, self.K, self.U, self.V, self.Phi, cfg)
        return FlowState(
            grid=self.grid, U=self.U, V=self.V, Phi=self.Phi, S=self.S, K=self.K,
            rho=rho, csq=csq,
        )

    @classmethod
    def from_perturbation(cls, bg: BackgroundSolution, pert: PerturbationState, grid: Grid, cfg: GasConfig):
        return cls(
            grid=grid,
            U=bg.U[:, None] + pert.U,
            V=pert.V.copy(),
            Phi=bg.Phi[:, None] + pert.Phi,
            S=bg.S0 + pert.S,
            K=pert.K.copy(),
        ).with_density(cfg)
