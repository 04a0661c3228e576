"""Residual verification of candidate states against the full system.

Evaluates the five rotated-frame equations

    (hat r rho U)_r + (rho V)_theta = 0
    rho U U_r + rho V U_theta/hat r + rho V^2/hat r + P_r - rho Phi_r = 0
    rho U V_r - rho U V/hat r + rho V V_theta/hat r + P_theta/hat r
        - rho Phi_theta/hat r = 0
    rho U K_r + rho V K_theta / hat r = 0
    Phi_rr + Phi_tt/hat r^2 - Phi_r/hat r - (rho - b) = 0

with fourth-order centered stencils (the states this harness certifies are
smooth, and second-order differencing would drown the solver residual in
its own truncation error), restricted to interior nodes two in from each
boundary.  Norms are L^2 over that interior, normalized by max(1, largest
additive term) so fixtures of different magnitudes are comparable.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .core import GasConfig, Grid, NozzleGeometry, fd_d1_o4, fd_d2_o4
from .state import FlowState


def _interior_l2(res, grid: Grid, margin=2):
    sub = res[margin:-margin, margin:-margin]
    # plain mean-square over the interior; the area factor cancels in the
    # normalization against the term scales
    return float(np.sqrt((grid.dr * grid.dtheta) * np.sum(sub**2)))


def _normalized(terms, grid: Grid):
    res = sum(terms)
    scale = max(1.0, *(float(np.abs(t).max()) for t in terms))
    return _interior_l2(res, grid) / scale


def full_system_residual(state: FlowState, cfg: GasConfig, geo: NozzleGeometry, b_field=None):
    """Normalized interior L^2 residual of each equation of the system."""
    grid = state.grid
    st = state if state.rho is not None else state.with_density(cfg)
    rho, csq = st.rho, st.csq
    U, V, Phi, S, K = st.U, st.V, st.Phi, st.S, st.K
    hat = geo.hat(grid.r_nodes)[:, None]
    P = np.exp(S) * rho**cfg.gamma
    if b_field is None:
        b_field = np.full((grid.Nr, grid.Ntheta), cfg.b0)

    dr, dt = grid.dr, grid.dtheta
    d_r = lambda f: fd_d1_o4(f, dr, axis=0)
    d_t = lambda f: fd_d1_o4(f, dt, axis=1)

    out = {}
    out["continuity"] = _normalized(
        [d_r(hat * rho * U), d_t(rho * V)], grid
    )
    out["momentum_r"] = _normalized(
        [
            rho * U * d_r(U),
            rho * V * d_t(U) / hat,
            rho * V**2 / hat,
            d_r(P),
            -rho * d_r(Phi),
        ],
        grid,
    )
    out["momentum_theta"] = _normalized(
        [
            rho * U * d_r(V),
            -rho * U * V / hat,
            rho * V * d_t(V) / hat,
            d_t(P) / hat,
            -rho * d_t(Phi) / hat,
        ],
        grid,
    )
    out["bernoulli_transport"] = _normalized(
        [rho * U * d_r(K), rho * V * d_t(K) / hat], grid
    )
    out["poisson"] = _normalized(
        [
            fd_d2_o4(Phi, dr, axis=0),
            fd_d2_o4(Phi, dt, axis=1) / hat**2,
            -d_r(Phi) / hat,
            -(rho - b_field),
        ],
        grid,
    )
    out["entropy_transport"] = _normalized(
        [rho * U * d_r(S), rho * V * d_t(S) / hat], grid
    )
    return out


def vorticity_identity_residual(state: FlowState, cfg: GasConfig, geo: NozzleGeometry):
    """Normalized L^2 defect of the algebraic vorticity relation.

    U((hat r V)_r - U_theta) = e^S rho^{gamma-1} S_theta/(gamma-1) - K_theta;
    the left side is the kinematic vorticity combination, the right side the
    baroclinic source.  Both vanish on irrotational states.
    """
    grid = state.grid
    st = state if state.rho is not None else state.with_density(cfg)
    hat = geo.hat(grid.r_nodes)[:, None]
    d_r = lambda f: fd_d1_o4(f, grid.dr, axis=0)
    d_t = lambda f: fd_d1_o4(f, grid.dtheta, axis=1)
    lhs = st.U * (d_r(hat * st.V) - d_t(st.U))
    rhs = np.exp(st.S) * st.rho ** (cfg.gamma - 1.0) / (cfg.gamma - 1.0) * d_t(
        st.S
    ) - d_t(st.K)
    return _normalized([lhs, -rhs], grid)


def supersonic_margin(state: FlowState, cfg: GasConfig):
    """kappa = min over nodes of (U^2 + V^2 - c^2); positive means supersonic."""
    st = state if state.csq is not None else state.with_density(cfg)
    return float((st.U**2 + st.V**2 - st.csq).min())


@dataclass
class DiagnosticsReport:
    """Aggregated verification numbers for one solve."""

    residuals: dict = field(default_factory=dict)
    vorticity_residual: float = float("nan")
    kappa: float = float("nan")
    mass_flux_drift: float = float("nan")
    sigma1: float = 0.0
    sigma2: float = 0.0
    sigma3: float = 0.0
    sigma: float = 0.0
    deviation_velocity_potential: float = 0.0
    deviation_scalars: float = 0.0
    outer_iterations: int = 0
    inner_iterations_total: int = 0
    inner_history: list = field(default_factory=list)
    outer_history: list = field(default_factory=list)
    contraction_ratios: list = field(default_factory=list)
    set_radius_flag: bool = False
    compatibility_defect: float = 0.0
    wall_defect: float = 0.0
    elapsed_seconds: float = 0.0

    def residual_scale(self):
        vals = [v for v in self.residuals.values() if np.isfinite(v)]
        return max(vals) if vals else float("nan")

    def deviation_ratio(self):
        return self.deviation_velocity_potential / self.sigma if self.sigma > 0 else 0.0

    def as_dict(self):
        out = {}
        for key, val in self.residuals.items():
            out[f"residual_{key}"] = val
        out["vorticity_residual"] = self.vorticity_residual
        out["kappa"] = self.kappa
        out["mass_flux_drift"] = self.mass_flux_drift
        out["sigma1"] = self.sigma1
        out["sigma2"] = self.sigma2
        out["sigma3"] = self.sigma3
        out["sigma"] = self.sigma
        out["deviation_velocity_potential"] = self.deviation_velocity_potential
        out["deviation_scalars"] = self.deviation_scalars
        out["deviation_to_sigma"] = self.deviation_ratio()
        out["outer_iterations"] = self.outer_iterations
        out["inner_iterations_total"] = self.inner_iterations_total
        out["inner_history"] = ",".join(f"{x:.6e}" for x in self.inner_history)
        out["outer_history"] = ",".join(f"{x:.6e}" for x in self.outer_history)
        out["contraction_ratios"] = ",".join(
            f"{x:.6e}" for x in self.contraction_ratios
        )
        out["set_radius_flag"] = self.set_radius_flag
        out["compatibility_defect"] = self.compatibility_defect
        out["wall_defect"] = self.wall_defect
        out["elapsed_seconds"] = self.elapsed_seconds
        return out


class Stopwatch:
    def __init__(self):
        self.t0 = time.perf_counter()

    def elapsed(self):
        return time.perf_counter() - self.t0
