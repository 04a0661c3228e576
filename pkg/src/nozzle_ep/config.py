"""Plain-text configuration: one `key = value` per line, `#` comments.

The documented key list lives in the README and the shipped configs/
directory.  Unknown keys are rejected to catch typos early.
"""

from dataclasses import dataclass

import numpy as np

from .core import CosineBasis, GasConfig, Grid, InletState, NozzleGeometry
from .errors import ConfigError
from .iteration import SolverOptions
from .state import BoundaryData

_FLOAT_KEYS = {
    "gamma": 1.4,
    "b0": 1.0,
    "r1": 0.5,
    "r2": 1.0,
    "theta0": float(np.pi / 4),
    "R": 0.25,
    "rho0": 1.0,
    "U0": 2.0,
    "P0": 1.0 / 1.4,
    "E0": -10.0,
    "tol_inner": 1e-10,
    "tol_outer": 1e-9,
    "lambda0": 0.2,
    "kstar_delta1": 1e-2,
    "relax": 1.0,
    "u_en_amp": 0.0,
    "v_en_amp": 0.0,
    "e_en_amp": 0.0,
    "k_en_amp": 0.0,
    "s_en_amp": 0.0,
    "phi_ex_amp": 0.0,
    "b_amp": 0.0,
    "delta_mu": 0.1,
    "delta_nu": 0.1,
}
_INT_KEYS = {
    "Nr": 129,
    "Ntheta": None,     # default 8m+1
    "m": 16,
    "m_div": None,      # default m
    "max_iter_inner": 50,
    "max_iter_outer": 50,
}


@dataclass
class Config:
    values: dict

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError as exc:
            raise AttributeError(key) from exc

    def gas(self) -> GasConfig:
        return GasConfig(gamma=self.gamma, b0=self.b0)

    def geometry(self) -> NozzleGeometry:
        return NozzleGeometry(r1=self.r1, r2=self.r2, theta0=self.theta0, R=self.R)

    def inlet(self) -> InletState:
        return InletState(rho0=self.rho0, U0=self.U0, P0=self.P0, E_entrance=self.E0)

    def basis(self) -> CosineBasis:
        return CosineBasis(self.theta0, self.m)

    def grid(self) -> Grid:
        ntheta = self.Ntheta if self.Ntheta is not None else 8 * self.m + 1
        return Grid.make(self.geometry(), self.Nr, ntheta)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            tol_inner=self.tol_inner,
            tol_outer=self.tol_outer,
            max_iter_inner=self.max_iter_inner,
            max_iter_outer=self.max_iter_outer,
            relax=self.relax,
            m_div=self.m_div,
            delta_mu=self.delta_mu,
            delta_nu=self.delta_nu,
        )

    def boundary_data(self, bg, grid) -> BoundaryData:
        return BoundaryData.canonical(
            bg, self.gas(), self.geometry(), grid,
            u_en_amp=self.u_en_amp,
            v_en_amp=self.v_en_amp,
            e_en_amp=self.e_en_amp,
            k_en_amp=self.k_en_amp,
            s_en_amp=self.s_en_amp,
            phi_ex_amp=self.phi_ex_amp,
            b_amp=self.b_amp,
        )

    def amplitudes_scaled(self, factor) -> "Config":
        """Copy with every boundary-perturbation amplitude multiplied by factor."""
        vals = dict(self.values)
        for key in (
            "u_en_amp", "v_en_amp", "e_en_amp", "k_en_amp",
            "s_en_amp", "phi_ex_amp", "b_amp",
        ):
            vals[key] = vals[key] * factor
        return Config(vals)


def default_config() -> Config:
    vals = dict(_FLOAT_KEYS)
    vals.update(_INT_KEYS)
    return Config(vals)


def parse_config(text, path="<config>") -> Config:
    vals = dict(_FLOAT_KEYS)
    vals.update(_INT_KEYS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key in _FLOAT_KEYS:
            try:
                vals[key] = float(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad float for {key}: {val}") from exc
        elif key in _INT_KEYS:
            try:
                vals[key] = int(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad int for {key}: {val}") from exc
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
    return Config(vals)


def load_config(path) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read(), path=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
