"""Plain-text file formats: field CSV, background CSV, key-value reports.

All numeric output is printed with 17 significant digits so write-then-read
round-trips are bit exact for float64 and runs are diff-able.
"""

import os

import numpy as np

from .core import Grid
from .errors import NozzleEPError

FMT = "%.17g"

BACKGROUND_COLUMNS = ("r", "Msq", "E", "rho", "U", "P", "Phi", "csq", "h")


def format_value(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FMT % float(x)
    return str(x)


def write_field_csv(path, grid: Grid, values):
    """One field as rows `r,theta,value`, theta fastest."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.Nr, grid.Ntheta):
        raise NozzleEPError(f"field shape {values.shape} does not match grid")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("r,theta,value\n")
        for i, r in enumerate(grid.r_nodes):
            for j, t in enumerate(grid.theta_nodes):
                fh.write(f"{FMT % r},{FMT % t},{FMT % values[i, j]}\n")


def read_field_csv(path):
    """Read a field CSV back as (r_nodes, theta_nodes, values)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "r,theta,value":
            raise NozzleEPError(f"{path}:1: expected header 'r,theta,value'")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise NozzleEPError(f"{path}:{lineno}: expected 3 comma-separated values")
            try:
                rows.append(tuple(float(p) for p in parts))
            except ValueError as exc:
                raise NozzleEPError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise NozzleEPError(f"{path}: no data rows")
    arr = np.asarray(rows)
    r_nodes = np.unique(arr[:, 0])
    theta_nodes = np.unique(arr[:, 1])
    if len(r_nodes) * len(theta_nodes) != len(arr):
        raise NozzleEPError(f"{path}: rows do not form a tensor grid")
    values = arr[:, 2].reshape(len(r_nodes), len(theta_nodes))
    return r_nodes, theta_nodes, values


def write_background_csv(path, bg, hweight):
    cols = (bg.r_nodes, bg.Msq, bg.E, bg.rho, bg.U, bg.P, bg.Phi, bg.csq, hweight)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(BACKGROUND_COLUMNS) + "\n")
        for row in zip(*cols):
            fh.write(",".join(FMT % v for v in row) + "\n")


def write_report(path, data: dict):
    """Key-value report, one `key = value` per line, insertion order."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, val in data.items():
            fh.write(f"{key} = {format_value(val)}\n")


def read_report(path):
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise NozzleEPError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


FIELD_FILES = {
    "U": "U.csv",
    "V": "V.csv",
    "Phi": "Phi.csv",
    "S": "S.csv",
    "K": "K.csv",
}


def write_state_dir(outdir, flow, report_dict):
    os.makedirs(outdir, exist_ok=True)
    for name, fname in FIELD_FILES.items():
        write_field_csv(os.path.join(outdir, fname), flow.grid, getattr(flow, name))
    write_report(os.path.join(outdir, "report.txt"), report_dict)


def read_state_dir(indir):
    """Read the five field CSVs back; returns (grid nodes, fields dict)."""
    fields = {}
    r_nodes = theta_nodes = None
    for name, fname in FIELD_FILES.items():
        path = os.path.join(indir, fname)
        if not os.path.exists(path):
            raise NozzleEPError(f"missing field file {path}")
        r, t, vals = read_field_csv(path)
        if r_nodes is None:
            r_nodes, theta_nodes = r, t
        elif len(r) != len(r_nodes) or not np.allclose(r, r_nodes):
            raise NozzleEPError(f"{path}: r-grid differs from other fields")
        fields[name] = vals
    return r_nodes, theta_nodes, fields
