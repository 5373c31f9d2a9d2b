"""Trajectory and summary writers.

All numeric CSV fields use Python's shortest round-trip representation, so a
re-run of the same configuration produces byte-identical files.  The
per-node threshold-slope and density columns are emitted here so downstream
plotting never has to evaluate the laws itself.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .evolution import Trajectory


def trajectory_header(m: int) -> list:
    cols = ["step", "t", "amp"]
    for stem in ("z", "V", "traction", "gprime", "gV"):
        cols.extend(f"{stem}_{e}" for e in range(m))
    cols.extend(["elastic", "dissipated", "work", "drift"])
    return cols


def write_trajectory_csv(traj: Trajectory, path) -> None:
    m = traj.m
    gprime = traj.laws.derivative(traj.V)
    gv = traj.laws.evaluate(traj.V)
    with open(path, "w") as f:
        f.write(",".join(trajectory_header(m)) + "\n")
        for i in range(traj.k + 1):
            row = [str(i), repr(float(traj.times[i])), repr(float(traj.amps[i]))]
            for arr in (traj.z, traj.V, traj.tractions, gprime, gv):
                row.extend(repr(float(arr[i, e])) for e in range(m))
            row.extend(repr(float(x[i])) for x in
                       (traj.elastic, traj.dissipated, traj.work, traj.drift))
            f.write(",".join(row) + "\n")


def read_trajectory_csv(path):
    """Columns as a dict of arrays; the inverse of write_trajectory_csv."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    return {name: data[:, j] for j, name in enumerate(header)}


def summary_dict(traj: Trajectory, name: str) -> dict:
    finite_res = traj.residuals[np.isfinite(traj.residuals)]
    return {
        "scenario": name,
        "steps": int(traj.k),
        "interface_nodes": int(traj.m),
        "T": float(traj.times[-1]),
        "eta_k": float(traj.eta_k),
        "max_abs_drift": float(np.max(np.abs(traj.drift))),
        "final": {
            "t": float(traj.times[-1]),
            "amp": float(traj.amps[-1]),
            "elastic": float(traj.elastic[-1]),
            "dissipated": float(traj.dissipated[-1]),
            "work": float(traj.work[-1]),
            "drift": float(traj.drift[-1]),
        },
        "rupture_times": traj.rupture_times(),
        "broken_final": int(np.sum(traj.broken[-1])),
        "solver": {
            "total_sweeps": int(np.sum(traj.sweeps)),
            "max_step_sweeps": int(np.max(traj.sweeps)),
            "max_residual": float(np.max(finite_res)) if finite_res.size else 0.0,
        },
    }


def write_summary_json(traj: Trajectory, name: str, path) -> None:
    with open(path, "w") as f:
        json.dump(summary_dict(traj, name), f, indent=2, sort_keys=True)
        f.write("\n")


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
