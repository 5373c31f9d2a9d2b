"""Publication-style figures from trajectory CSV files.

Every plotted quantity is read verbatim from the CSV; no physics is computed
here.  The expected schema is the one written by the solver:

    step,t,amp,z_0..,V_0..,traction_0..,gprime_0..,gV_0..,
    elastic,dissipated,work,drift

where the per-node blocks repeat for every interface node.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from typing import Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt   # noqa: E402
import numpy as np                # noqa: E402

# deterministic SVG output across reruns
matplotlib.rcParams["svg.hashsalt"] = "plotkit"

FIGURE_KINDS = ("jump-history", "dissipation-vs-V", "traction-vs-opening",
                "energy-balance", "V-heatmap")


@dataclass(frozen=True)
class FigureSpec:
    trajectory: str
    kind: str
    out_path: str
    nodes: Optional[tuple] = None     # default: all interface nodes


@dataclass(frozen=True)
class TrajectoryTable:
    columns: dict
    n_nodes: int

    def node_column(self, stem: str, node: int) -> np.ndarray:
        key = f"{stem}_{node}"
        if key not in self.columns:
            raise ValueError(f"trajectory is missing column {key}")
        return self.columns[key]

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise ValueError(f"trajectory is missing column {name}")
        return self.columns[name]


def load_trajectory(path) -> TrajectoryTable:
    with open(path) as f:
        header = f.readline().strip()
        if not header:
            raise ValueError(f"{path} has no header")
        names = header.split(",")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            data = np.loadtxt(f, delimiter=",", ndmin=2)
    if data.size == 0:
        raise ValueError(f"{path} contains no trajectory rows")
    columns = {name: data[:, j] for j, name in enumerate(names)}
    n_nodes = sum(1 for name in names if name.startswith("z_"))
    if n_nodes == 0:
        raise ValueError(f"{path} carries no per-node jump columns")
    return TrajectoryTable(columns=columns, n_nodes=n_nodes)


def _select_nodes(table: TrajectoryTable, nodes) -> list:
    if nodes is None:
        return list(range(table.n_nodes))
    for e in nodes:
        if not 0 <= e < table.n_nodes:
            raise ValueError(f"node {e} not present; trajectory has {table.n_nodes} nodes")
    return list(nodes)


def _save(fig, out_path):
    fig.savefig(out_path, metadata={"Date": None} if str(out_path).endswith(".svg") else None)
    plt.close(fig)


def render(spec: FigureSpec) -> str:
    """Render one figure kind; returns the output path."""
    if spec.kind not in FIGURE_KINDS:
        raise ValueError(f"unknown figure kind {spec.kind!r}; expected one of {FIGURE_KINDS}")
    table = load_trajectory(spec.trajectory)
    nodes = _select_nodes(table, spec.nodes)
    t = table.column("t")

    fig, ax = plt.subplots(figsize=(6.4, 4.2), constrained_layout=True)
    if spec.kind == "jump-history":
        for e in nodes:
            ax.plot(t, table.node_column("z", e), lw=1.2, label=f"node {e}")
        ax.set_xlabel("t")
        ax.set_ylabel("jump")
        if len(nodes) <= 8:
            ax.legend(loc="best", fontsize=8)
    elif spec.kind == "dissipation-vs-V":
        for e in nodes:
            order = np.argsort(table.node_column("V", e), kind="stable")
            ax.plot(table.node_column("V", e)[order], table.node_column("gV", e)[order],
                    lw=1.2, label=f"node {e}")
        ax.set_xlabel("cumulated variation V")
        ax.set_ylabel("dissipated density g(V)")
        if len(nodes) <= 8:
            ax.legend(loc="best", fontsize=8)
    elif spec.kind == "traction-vs-opening":
        for e in nodes:
            z = table.node_column("z", e)
            ax.plot(z, table.node_column("traction", e), lw=1.0, label=f"node {e}")
            env = table.node_column("gprime", e)
            ax.plot(z, env, "--", lw=0.7, color="gray")
            ax.plot(z, -env, "--", lw=0.7, color="gray")
        ax.set_xlabel("opening")
        ax.set_ylabel("traction")
        if len(nodes) <= 8:
            ax.legend(loc="best", fontsize=8)
    elif spec.kind == "energy-balance":
        for name in ("elastic", "dissipated", "work", "drift"):
            ax.plot(t, table.column(name), lw=1.2, label=name)
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
        ax.legend(loc="best", fontsize=8)
    else:   # V-heatmap
        V = np.column_stack([table.node_column("V", e) for e in nodes])
        finite = V[np.isfinite(V)]
        vmax = float(finite.max()) if finite.size else 1.0
        im = ax.imshow(V.T, aspect="auto", origin="lower", cmap="inferno",
                       extent=(float(t[0]), float(t[-1]), -0.5, len(nodes) - 0.5),
                       vmin=0.0, vmax=max(vmax, 1e-12))
        ax.set_xlabel("t")
        ax.set_ylabel("interface node")
        fig.colorbar(im, ax=ax, label="V")
    _save(fig, spec.out_path)
    return spec.out_path


def render_all(trajectory: str, out_dir: str) -> list:
    """One file per figure kind with deterministic names; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    out = []
    for kind in FIGURE_KINDS:
        name = kind.replace("-", "_") + ".svg"
        out.append(render(FigureSpec(trajectory=trajectory, kind=kind,
                                     out_path=os.path.join(out_dir, name))))
    return out
