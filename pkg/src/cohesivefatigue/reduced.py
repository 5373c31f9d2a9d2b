"""Exact condensation of the bulk unknowns onto the interface jump vector.

Because the constraints (Dirichlet amplitude, prescribed jump per interface
pair) are affine and the energy is quadratic, the constrained minimizer is an
affine function of (z, amp).  Solving for the m + 1 basis fields (unit
boundary amplitude with zero jump; one unit jump per interface pair with zero
amplitude) therefore condenses the bulk exactly:

    E(z; amp) = 0.5 z'Sz - amp c'z + 0.5 amp^2 e0

The jump is imposed by substitution (upper copy = lower copy + z_e), which
keeps the solved system symmetric positive definite.  Nodal tractions are the
negative energy gradient divided by the interface lumping weight, i.e. the
discrete normal derivative on the crack line; positive traction resists an
increasing jump.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import (
    Mesh,
    StiffnessSystem,
    TAG_DIRICHLET_BOTTOM,
    TAG_DIRICHLET_TOP,
    dirichlet_lift,
)

_SOLVE_RTOL = 1e-12


@dataclass(frozen=True)
class ReducedModel:
    S: np.ndarray               # (m, m) dense SPD
    c_unit: np.ndarray          # (m,), c(amp) = amp * c_unit
    e0_unit: float              # e0(amp) = 0.5 * amp^2 * e0_unit
    weights: np.ndarray         # (m,) interface lumping weights
    mesh: Optional[Mesh] = None
    basis: Optional[np.ndarray] = None   # (n_nodes, m + 1): lift field, unit-jump fields
    K: Optional[sp.csr_matrix] = None

    @property
    def m(self) -> int:
        return self.S.shape[0]

    @classmethod
    def synthetic(cls, S, c_unit, e0_unit, weights) -> "ReducedModel":
        """Mesh-free model for solver batteries and oracle problems."""
        S = np.asarray(S, dtype=float)
        c_unit = np.asarray(c_unit, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if S.shape != (len(c_unit), len(c_unit)) or len(weights) != len(c_unit):
            raise ValueError("inconsistent synthetic model dimensions")
        np.linalg.cholesky(S)
        return cls(S=S, c_unit=c_unit, e0_unit=float(e0_unit), weights=weights)

    def elastic_minimizer(self, amp: float) -> np.ndarray:
        """Unconstrained minimizer of the condensed elastic energy."""
        return np.linalg.solve(self.S, amp * self.c_unit)


def _constraint_operator(mesh: Mesh):
    """Map from free unknowns to all nodes, and the offset carriers.

    u = T uhat + z-offsets on upper copies + amp-offsets on Dirichlet nodes.
    Free unknowns are every node except Dirichlet nodes and upper copies.
    """
    n = mesh.n_nodes
    tags = np.array(mesh.tags)
    upper = mesh.pairs[:, 0]
    lower = mesh.pairs[:, 1]
    constrained = np.zeros(n, dtype=bool)
    constrained[tags == TAG_DIRICHLET_BOTTOM] = True
    constrained[tags == TAG_DIRICHLET_TOP] = True
    constrained[upper] = True
    free = np.flatnonzero(~constrained)
    col_of = -np.ones(n, dtype=np.int64)
    col_of[free] = np.arange(free.size)

    rows = list(free)
    cols = list(col_of[free])
    # slave each upper copy to its lower partner
    rows.extend(upper)
    cols.extend(col_of[lower])
    vals = np.ones(len(rows))
    T = sp.coo_matrix((vals, (rows, cols)), shape=(n, free.size)).tocsr()
    return T, free


def _offset_vector(mesh: Mesh, z: np.ndarray, amp: float) -> np.ndarray:
    d = dirichlet_lift(mesh, amp)
    tags = np.array(mesh.tags)
    keep = (tags == TAG_DIRICHLET_BOTTOM) | (tags == TAG_DIRICHLET_TOP)
    d = np.where(keep, d, 0.0)
    d[mesh.pairs[:, 0]] += z
    return d


def condense(mesh: Mesh, system: StiffnessSystem) -> ReducedModel:
    """Build the condensed interface model via m + 1 sparse SPD solves."""
    K = system.K
    T, _ = _constraint_operator(mesh)
    Khat = (T.T @ K @ T).tocsc()
    try:
        lu = spla.splu(Khat)
    except RuntimeError as exc:   # pragma: no cover - impossible with both Dirichlet edges
        raise RuntimeError(f"constrained bulk system is singular: {exc}") from exc

    m = mesh.n_interface

    def solve_for(d: np.ndarray) -> np.ndarray:
        rhs = -(T.T @ (K @ d))
        uhat = lu.solve(rhs)
        # one pass of iterative refinement keeps the residual contract honest
        for _ in range(2):
            r = Khat @ uhat - rhs
            if np.linalg.norm(r) <= _SOLVE_RTOL * max(np.linalg.norm(rhs), 1e-300):
                break
            uhat = uhat - lu.solve(r)
        else:
            r = Khat @ uhat - rhs
            if np.linalg.norm(r) > _SOLVE_RTOL * max(np.linalg.norm(rhs), 1e-300):
                raise RuntimeError("bulk solve failed to reach the residual tolerance")
        return T @ uhat + d

    basis = np.empty((mesh.n_nodes, m + 1))
    basis[:, 0] = solve_for(_offset_vector(mesh, np.zeros(m), 1.0))
    eye = np.eye(m)
    for e in range(m):
        basis[:, e + 1] = solve_for(_offset_vector(mesh, eye[e], 0.0))

    G = K @ basis
    S = basis[:, 1:].T @ G[:, 1:]
    c_unit = -(basis[:, 1:].T @ G[:, 0])
    e0_unit = float(basis[:, 0] @ G[:, 0])

    skew = np.max(np.abs(S - S.T)) if m > 0 else 0.0
    if skew > 1e-12 * max(1.0, np.max(np.abs(S))):
        raise RuntimeError(f"condensed matrix is not symmetric (skew {skew!r})")
    S = 0.5 * (S + S.T)
    np.linalg.cholesky(S)   # raises if not positive definite

    return ReducedModel(S=S, c_unit=c_unit, e0_unit=e0_unit,
                        weights=mesh.weights.copy(), mesh=mesh, basis=basis, K=K)


def reduced_energy(model: ReducedModel, z: np.ndarray, amp: float) -> float:
    """Condensed elastic energy at jump vector z and boundary amplitude amp."""
    z = np.asarray(z, dtype=float)
    if z.shape != (model.m,):
        raise ValueError(f"jump vector has shape {z.shape}, expected ({model.m},)")
    return float(0.5 * z @ (model.S @ z) - amp * (model.c_unit @ z)
                 + 0.5 * amp * amp * model.e0_unit)


def traction(model: ReducedModel, z: np.ndarray, amp: float) -> np.ndarray:
    """Nodal tractions t_e = (amp c - Sz)_e / w_e on the interface."""
    z = np.asarray(z, dtype=float)
    if z.shape != (model.m,):
        raise ValueError(f"jump vector has shape {z.shape}, expected ({model.m},)")
    return (amp * model.c_unit - model.S @ z) / model.weights


def work_rate(model: ReducedModel, z: np.ndarray, amp: float) -> float:
    """Inner product of the equilibrium field gradient with the unit-lift gradient."""
    return float(amp * model.e0_unit - model.c_unit @ np.asarray(z, dtype=float))


def reconstruct_bulk(model: ReducedModel, z: np.ndarray, amp: float) -> np.ndarray:
    """Full nodal field at (z, amp); superposition of the condensation basis."""
    if model.basis is None:
        raise ValueError("model carries no bulk basis (synthetic model?)")
    z = np.asarray(z, dtype=float)
    if z.shape != (model.m,):
        raise ValueError(f"jump vector has shape {z.shape}, expected ({model.m},)")
    return model.basis[:, 0] * amp + model.basis[:, 1:] @ z


def interior_residual(model: ReducedModel, u: np.ndarray) -> float:
    """Max discrete Laplacian residual over free (non-Dirichlet) unknowns."""
    if model.K is None or model.mesh is None:
        raise ValueError("model carries no bulk operator (synthetic model?)")
    T, _ = _constraint_operator(model.mesh)
    return float(np.max(np.abs(T.T @ (model.K @ u))))


def dump_reduced_csv(model: ReducedModel, path) -> None:
    """Debug dump of S rows, the load vector and the weights."""
    with open(path, "w") as f:
        f.write("row," + ",".join(f"S_{e}" for e in range(model.m))
                + ",c_unit,weight\n")
        for e in range(model.m):
            f.write(f"{e}," + ",".join(repr(float(x)) for x in model.S[e])
                    + f",{float(model.c_unit[e])!r},{float(model.weights[e])!r}\n")
        f.write("e0_unit," + ",".join([repr(float(model.e0_unit))] * model.m) + ",,\n")
