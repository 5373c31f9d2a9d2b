"""Rectangular bicomponent domain with a straight crack line at mid-height.

The domain (0,lx) x (0,ly) is split by the interface y = ly/2 into an upper
and a lower half.  A structured P1 triangulation is built on a regular grid;
the grid nodes sitting on the interface are duplicated so that the two halves
carry independent traces there.  The base grid node acts as the lower-side
copy, the appended duplicate as the upper-side copy, and the jump at an
interface pair is (upper value) - (lower value).

Boundary tagging: bottom edge (y=0) and top edge (y=ly) are Dirichlet, the
lateral edges are natural (Neumann).  Each half owns one full Dirichlet edge,
so the constrained Laplace system is nonsingular on both sides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

TAG_INTERIOR = "interior"
TAG_DIRICHLET_BOTTOM = "dirichlet_bottom"
TAG_DIRICHLET_TOP = "dirichlet_top"
TAG_NEUMANN = "neumann"


@dataclass(frozen=True)
class DomainSpec:
    lx: float
    ly: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.lx > 0.0 and self.ly > 0.0):
            raise ValueError("domain lengths lx, ly must be positive")
        if self.nx < 1:
            raise ValueError("nx must be at least 1")
        if self.ny < 2 or self.ny % 2 != 0:
            raise ValueError(
                f"ny must be even and at least 2 so the crack line lies on a mesh line, got {self.ny}"
            )


@dataclass(frozen=True)
class Mesh:
    spec: DomainSpec
    coords: np.ndarray          # (n_nodes, 2)
    triangles: np.ndarray       # (n_tri, 3), CCW
    tags: tuple                 # per-node tag string
    pairs: np.ndarray           # (m, 2) interface (upper copy, lower copy)
    weights: np.ndarray         # (m,) trapezoid lumping, sums to lx

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_interface(self) -> int:
        return self.pairs.shape[0]

    def dirichlet_nodes(self):
        tags = np.array(self.tags)
        bottom = np.flatnonzero(tags == TAG_DIRICHLET_BOTTOM)
        top = np.flatnonzero(tags == TAG_DIRICHLET_TOP)
        return bottom, top


@dataclass(frozen=True)
class StiffnessSystem:
    K: sp.csr_matrix            # symmetric PSD before constraints
    mesh: Mesh
    constrained: np.ndarray     # Dirichlet node ids
    free: np.ndarray            # all remaining node ids


def build_mesh(spec: DomainSpec) -> Mesh:
    """Structured triangulation with duplicated interface nodes.

    Node ordering is row-major on the base grid (lower-side interface copies
    keep their grid ids), with the upper-side copies appended after the grid.
    """
    nx, ny = spec.nx, spec.ny
    mid = ny // 2
    n_grid = (nx + 1) * (ny + 1)
    m = nx + 1

    xs = np.linspace(0.0, spec.lx, nx + 1)
    ys = np.linspace(0.0, spec.ly, ny + 1)
    coords = np.empty((n_grid + m, 2))
    for j in range(ny + 1):
        for i in range(nx + 1):
            coords[j * (nx + 1) + i] = (xs[i], ys[j])
    # upper-side duplicates of the interface row
    for i in range(nx + 1):
        coords[n_grid + i] = (xs[i], ys[mid])

    def gid(j: int, i: int) -> int:
        return j * (nx + 1) + i

    def nid(j: int, i: int, upper: bool) -> int:
        if j == mid and upper:
            return n_grid + i
        return gid(j, i)

    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    t = 0
    for j in range(ny):
        upper = j >= mid   # cell row above the crack line
        for i in range(nx):
            bl = nid(j, i, upper)
            br = nid(j, i + 1, upper)
            tl = nid(j + 1, i, False)
            tr = nid(j + 1, i + 1, False)
            # fixed diagonal bl-tr
            triangles[t] = (bl, br, tr)
            triangles[t + 1] = (bl, tr, tl)
            t += 2

    tags = []
    for n in range(n_grid + m):
        x, y = coords[n]
        if n < n_grid and n // (nx + 1) == 0:
            tags.append(TAG_DIRICHLET_BOTTOM)
        elif n < n_grid and n // (nx + 1) == ny:
            tags.append(TAG_DIRICHLET_TOP)
        elif x == 0.0 or x == spec.lx:
            tags.append(TAG_NEUMANN)
        else:
            tags.append(TAG_INTERIOR)

    pairs = np.array([(n_grid + i, gid(mid, i)) for i in range(nx + 1)], dtype=np.int64)
    h = spec.lx / nx
    weights = np.full(m, h)
    weights[0] = 0.5 * h
    weights[-1] = 0.5 * h

    return Mesh(spec=spec, coords=coords, triangles=triangles, tags=tuple(tags),
                pairs=pairs, weights=weights)


def _element_stiffness(xy: np.ndarray) -> np.ndarray:
    """P1 gradient inner-product matrix of one triangle (3x3)."""
    x, y = xy[:, 0], xy[:, 1]
    b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]])
    c = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])
    area2 = x[0] * b[0] + x[1] * b[1] + x[2] * b[2]   # 2*area, signed
    if area2 <= 0.0:
        raise ValueError("degenerate or negatively oriented triangle in assembly")
    return (np.outer(b, b) + np.outer(c, c)) / (2.0 * area2)


def assemble_stiffness(mesh: Mesh) -> StiffnessSystem:
    """Assemble the global Laplace stiffness on the broken space."""
    n = mesh.n_nodes
    nt = mesh.triangles.shape[0]
    rows = np.empty(9 * nt, dtype=np.int64)
    cols = np.empty(9 * nt, dtype=np.int64)
    vals = np.empty(9 * nt)
    k = 0
    for tri in mesh.triangles:
        ke = _element_stiffness(mesh.coords[tri])
        for a in range(3):
            for b in range(3):
                rows[k] = tri[a]
                cols[k] = tri[b]
                vals[k] = ke[a, b]
                k += 1
    K = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    tags = np.array(mesh.tags)
    constrained = np.flatnonzero((tags == TAG_DIRICHLET_BOTTOM) | (tags == TAG_DIRICHLET_TOP))
    free = np.setdiff1d(np.arange(n), constrained)
    return StiffnessSystem(K=K, mesh=mesh, constrained=constrained, free=free)


def dirichlet_lift(mesh: Mesh, amp: float) -> np.ndarray:
    """Nodal values of the boundary-datum profile amp * y / ly.

    The profile is harmonic, continuous across the crack line, and exactly
    representable in the P1 space, so it doubles as its own discrete harmonic
    extension with zero jump.
    """
    return amp * mesh.coords[:, 1] / mesh.spec.ly


def lift_gradient_norm(spec: DomainSpec) -> float:
    """L2 norm of the gradient of the unit profile y / ly."""
    return np.sqrt(spec.lx / spec.ly)


def field_energy(system: StiffnessSystem, u: np.ndarray) -> float:
    """Discrete Dirichlet energy 0.5 * u'Ku of a nodal field."""
    return 0.5 * float(u @ (system.K @ u))


def dump_mesh_csv(mesh: Mesh, nodes_path, triangles_path) -> None:
    """Debug dump: nodes (id, x, y, tag) and triangles (n0, n1, n2)."""
    with open(nodes_path, "w") as f:
        f.write("id,x,y,tag\n")
        for n in range(mesh.n_nodes):
            x, y = mesh.coords[n]
            f.write(f"{n},{x!r},{y!r},{mesh.tags[n]}\n")
    with open(triangles_path, "w") as f:
        f.write("n0,n1,n2\n")
        for tri in mesh.triangles:
            f.write(f"{tri[0]},{tri[1]},{tri[2]}\n")
