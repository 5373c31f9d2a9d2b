"""Independent ground truth for step minimization and cyclic fatigue.

The grid oracle evaluates the full step objective on a tensor grid (m <= 3)
and polishes the best point with one golden-section pass per coordinate.  It
shares no code path with the coordinate-descent solver and is the reference
for every derived regression value.

The scalar recursion integrates the quasistatic two-bar cycle map directly in
the time-continuous limit: on each triangle-wave leg the jump either sticks
or rides the threshold, with the cumulated variation coupled through
dV = |dz|.  It is the reference for the cyclic fatigue acceptance run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .laws import CohesiveLaw
from .stepsolve import StepProblem

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GridSpec:
    lo: np.ndarray
    hi: np.ndarray
    dz: np.ndarray
    budget: int = 100_000_000

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        dz = np.asarray(self.dz, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "dz", dz)
        if not (lo.shape == hi.shape == dz.shape) or lo.ndim != 1:
            raise ValueError("grid bounds and steps must be 1d arrays of equal length")
        if lo.size > 3:
            raise ValueError("grid oracle supports at most 3 coordinates")
        if np.any(dz <= 0.0) or np.any(hi <= lo):
            raise ValueError("grid ranges must be nonempty with positive steps")
        if np.prod(self.axis_sizes()) > self.budget:
            raise ValueError(
                f"grid of {np.prod(self.axis_sizes())} points exceeds budget {self.budget}")

    def axis_sizes(self) -> np.ndarray:
        return (np.floor((self.hi - self.lo) / self.dz) + 1.0).astype(np.int64)

    def axes(self):
        return [self.lo[e] + self.dz[e] * np.arange(n) for e, n in enumerate(self.axis_sizes())]

    @classmethod
    def for_problem(cls, problem: StepProblem, dz, margin: float = 2.0,
                    budget: int = 100_000_000) -> "GridSpec":
        """Ranges containing p and the elastic minimizer with a scale margin."""
        z_el = problem.model.elastic_minimizer(problem.amp)
        pad = margin * float(np.max(problem.laws.scale()))
        lo = np.minimum(problem.p, z_el) - pad
        hi = np.maximum(problem.p, z_el) + pad
        dz = np.broadcast_to(np.asarray(dz, dtype=float), lo.shape).copy()
        return cls(lo=lo, hi=hi, dz=dz, budget=budget)


def _check_margin(problem: StepProblem, grid: GridSpec) -> None:
    z_el = problem.model.elastic_minimizer(problem.amp)
    pad = 2.0 * float(np.max(problem.laws.scale()))
    lo_need = np.minimum(problem.p, z_el) - pad
    hi_need = np.maximum(problem.p, z_el) + pad
    if np.any(grid.lo > lo_need + 1e-12) or np.any(grid.hi < hi_need - 1e-12):
        raise ValueError("grid range must contain p and the elastic minimizer "
                         "with margin 2 * max law scale")


def brute_force_step(problem: StepProblem, grid: GridSpec):
    """Exhaustive tensor-grid minimization of the step objective.

    Returns (z_star, F_star).  Exact grid ties go to the candidate whose
    componentwise |z - p| tuple is lexicographically smallest.
    """
    m = problem.model.m
    if grid.lo.size != m:
        raise ValueError("grid dimension disagrees with the problem")
    _check_margin(problem, grid)

    S = problem.model.S
    c = problem.amp * problem.model.c_unit
    const = 0.5 * problem.amp**2 * problem.model.e0_unit
    w = problem.model.weights
    axes = grid.axes()
    # separable per-axis parts: own quadratic, load, dissipation
    parts = []
    for e in range(m):
        ax = axes[e]
        diss = w[e] * problem.laws[e].evaluate_many(problem.V_prev[e] + np.abs(ax - problem.p[e]))
        parts.append(0.5 * S[e, e] * ax**2 - c[e] * ax + diss)

    ties = []
    if m == 1:
        F = parts[0] + const
        fmin = float(np.min(F))
        for i in np.flatnonzero(F == fmin):
            ties.append((axes[0][i],))
    elif m == 2:
        F = parts[0][:, None] + parts[1][None, :] + S[0, 1] * np.outer(axes[0], axes[1]) + const
        fmin = float(np.min(F))
        for i, j in np.argwhere(F == fmin):
            ties.append((axes[0][i], axes[1][j]))
    else:
        cross12 = S[1, 2] * np.outer(axes[1], axes[2])
        base = parts[1][:, None] + parts[2][None, :] + cross12 + const
        fmin = math.inf
        slices = []
        for i, z0 in enumerate(axes[0]):
            F = base + (parts[0][i] + S[0, 1] * z0 * axes[1])[:, None] \
                + (S[0, 2] * z0) * axes[2][None, :]
            smin = float(np.min(F))
            slices.append(smin)
            if smin < fmin:
                fmin = smin
        for i, z0 in enumerate(axes[0]):
            if slices[i] != fmin:
                continue
            F = base + (parts[0][i] + S[0, 1] * z0 * axes[1])[:, None] \
                + (S[0, 2] * z0) * axes[2][None, :]
            for j, k in np.argwhere(F == fmin):
                ties.append((z0, axes[1][j], axes[2][k]))

    key = lambda zt: tuple(abs(zt[e] - problem.p[e]) for e in range(m))
    z = np.array(min(ties, key=key), dtype=float)

    # one golden-section pass per coordinate around the winning grid point
    for e in range(m):
        lo, hi = z[e] - grid.dz[e], z[e] + grid.dz[e]

        def phi(zeta):
            trial = z.copy()
            trial[e] = zeta
            return problem.total_energy(trial)

        a, b = lo, hi
        x1 = b - _GOLD * (b - a)
        x2 = a + _GOLD * (b - a)
        f1, f2 = phi(x1), phi(x2)
        for _ in range(90):
            if f1 <= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - _GOLD * (b - a)
                f1 = phi(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + _GOLD * (b - a)
                f2 = phi(x2)
            if b - a <= 1e-14 * max(1.0, abs(b)):
                break
        zeta = 0.5 * (a + b)
        if phi(zeta) <= problem.total_energy(z):
            z[e] = zeta

    return z, problem.total_energy(z)


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    z_up: float
    v_up: float
    z_down: float
    v_down: float


@dataclass(frozen=True)
class FatigueResult:
    slipped: bool
    cycles: list = field(default_factory=list)

    def v_after_cycles(self) -> np.ndarray:
        return np.array([r.v_down for r in self.cycles])


def _bisect(fn, lo: float, hi: float, tol: float = 1e-12) -> float:
    f_lo = fn(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_mid == 0.0 or hi - lo <= tol:
            return mid
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scalar_fatigue_recursion(law: CohesiveLaw, s: float, A: float, n_cycles: int,
                             V0: float = 0.0, z0: float = 0.0) -> FatigueResult:
    """Quasistatic cycle map of the scalar two-bar under a 0..A triangle wave.

    Loading leg: the jump rides the threshold until s (A - z) = g'(V) with
    dV = dz; unloading leg: symmetric, ending at s (0 - z) = -g'(V).  Legs
    where the frozen elastic traction stays inside the threshold band do not
    move.  Requires g'(V0) < s A for any slip at all.
    """
    if s <= 0.0:
        raise ValueError("reduced stiffness must be positive")
    gp = law.derivative
    if gp(V0) >= s * A:
        return FatigueResult(slipped=False, cycles=[])

    V, z = float(V0), float(z0)
    records = []
    for n in range(1, n_cycles + 1):
        z_start, V_start = z, V
        if s * (A - z) > gp(V):
            z = _bisect(lambda x: s * (A - x) - gp(V_start + (x - z_start)), z_start, A)
            V = V_start + (z - z_start)
        z_up, v_up = z, V
        if s * z > gp(V):
            z = _bisect(lambda x: gp(v_up + (z_up - x)) - s * x, 0.0, z_up)
            V = v_up + (z_up - z)
        records.append(CycleRecord(cycle=n, z_up=z_up, v_up=v_up, z_down=z, v_down=V))
    return FatigueResult(slipped=True, cycles=records)
