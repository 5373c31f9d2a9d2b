"""Discrete-time quasistatic evolution with cumulated-variation bookkeeping.

Each step globally minimizes elastic energy plus the incremental dissipation
given the previous jump vector, then updates the cumulated variation by the
absolute jump increment.  The energy ledger tracks elastic, dissipated and
work totals per step; the work increment uses the left-endpoint field of the
piecewise-constant interpolation, which is the convention under which the
one-sided energy-dissipation inequality with the a-priori drift bound holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .laws import LawField
from .reduced import ReducedModel, reduced_energy, traction, work_rate
from .stepsolve import SolverOptions, StepNonConvergence, StepProblem, solve_step


class InitialNotStable(ValueError):
    """The supplied initial state admits a strictly better competitor."""

    def __init__(self, message, competitor=None, improvement=0.0):
        super().__init__(message)
        self.competitor = competitor
        self.improvement = improvement


class EvolutionAborted(RuntimeError):
    """A step solver failed; the trajectory computed so far is attached."""

    def __init__(self, message, partial=None, step=None):
        super().__init__(message)
        self.partial = partial
        self.step = step


@dataclass(frozen=True)
class LoadProgram:
    """Piecewise-linear boundary amplitude over [0, T]."""

    breakpoints: tuple   # ((t0, a0), (t1, a1), ...), t strictly increasing, t0 = 0

    def __post_init__(self):
        bp = tuple((float(t), float(a)) for t, a in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        ts = [t for t, _ in bp]
        if len(bp) < 2:
            raise ValueError("load program needs at least two breakpoints")
        if ts[0] != 0.0:
            raise ValueError("load program must start at t = 0")
        if any(t1 <= t0 for t0, t1 in zip(ts, ts[1:])):
            raise ValueError("load breakpoint times must be strictly increasing")

    @property
    def T(self) -> float:
        return self.breakpoints[-1][0]

    def amplitude(self, t: float) -> float:
        ts = np.array([p[0] for p in self.breakpoints])
        vs = np.array([p[1] for p in self.breakpoints])
        return float(np.interp(t, ts, vs))

    def total_variation(self, a: float, b: float) -> float:
        """Integral of |amp'| over [a, b], exact for the piecewise-linear amp."""
        if b < a:
            raise ValueError("empty interval")
        tv = 0.0
        for (t0, a0), (t1, a1) in zip(self.breakpoints, self.breakpoints[1:]):
            lo, hi = max(a, t0), min(b, t1)
            if hi > lo:
                tv += abs(a1 - a0) * (hi - lo) / (t1 - t0)
        return tv

    def stretched(self, factor: float) -> "LoadProgram":
        """Time-reparameterized program (same amplitudes, scaled times)."""
        return LoadProgram(tuple((factor * t, a) for t, a in self.breakpoints))


@dataclass(frozen=True)
class InitialState:
    z0: np.ndarray
    V0: np.ndarray

    def __post_init__(self):
        z0 = np.asarray(self.z0, dtype=float)
        V0 = np.asarray(self.V0, dtype=float)
        object.__setattr__(self, "z0", z0)
        object.__setattr__(self, "V0", V0)
        if z0.shape != V0.shape or z0.ndim != 1:
            raise ValueError("initial jump and variation must be 1d arrays of equal length")
        if np.any(V0 < np.abs(z0)):
            raise ValueError("initial variation must dominate the initial jump magnitude")

    @classmethod
    def rest(cls, m: int) -> "InitialState":
        return cls(z0=np.zeros(m), V0=np.zeros(m))


@dataclass(frozen=True)
class EnergyAudit:
    elastic: np.ndarray
    dissipated: np.ndarray
    work: np.ndarray
    drift: np.ndarray
    eta_k: float


@dataclass
class Trajectory:
    """Per-step records of one discrete evolution."""

    times: np.ndarray          # (k+1,)
    amps: np.ndarray           # (k+1,)
    z: np.ndarray              # (k+1, m)
    V: np.ndarray              # (k+1, m)
    tractions: np.ndarray      # (k+1, m)
    elastic: np.ndarray        # (k+1,)
    dissipated: np.ndarray     # (k+1,)
    work: np.ndarray           # (k+1,)
    drift: np.ndarray          # (k+1,)
    broken: np.ndarray         # (k+1, m) bool, V >= theta
    sweeps: np.ndarray         # (k+1,)
    start_index: np.ndarray    # (k+1,)
    residuals: np.ndarray      # (k+1,)
    eta_k: float
    laws: LawField
    weights: np.ndarray

    @property
    def k(self) -> int:
        return self.times.size - 1

    @property
    def m(self) -> int:
        return self.z.shape[1]

    @property
    def audit(self) -> EnergyAudit:
        return EnergyAudit(elastic=self.elastic, dissipated=self.dissipated,
                           work=self.work, drift=self.drift, eta_k=self.eta_k)

    def rupture_times(self) -> list:
        """First time each node's variation reaches its threshold (None if never)."""
        out = []
        for e in range(self.m):
            hits = np.flatnonzero(self.broken[:, e])
            out.append(float(self.times[hits[0]]) if hits.size else None)
        return out

    def state_at(self, t: float) -> int:
        """Step index of the piecewise-constant interpolation at time t."""
        i = int(np.searchsorted(self.times, t, side="right") - 1)
        return min(max(i, 0), self.k)


def eta_bound(load: LoadProgram, grad_norm: float, k: int) -> float:
    """A-priori drift bound: half of (max step datum increment) x (total)."""
    if k < 1:
        raise ValueError("need at least one step")
    T = load.T
    total = load.total_variation(0.0, T) * grad_norm
    worst = 0.0
    for i in range(1, k + 1):
        tv = load.total_variation((i - 1) * T / k, i * T / k) * grad_norm
        if tv > worst:
            worst = tv
    return 0.5 * worst * total


def discrete_variation(traj: Trajectory, e: int, i: int, j: int) -> float:
    """Sum of absolute jump increments of node e over steps i+1 .. j."""
    if not (0 <= i <= j <= traj.k) or not (0 <= e < traj.m):
        raise IndexError("variation query out of range")
    return float(np.sum(np.abs(np.diff(traj.z[i:j + 1, e]))))


def run(model: ReducedModel, laws: LawField, load: LoadProgram, k: int,
        initial: Optional[InitialState] = None,
        opts: SolverOptions = SolverOptions()) -> Trajectory:
    """Run the incremental scheme on the uniform partition of [0, T]."""
    m = model.m
    if initial is None:
        initial = InitialState.rest(m)
    if initial.z0.size != m:
        raise ValueError("initial state dimension disagrees with the model")
    T = load.T
    theta = laws.theta()
    grad_norm = 1.0
    if model.mesh is not None:
        spec = model.mesh.spec
        grad_norm = float(np.sqrt(spec.lx / spec.ly))

    # stability audit of the initial state: one re-solve with zero increment
    amp0 = load.amplitude(0.0)
    audit_problem = StepProblem(model=model, laws=laws, V_prev=initial.V0,
                                p=initial.z0, amp=amp0)
    stay = audit_problem.total_energy(initial.z0)
    probe = solve_step(audit_problem, opts)
    if stay - probe.total > opts.tol:
        raise InitialNotStable(
            f"initial state is not globally stable: a competitor improves the energy by {stay - probe.total!r}",
            competitor=probe.z, improvement=stay - probe.total)

    times = np.array([i * T / k for i in range(k + 1)])
    amps = np.array([load.amplitude(t) for t in times])
    Z = np.empty((k + 1, m))
    V = np.empty((k + 1, m))
    TR = np.empty((k + 1, m))
    elastic = np.empty(k + 1)
    dissipated = np.empty(k + 1)
    work = np.empty(k + 1)
    sweeps = np.zeros(k + 1, dtype=np.int64)
    start_index = np.zeros(k + 1, dtype=np.int64)
    residuals = np.zeros(k + 1)

    Z[0] = initial.z0
    V[0] = initial.V0
    TR[0] = traction(model, Z[0], amps[0])
    elastic[0] = reduced_energy(model, Z[0], amps[0])
    dissipated[0] = float(model.weights @ laws.evaluate(V[0]))
    work[0] = 0.0
    residuals[0] = probe.residual

    def finish(upto: int) -> Trajectory:
        sl = slice(0, upto + 1)
        drift = (elastic[sl] + dissipated[sl]) - (elastic[0] + dissipated[0]) - work[sl]
        return Trajectory(
            times=times[sl], amps=amps[sl], z=Z[sl].copy(), V=V[sl].copy(),
            tractions=TR[sl].copy(), elastic=elastic[sl].copy(),
            dissipated=dissipated[sl].copy(), work=work[sl].copy(), drift=drift,
            broken=(V[sl] >= theta), sweeps=sweeps[sl].copy(),
            start_index=start_index[sl].copy(), residuals=residuals[sl].copy(),
            eta_k=eta_bound(load, grad_norm, k), laws=laws, weights=model.weights)

    for i in range(1, k + 1):
        problem = StepProblem(model=model, laws=laws, V_prev=V[i - 1], p=Z[i - 1],
                              amp=float(amps[i]))
        try:
            sol = solve_step(problem, opts)
        except StepNonConvergence as exc:
            raise EvolutionAborted(f"step {i} failed: {exc}", partial=finish(i - 1),
                                   step=i) from exc
        Z[i] = sol.z
        V[i] = V[i - 1] + np.abs(Z[i] - Z[i - 1])
        TR[i] = traction(model, Z[i], amps[i])
        elastic[i] = reduced_energy(model, Z[i], amps[i])
        dissipated[i] = float(model.weights @ laws.evaluate(V[i]))
        work[i] = work[i - 1] + (amps[i] - amps[i - 1]) * work_rate(model, Z[i - 1], amps[i - 1])
        sweeps[i] = sol.sweeps
        start_index[i] = sol.start_index
        residuals[i] = sol.residual

    return finish(k)
