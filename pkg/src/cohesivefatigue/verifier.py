"""Audits of a computed trajectory against the model's necessary conditions.

Every check is a pure function of the trajectory (plus laws/model where
needed) and reports the worst violation it saw instead of raising.  The
refinement study reruns a scenario over a ladder of step counts and compares
the piecewise-constant interpolants against the finest run, realizing the
convergence statements as tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .laws import LawField
from .oracle import GridSpec, brute_force_step
from .reduced import ReducedModel
from .stepsolve import SolverOptions, StepProblem, solve_step
from .evolution import LoadProgram, InitialState, Trajectory, run

KKT_TOL = 1e-6
FLOW_TOL = 1e-6
ENERGY_TOL = 1e-8
STABILITY_TOL = 1e-8
SLIP_TOL = 1e-8


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    step: Optional[int] = None
    node: Optional[int] = None
    details: dict = field(default_factory=dict)


@dataclass
class AuditReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    def summary_lines(self) -> list:
        lines = []
        for c in self.checks:
            state = "pass" if c.passed else "FAIL"
            where = ""
            if c.step is not None:
                where = f" at step {c.step}" + (f", node {c.node}" if c.node is not None else "")
            lines.append(f"[{state}] {c.name}: worst violation {c.worst:.3e}{where}")
        return lines


def _argmax_location(arr: np.ndarray):
    """(step, node) of the largest entry of a (k+1, m) or (k+1,) array."""
    idx = int(np.argmax(arr))
    if arr.ndim == 1:
        return idx, None
    return idx // arr.shape[1], idx % arr.shape[1]


def check_energy_balance(traj: Trajectory, tol: float = ENERGY_TOL) -> CheckResult:
    """One-sided step-energy inequality: drift never exceeds the a-priori bound."""
    over = traj.drift - traj.eta_k
    worst = float(np.max(over))
    step, _ = _argmax_location(over)
    return CheckResult(
        name="energy_balance", passed=bool(worst <= tol), worst=worst, step=step,
        details={"eta_k": traj.eta_k, "max_abs_drift": float(np.max(np.abs(traj.drift)))})


def check_irreversibility(traj: Trajectory, pair_samples: int = 64) -> CheckResult:
    """Componentwise monotonicity of V, V + z and V - z, plus pairwise growth."""
    finite_v = traj.V[np.isfinite(traj.V)]
    scale = max(1.0, float(np.max(np.abs(traj.z))) if traj.z.size else 0.0,
                float(np.max(finite_v)) if finite_v.size else 0.0)
    atol = 1e-12 * scale
    worst = -np.inf
    loc = (None, None)
    for arr in (traj.V, traj.V + traj.z, traj.V - traj.z):
        with np.errstate(invalid="ignore"):
            dec = -np.diff(arr, axis=0)   # positive where the quantity decreased
        dec = np.nan_to_num(dec, nan=0.0)   # inf stays inf under the update
        w = float(np.max(dec)) if dec.size else 0.0
        if w > worst:
            worst = w
            s, n = _argmax_location(dec)
            loc = (s + 1, n)
    # pairwise consequence on a deterministic subsample
    k = traj.k
    idx = np.unique(np.linspace(0, k, min(pair_samples, k + 1)).astype(int))
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            i, j = idx[a], idx[b]
            with np.errstate(invalid="ignore"):
                gap = traj.V[i] + np.abs(traj.z[j] - traj.z[i]) - traj.V[j]
            gap = np.nan_to_num(gap, nan=0.0)
            w = float(np.max(gap)) if gap.size else 0.0
            if w > worst:
                worst = w
                loc = (int(j), int(np.argmax(gap)))
    return CheckResult(name="irreversibility", passed=bool(worst <= atol), worst=worst,
                       step=loc[0], node=loc[1], details={"tolerance": atol})


def check_kkt(traj: Trajectory, laws: LawField, tol: float = KKT_TOL) -> CheckResult:
    """Traction bounded by the threshold at the stored variation, everywhere.

    Law arguments are clamped at zero so that a corrupted (negative) variation
    still gets audited; the irreversibility check reports the corruption.
    """
    gp = laws.derivative(np.maximum(traj.V, 0.0))
    over = np.abs(traj.tractions) - gp
    over[laws.in_kink_guard(traj.V)] = -np.inf
    worst = float(np.max(over))
    step, node = _argmax_location(over)
    return CheckResult(name="kkt_traction_bound", passed=bool(worst <= tol), worst=worst,
                       step=step, node=node, details={"tolerance": tol})


def check_flow_rule(traj: Trajectory, laws: LawField, slip_tol: float = SLIP_TOL,
                    tol: float = FLOW_TOL) -> CheckResult:
    """Signed threshold attainment at every slipping step/node."""
    dz = np.diff(traj.z, axis=0)
    slipping = np.abs(dz) > slip_tol
    gp = laws.derivative(np.maximum(traj.V[1:], 0.0))
    mismatch = np.abs(traj.tractions[1:] - np.sign(dz) * gp)
    mismatch[~slipping] = -np.inf
    mismatch[laws.in_kink_guard(traj.V[1:])] = -np.inf
    worst = float(np.max(mismatch)) if mismatch.size else -np.inf
    step, node = _argmax_location(mismatch)
    return CheckResult(name="flow_rule", passed=bool(worst <= tol), worst=worst,
                       step=step + 1 if mismatch.size else None, node=node,
                       details={"tolerance": tol, "slipping_entries": int(np.sum(slipping))})


def check_global_stability(traj: Trajectory, model: ReducedModel, laws: LawField,
                           sample_steps: Optional[list] = None, oracle_limit: int = 3,
                           oracle_dz: float = 5e-3, tol: float = STABILITY_TOL,
                           opts: SolverOptions = SolverOptions()) -> CheckResult:
    """Re-minimize sampled steps with zero allowed increment and compare energies.

    The stored state is treated as the previous state; any competitor that
    lowers elastic plus incremental dissipation beyond the tolerance is a
    stability violation.  Small interfaces also get a brute-force competitor.
    """
    k = traj.k
    if sample_steps is None:
        sample_steps = sorted(set(np.linspace(0, k, min(21, k + 1)).astype(int).tolist()))
    worst = -np.inf
    loc = None
    for i in sample_steps:
        problem = StepProblem(model=model, laws=laws, V_prev=np.maximum(traj.V[i], 0.0),
                              p=traj.z[i], amp=float(traj.amps[i]))
        stay = problem.total_energy(traj.z[i])
        best = solve_step(problem, opts).total
        if model.m <= oracle_limit:
            grid = GridSpec.for_problem(problem, oracle_dz)
            _, f_oracle = brute_force_step(problem, grid)
            best = min(best, f_oracle)
        gap = stay - best
        if gap > worst:
            worst = gap
            loc = int(i)
    return CheckResult(name="global_stability", passed=bool(worst <= tol), worst=worst,
                       step=loc, details={"tolerance": tol, "samples": len(sample_steps)})


def audit_trajectory(traj: Trajectory, model: ReducedModel, laws: LawField,
                     with_stability: bool = True) -> AuditReport:
    checks = [
        check_energy_balance(traj),
        check_irreversibility(traj),
        check_kkt(traj, laws),
        check_flow_rule(traj, laws),
    ]
    if with_stability:
        checks.append(check_global_stability(traj, model, laws))
    return AuditReport(checks=checks)


@dataclass
class RefinementRow:
    k: int
    v_theta_err: float
    jump_err: float
    max_drift: float
    eta_k: float
    rupture_t: Optional[float]


@dataclass
class RefinementTable:
    rows: list
    reference_k: int

    def errors_nonincreasing(self, final_slack: float = 0.1) -> bool:
        """Nonincreasing error columns, allowing slack on the last refinement.

        Errors below 1e-12 count as numerically zero so that runs resolving
        the load exactly (identical paths up to roundoff) compare equal.
        """
        ok = True
        for col in ("v_theta_err", "jump_err"):
            vals = [getattr(r, col) for r in self.rows if r.k != self.reference_k]
            for a, b, is_last in zip(vals, vals[1:], [False] * (len(vals) - 2) + [True]):
                allowance = (1.0 + final_slack) if is_last else 1.0
                if b > a * allowance + 1e-12:
                    ok = False
        return ok

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("k,v_theta_err,jump_err,max_drift,eta_k,rupture_t\n")
            for r in self.rows:
                rt = "" if r.rupture_t is None else repr(r.rupture_t)
                f.write(f"{r.k},{r.v_theta_err!r},{r.jump_err!r},{r.max_drift!r},{r.eta_k!r},{rt}\n")


def refinement_study(model: ReducedModel, laws: LawField, load: LoadProgram,
                     k_list: list, initial: Optional[InitialState] = None,
                     opts: SolverOptions = SolverOptions(),
                     n_time_samples: int = 201) -> RefinementTable:
    """Run one scenario at several step counts against the finest as reference."""
    ks = sorted(set(int(k) for k in k_list))
    if any(k < 10 for k in ks):
        raise ValueError("refinement step counts must be at least 10")
    theta = laws.theta()
    T = load.T
    t_samples = np.linspace(0.0, T, n_time_samples)

    runs = {}
    for k in ks:
        runs[k] = run(model, laws, load, k, initial=initial, opts=opts)

    def sampled(traj: Trajectory):
        idx = [traj.state_at(float(t)) for t in t_samples]
        return traj.z[idx], np.minimum(traj.V[idx], theta)

    k_ref = ks[-1]
    z_ref, vt_ref = sampled(runs[k_ref])

    def last_rupture(traj: Trajectory):
        times = traj.rupture_times()
        if any(t is None for t in times):
            return None
        return max(times)

    rows = []
    for k in ks:
        z_k, vt_k = sampled(runs[k])
        rows.append(RefinementRow(
            k=k,
            v_theta_err=float(np.max(np.abs(vt_k - vt_ref))),
            jump_err=float(np.max(np.abs(z_k - z_ref))),
            max_drift=float(np.max(np.abs(runs[k].drift))),
            eta_k=runs[k].eta_k,
            rupture_t=last_rupture(runs[k]),
        ))
    return RefinementTable(rows=rows, reference_k=k_ref)
