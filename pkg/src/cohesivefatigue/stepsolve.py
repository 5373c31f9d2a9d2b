"""Global minimization of one incremental problem on the jump vector.

The step objective is the condensed quadratic elastic energy plus the
separable concave dissipation

    F(z) = E(z; amp) + sum_e w_e * g_e(V_e + |z_e - p_e|),

where p is the previous jump vector and V the cumulated variation.  The
objective is nonconvex (quadratic plus concave-of-absolute-value), so each
coordinate subproblem is solved exactly by enumerating all candidate
minimizers, and the full problem runs cyclic coordinate descent from three
deterministic starts covering the stick, slip and full-rupture regimes.

Candidates of the 1d problem h(zeta) = 0.5 a zeta^2 + b zeta + w g(V + |zeta - p|):

* the kink zeta = p (no new slip);
* branch stationary points where the quadratic pull balances the threshold,
  a zeta + b = -+ w g'(V + |zeta - p|), located by safeguarded bisection with
  Newton acceleration (roots beyond p + |b|/a + 10 scale + 1 are impossible
  because g' >= 0 pins roots at or below -b/a);
* the saturated point zeta = -b/a whenever the variation there reaches the
  law threshold (g locally constant, pure elastic minimum).

Energy ties are broken toward the smallest |zeta - p| (least new recorded
variation); near-ties within TIE_REL relative energy are treated as ties so
that exact analytic ties remain deterministic under roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .laws import CohesiveLaw, LawField
from .reduced import ReducedModel, reduced_energy, traction

TIE_REL = 1e-12
_ROOT_ITERS = 80
_DIP_ITERS = 100


class StepNonConvergence(RuntimeError):
    """Coordinate descent hit the sweep cap before reaching tolerance."""

    def __init__(self, message, best_z=None, sweeps=0):
        super().__init__(message)
        self.best_z = best_z
        self.sweeps = sweeps


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_sweeps: int = 10_000


@dataclass(frozen=True)
class StepProblem:
    model: ReducedModel
    laws: LawField
    V_prev: np.ndarray
    p: np.ndarray
    amp: float

    def __post_init__(self):
        m = self.model.m
        if len(self.laws) != m or self.V_prev.shape != (m,) or self.p.shape != (m,):
            raise ValueError("step problem dimensions disagree with the reduced model")
        if np.any(self.V_prev < 0.0):
            raise ValueError("cumulated variation must be nonnegative")

    def total_energy(self, z: np.ndarray) -> float:
        """Elastic energy plus the full dissipation potential at z."""
        z = np.asarray(z, dtype=float)
        diss = float(self.model.weights @ self.laws.evaluate(self.V_prev + np.abs(z - self.p)))
        return reduced_energy(self.model, z, self.amp) + diss


@dataclass(frozen=True)
class StepSolution:
    z: np.ndarray
    total: float
    elastic: float
    dissipation_increment: float
    sweeps: int
    start_index: int
    residual: float


def _branch_root(a: float, beta: float, w: float, law: CohesiveLaw, V: float,
                 hi: float, segment_capped: bool):
    """Stationary point of 0.5 a eta^2 + beta eta + w g(V + eta) on (0, hi).

    Returns the eta where a eta + beta + w g'(V + eta) crosses zero from
    below (the branch local minimum), or None when the branch has no interior
    minimum.  The bracket is maintained throughout; Newton steps are taken
    when they stay inside it, bisection otherwise.

    When ``segment_capped`` the interval end is the law threshold, where the
    right-valued derivative convention would evaluate the saturated slope;
    the probe therefore stays strictly inside and the bracket never grows
    past the segment (the saturated candidate owns everything beyond it).
    """
    gp = law.derivative
    gpp = law.curvature

    def f(eta):
        return a * eta + beta + w * gp(V + eta)

    if segment_capped:
        hi = hi * (1.0 - 1e-9)
        if hi <= 0.0:
            return None

    f_lo = beta + w * gp(V)
    lo = 0.0
    if f_lo >= 0.0:
        # possible dip only if the slope of f starts negative; f' is
        # nondecreasing for the shipped families, so a nonnegative start
        # means f never descends below f(0) >= 0
        if a + w * gpp(V) >= 0.0:
            return None
        # ternary search for the minimum of the (convex) slope function
        x0, x1 = 0.0, hi
        for _ in range(_DIP_ITERS):
            d = (x1 - x0) / 3.0
            m1, m2 = x0 + d, x1 - d
            if f(m1) <= f(m2):
                x1 = m2
            else:
                x0 = m1
        lo = 0.5 * (x0 + x1)
        f_lo = f(lo)
        if f_lo >= 0.0:
            return None
    f_hi = f(hi)
    if not segment_capped:
        grow = 0
        while f_hi < 0.0 and grow < 8:
            hi *= 2.0
            f_hi = f(hi)
            grow += 1
    if f_hi < 0.0:
        return None

    x = 0.5 * (lo + hi)
    for _ in range(_ROOT_ITERS):
        fx = f(x)
        if fx == 0.0:
            return x
        if fx < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
        fpx = a + w * gpp(V + x)
        if fpx > 0.0:
            step = x - fx / fpx
            x = step if lo < step < hi else 0.5 * (lo + hi)
        else:
            x = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def solve_coordinate_1d(a: float, b: float, law: CohesiveLaw, V_e: float,
                        p_e: float, w_e: float) -> float:
    """Exact global minimizer of one coordinate subproblem."""
    if a <= 0.0:
        raise ValueError(f"coordinate curvature must be positive, got {a}")
    if V_e < 0.0:
        raise ValueError("cumulated variation must be nonnegative")
    theta = law.threshold()
    if V_e >= theta:
        # dissipation is locally constant; pure quadratic minimum
        return -b / a

    def h(zeta):
        return 0.5 * a * zeta * zeta + b * zeta + w_e * law.evaluate(V_e + abs(zeta - p_e))

    candidates = [p_e]
    for sign in (1.0, -1.0):
        beta = sign * (a * p_e + b)
        span = abs(beta) / a + 10.0 * law.scale + 1.0
        capped = math.isfinite(theta) and theta - V_e <= span
        hi = min(span, theta - V_e) if capped else span
        if hi > 0.0:
            eta = _branch_root(a, beta, w_e, law, V_e, hi, capped)
            if eta is not None and eta > 0.0:
                candidates.append(p_e + sign * eta)
    z_sat = -b / a
    if V_e + abs(z_sat - p_e) >= theta:
        candidates.append(z_sat)

    best = None
    for zeta in candidates:
        val = h(zeta)
        if best is None:
            best = (val, abs(zeta - p_e), zeta)
            continue
        tie = TIE_REL * max(1.0, abs(best[0]))
        if val < best[0] - tie:
            best = (val, abs(zeta - p_e), zeta)
        elif val <= best[0] + tie and (abs(zeta - p_e), zeta) < (best[1], best[2]):
            best = (min(val, best[0]), abs(zeta - p_e), zeta)
    return best[2]


def _active_set_polish(problem: StepProblem, z: np.ndarray, f_now: float):
    """Descent-only Newton step on the currently active (moving) coordinates.

    On strongly coupled interfaces cyclic descent crawls: every coordinate is
    locally optimal but the joint slip mode advances a fraction per sweep.
    Restricted to the coordinates that moved, the objective is smooth (the
    capped-linear slip branch is even quadratic), so one Newton solve of the
    active stationarity system recovers the joint step.  The candidate is
    kept only when it strictly lowers the energy, leaving the descent
    invariant and the final certificates untouched.
    """
    model, laws = problem.model, problem.laws
    V, p, w = problem.V_prev, problem.p, model.weights
    delta = z - problem.p
    theta = laws.theta()
    moved = delta != 0.0
    saturated = (V + np.abs(delta)) >= theta
    active = np.flatnonzero(moved | saturated)
    if active.size == 0:
        return z, f_now
    sigma = np.sign(delta[active])
    args = V[active] + np.abs(delta[active])
    gp = np.array([laws[e].derivative(args[i]) for i, e in enumerate(active)])
    gpp = np.array([laws[e].curvature(args[i]) for i, e in enumerate(active)])
    S = model.S
    grad = (S @ z - problem.amp * model.c_unit)[active] + w[active] * sigma * gp
    J = S[np.ix_(active, active)] + np.diag(w[active] * gpp)
    try:
        du = np.linalg.solve(J, -grad)
    except np.linalg.LinAlgError:
        return z, f_now
    if not np.all(np.isfinite(du)):
        return z, f_now
    z_try = z.copy()
    z_try[active] += du
    f_try = problem.total_energy(z_try)
    if f_try < f_now:
        return z_try, f_try
    return z, f_now


def _descend(problem: StepProblem, z0: np.ndarray, opts: SolverOptions):
    """Cyclic coordinate descent with exact 1d solves; returns (z, sweeps).

    Convergence is declared on the plain-sweep coordinate moves alone; the
    active-set polish between sweeps only shortens the crawl.
    """
    model, laws = problem.model, problem.laws
    S, w = model.S, model.weights
    c = problem.amp * model.c_unit
    V, p = problem.V_prev, problem.p
    z = np.array(z0, dtype=float)
    m = z.size
    f_now = None
    for sweep in range(1, opts.max_sweeps + 1):
        move = 0.0
        for e in range(m):
            a = S[e, e]
            b = float(S[e] @ z - c[e]) - a * z[e]
            z_new = solve_coordinate_1d(a, b, laws[e], V[e], p[e], w[e])
            delta = abs(z_new - z[e])
            if delta > move:
                move = delta
            z[e] = z_new
        if move < opts.tol:
            return z, sweep
        if m > 1:
            f_now = problem.total_energy(z)
            z, f_now = _active_set_polish(problem, z, f_now)
    raise StepNonConvergence(
        f"coordinate descent did not converge within {opts.max_sweeps} sweeps",
        best_z=z, sweeps=opts.max_sweeps)


def solve_step(problem: StepProblem, opts: SolverOptions = SolverOptions()) -> StepSolution:
    """Solve one incremental problem from three deterministic starts.

    Starts: stay at the previous jump; the pure elastic minimizer; the
    saturated-elastic point (the elastic minimizer again, which is the fixed
    point of descent when every node is treated as past its threshold).  The
    lowest total energy wins; ties prefer the least added variation.
    """
    z_elastic = problem.model.elastic_minimizer(problem.amp)
    results = []
    z0, sweeps0 = _descend(problem, problem.p, opts)
    results.append((z0, sweeps0))
    z1, sweeps1 = _descend(problem, z_elastic, opts)
    results.append((z1, sweeps1))
    results.append((z_elastic, 0))

    w = problem.model.weights
    best_idx, best_key = None, None
    for idx, (z, _) in enumerate(results):
        val = problem.total_energy(z)
        key_slip = float(w @ np.abs(z - problem.p))
        if best_idx is None:
            best_idx, best_key = idx, (val, key_slip)
            continue
        tie = TIE_REL * max(1.0, abs(best_key[0]))
        if val < best_key[0] - tie or (val <= best_key[0] + tie and key_slip < best_key[1]):
            best_idx, best_key = idx, (min(val, best_key[0]), key_slip)

    z_best = results[best_idx][0]
    elastic = reduced_energy(problem.model, z_best, problem.amp)
    before = float(w @ problem.laws.evaluate(problem.V_prev))
    total = problem.total_energy(z_best)
    return StepSolution(
        z=z_best,
        total=total,
        elastic=elastic,
        dissipation_increment=total - elastic - before,
        sweeps=sweeps0 + sweeps1,
        start_index=best_idx,
        residual=stationarity_residual(problem, z_best),
    )


def stationarity_residual(problem: StepProblem, z: np.ndarray) -> float:
    """Distance of 0 from the coordinatewise subdifferential, in traction units.

    At unmoved nodes the traction must lie within the threshold band
    [-g'(V), g'(V)]; at slipping nodes it must sit on the signed threshold at
    the post-update variation.  Nodes inside the kink guard band are skipped.
    """
    z = np.asarray(z, dtype=float)
    t = traction(problem.model, z, problem.amp)
    worst = 0.0
    for e in range(problem.model.m):
        law = problem.laws[e]
        delta = z[e] - problem.p[e]
        if delta == 0.0:
            r = max(0.0, abs(t[e]) - law.derivative(problem.V_prev[e]))
        else:
            arg = problem.V_prev[e] + abs(delta)
            if law.in_kink_guard(arg):
                continue
            r = abs(t[e] - math.copysign(1.0, delta) * law.derivative(arg))
        if r > worst:
            worst = r
    return worst
