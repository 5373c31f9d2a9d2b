"""Cohesive surface energy densities.

The density g maps the cumulated opening variation on the crack line to the
energy dissipated per unit interface length.  Every law shipped here is
concave, nondecreasing, vanishes at zero opening, has a finite initial slope,
and saturates at the toughness ``kappa``.  The saturation threshold is the
smallest variation at which the density reaches ``kappa``; it is infinite for
the exponential family, whose density is strictly increasing.

Two families are provided:

* capped linear:   g(xi) = kappa * min(xi / scale, 1)
* exponential:     g(xi) = kappa * (1 - exp(-xi / scale))

The derivative convention at the capped-linear kink is the right value, i.e.
g'(xi) = 0 for xi >= scale.  Verification code that differentiates g near the
kink uses the guard band ``KINK_GUARD_REL`` and skips the check there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CAPPED_LINEAR = "capped_linear"
EXPONENTIAL = "exponential"
KNOWN_KINDS = (CAPPED_LINEAR, EXPONENTIAL)

# relative half-width of the band around the capped-linear kink where
# slope-based checks are skipped
KINK_GUARD_REL = 1e-8


@dataclass(frozen=True)
class CohesiveLaw:
    """One surface energy density.

    ``kappa`` is the saturation energy per unit interface length; ``scale``
    is the saturation opening for the capped-linear family and the decay
    length for the exponential family.
    """

    kind: str
    kappa: float
    scale: float

    def __post_init__(self):
        if self.kind not in KNOWN_KINDS:
            raise ValueError(f"unknown law kind {self.kind!r}; expected one of {KNOWN_KINDS}")
        if not (self.kappa > 0.0 and math.isfinite(self.kappa)):
            raise ValueError(f"law kappa must be a positive finite number, got {self.kappa}")
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValueError(f"law scale must be a positive finite number, got {self.scale}")

    # -- scalar evaluations (hot path of the 1d solver) --------------------

    def evaluate(self, xi: float) -> float:
        """Energy density at opening-variation ``xi`` (in [0, kappa])."""
        if xi < 0.0:
            raise ValueError(f"opening variation must be nonnegative, got {xi}")
        if self.kind == CAPPED_LINEAR:
            if xi >= self.scale:
                return self.kappa
            return self.kappa * (xi / self.scale)
        # exponential; -expm1 keeps accuracy near zero and maps inf to 1
        return self.kappa * (-math.expm1(-xi / self.scale))

    def derivative(self, xi: float) -> float:
        """Slope g'(xi); the traction threshold at variation ``xi``."""
        if xi < 0.0:
            raise ValueError(f"opening variation must be nonnegative, got {xi}")
        if self.kind == CAPPED_LINEAR:
            return self.kappa / self.scale if xi < self.scale else 0.0
        return (self.kappa / self.scale) * math.exp(-xi / self.scale)

    def curvature(self, xi: float) -> float:
        """Second derivative g''(xi); zero a.e. for the capped family."""
        if xi < 0.0:
            raise ValueError(f"opening variation must be nonnegative, got {xi}")
        if self.kind == CAPPED_LINEAR:
            return 0.0
        return -(self.kappa / self.scale**2) * math.exp(-xi / self.scale)

    def threshold(self) -> float:
        """Smallest variation at which g reaches kappa (inf if never)."""
        return self.scale if self.kind == CAPPED_LINEAR else math.inf

    # -- vector evaluations (audits, trajectory export) ---------------------

    def evaluate_many(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0.0):
            raise ValueError("opening variation must be nonnegative")
        if self.kind == CAPPED_LINEAR:
            return self.kappa * np.minimum(xi / self.scale, 1.0)
        return self.kappa * (-np.expm1(-xi / self.scale))

    def derivative_many(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0.0):
            raise ValueError("opening variation must be nonnegative")
        if self.kind == CAPPED_LINEAR:
            return np.where(xi < self.scale, self.kappa / self.scale, 0.0)
        with np.errstate(under="ignore"):
            return (self.kappa / self.scale) * np.exp(-xi / self.scale)

    def in_kink_guard(self, xi: float) -> bool:
        """True when slope checks should be skipped near the kink."""
        theta = self.threshold()
        if not math.isfinite(theta):
            return False
        return abs(xi - theta) < KINK_GUARD_REL * theta

    def validate(self) -> "LawValidation":
        """Numerical audit of the law axioms on a geometric sample grid."""
        failures = []
        grid = np.concatenate(
            [[0.0], np.geomspace(1e-6 * self.scale, 1e3 * self.scale, 400)]
        )
        g = self.evaluate_many(grid)
        if abs(g[0]) > 1e-12 * self.kappa:
            failures.append(f"g(0) = {g[0]!r} is not zero")
        if np.any(np.diff(g) < -1e-12 * self.kappa):
            failures.append("density is not nondecreasing on the sample grid")
        if np.any(g > self.kappa * (1.0 + 1e-12)):
            failures.append("density exceeds kappa on the sample grid")
        if abs(self.evaluate(math.inf) - self.kappa) > 0.0:
            failures.append("density does not reach kappa at infinity")
        # midpoint concavity
        mid = self.evaluate_many(0.5 * (grid[:-1] + grid[1:]))
        chord = 0.5 * (g[:-1] + g[1:])
        if np.any(mid < chord - 1e-12 * self.kappa):
            failures.append("midpoint concavity violated on the sample grid")
        # derivative against centered differences, away from the kink; the
        # step grows with xi so the saturated tail keeps enough signal, and
        # a floor in natural slope units absorbs cancellation noise there
        theta = self.threshold()
        slope_unit = self.kappa / self.scale
        for xi in grid[1:]:
            h = 1e-6 * max(self.scale, xi)
            if math.isfinite(theta) and abs(xi - theta) < 10.0 * h:
                continue
            fd = (self.evaluate(xi + h) - self.evaluate(max(xi - h, 0.0))) / (
                h + min(xi, h)
            )
            gp = self.derivative(xi)
            if abs(fd - gp) > 1e-6 * abs(gp) and abs(fd - gp) > 1e-11 * slope_unit:
                failures.append(f"derivative mismatch at xi = {xi!r}: fd {fd!r} vs {gp!r}")
                break
        return LawValidation(passed=not failures, failures=failures)


@dataclass(frozen=True)
class LawValidation:
    passed: bool
    failures: list


@dataclass(frozen=True)
class LawField:
    """Per-interface-node cohesive laws (spatial dependence of g)."""

    laws: tuple

    @classmethod
    def uniform(cls, law: CohesiveLaw, n: int) -> "LawField":
        return cls(laws=(law,) * n)

    def __len__(self) -> int:
        return len(self.laws)

    def __getitem__(self, e: int) -> CohesiveLaw:
        return self.laws[e]

    @property
    def homogeneous(self) -> bool:
        return all(law is self.laws[0] or law == self.laws[0] for law in self.laws)

    def kappa(self) -> np.ndarray:
        return np.array([law.kappa for law in self.laws])

    def scale(self) -> np.ndarray:
        return np.array([law.scale for law in self.laws])

    def theta(self) -> np.ndarray:
        return np.array([law.threshold() for law in self.laws])

    def evaluate(self, xi: np.ndarray) -> np.ndarray:
        """Columnwise density of an (..., m) array of variations."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != len(self.laws):
            raise ValueError(f"expected trailing dimension {len(self.laws)}, got {xi.shape}")
        if self.homogeneous:
            return self.laws[0].evaluate_many(xi)
        out = np.empty_like(xi)
        for e, law in enumerate(self.laws):
            out[..., e] = law.evaluate_many(xi[..., e])
        return out

    def derivative(self, xi: np.ndarray) -> np.ndarray:
        """Columnwise slope of an (..., m) array of variations."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != len(self.laws):
            raise ValueError(f"expected trailing dimension {len(self.laws)}, got {xi.shape}")
        if self.homogeneous:
            return self.laws[0].derivative_many(xi)
        out = np.empty_like(xi)
        for e, law in enumerate(self.laws):
            out[..., e] = law.derivative_many(xi[..., e])
        return out

    def in_kink_guard(self, xi: np.ndarray) -> np.ndarray:
        """Boolean mask of entries inside the kink guard band."""
        xi = np.asarray(xi, dtype=float)
        theta = self.theta()
        with np.errstate(invalid="ignore"):
            band = np.abs(xi - theta) < KINK_GUARD_REL * theta
        return np.where(np.isfinite(theta), band, False)
