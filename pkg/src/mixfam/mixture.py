"""Mixtures with fixed components and the two coordinate charts on them.

A mixture over a basis of k fixed components is identified by its weight
vector w on the open simplex (all entries strictly positive, summing to one).
Dropping the first weight gives the eta chart: eta = (w_1, ..., w_{k-1}),
with w_0 = 1 - sum(eta) recovered implicitly.  The eta chart is the natural
parameterization for all of the geometry in this package; conversion is a
plain slice in both directions.

Mixtures are immutable and safe to share across threads.  Sampling requires a
caller-owned ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .components import ComponentBasis
from .errors import BasisMismatch, ConfigError, SimplexViolation

# Weights closer to the boundary than this are rejected: the family lives on
# the OPEN simplex; boundary cases are handled analytically in `bounds`.
WEIGHT_FLOOR = 1e-12
SIMPLEX_SUM_ATOL = 1e-12


def validate_weights(w) -> np.ndarray:
    """Validate and freeze a weight vector on the open simplex."""
    arr = np.array(w, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise SimplexViolation("weights must be a vector of length >= 2")
    if not np.all(np.isfinite(arr)):
        raise SimplexViolation("weights must be finite")
    if np.any(arr < WEIGHT_FLOOR):
        raise SimplexViolation(f"weights must be >= {WEIGHT_FLOOR} (open simplex)")
    if abs(arr.sum() - 1.0) > SIMPLEX_SUM_ATOL:
        raise SimplexViolation(f"weights must sum to 1 within {SIMPLEX_SUM_ATOL}")
    arr.setflags(write=False)
    return arr


def validate_eta(eta) -> np.ndarray:
    """Validate and freeze an eta vector (positive entries, sum < 1)."""
    arr = np.array(eta, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise SimplexViolation("eta must be a non-empty vector")
    if not np.all(np.isfinite(arr)):
        raise SimplexViolation("eta must be finite")
    if np.any(arr < WEIGHT_FLOOR) or arr.sum() > 1.0 - WEIGHT_FLOOR:
        raise SimplexViolation("eta must have positive entries with sum < 1")
    arr.setflags(write=False)
    return arr


def weights_to_eta(w) -> np.ndarray:
    """Drop w_0: (w_0, ..., w_{k-1}) -> (w_1, ..., w_{k-1})."""
    return validate_weights(w)[1:].copy()


def eta_to_weights(eta) -> np.ndarray:
    """Prepend the implicit first weight: eta -> (1 - sum(eta), eta...)."""
    arr = validate_eta(eta)
    return np.concatenate([[1.0 - arr.sum()], arr])


@dataclass(frozen=True)
class Mixture:
    """A mixture density m(x) = sum_i w_i p_i(x) over a fixed basis."""

    basis: ComponentBasis
    weights: np.ndarray

    def __post_init__(self):
        w = validate_weights(self.weights)
        if w.size != self.basis.k:
            raise ConfigError("weight length must equal basis size")
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> int:
        return self.basis.k

    @property
    def eta(self) -> np.ndarray:
        return self.weights[1:].copy()

    @classmethod
    def from_eta(cls, basis: ComponentBasis, eta) -> "Mixture":
        return cls(basis, eta_to_weights(eta))

    def log_density(self, x):
        """log sum_i w_i p_i(x), evaluated as a log-sum-exp for tail stability."""
        logs = self.basis.log_density_matrix(x)
        return logsumexp(logs + np.log(self.weights)[:, None], axis=0)

    def density(self, x):
        return np.exp(self.log_density(x))

    def cdf(self, x):
        vals = np.stack([c.cdf(x) for c in self.basis.components])
        return np.tensordot(self.weights, vals, axes=1)

    def quantile(self, q: float, bracket: tuple[float, float] = (-1e6, 1e6)) -> float:
        """Inverse CDF by bisection (univariate continuous bases only)."""
        if self.basis.measure_kind != "continuous":
            raise ConfigError("quantile inversion is for continuous bases")
        if not 0.0 < q < 1.0:
            raise ConfigError("quantile level must be in (0, 1)")
        return float(brentq(lambda x: float(self.cdf(x)) - q, *bracket, xtol=1e-12))

    def sample(self, rng: np.random.Generator, n: int):
        """Ancestral sampling: component index ~ Categorical(w), then component draw."""
        n = int(n)
        if n < 1:
            raise ConfigError("sample count must be >= 1")
        idx = np.searchsorted(np.cumsum(self.weights), rng.random(n), side="right")
        out = np.empty(n, dtype=float if self.basis.measure_kind == "continuous" else int)
        for i, comp in enumerate(self.basis.components):
            sel = idx == i
            cnt = int(sel.sum())
            if cnt:
                out[sel] = comp.sample(rng, cnt)
        return out

    def atom_pmf(self) -> np.ndarray:
        """Exact atom masses of the mixture (counting bases only)."""
        return self.weights @ self.basis.pmf_matrix()

    def to_dict(self):
        return {"basis": self.basis.to_dict(), "w": [float(v) for v in self.weights]}


def convex_combine(m1: Mixture, m2: Mixture, alpha: float) -> Mixture:
    """The mixture (1-alpha) m1 + alpha m2, again a mixture over the same basis."""
    if m1.basis is not m2.basis and m1.basis != m2.basis:
        raise BasisMismatch("convex combination requires a shared basis")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError("alpha must lie in [0, 1]")
    return Mixture(m1.basis, (1.0 - alpha) * m1.weights + alpha * m2.weights)
