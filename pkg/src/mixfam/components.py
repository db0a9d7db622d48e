"""Fixed component distributions underlying every mixture in this package.

A component is one of four kinds sharing a common interface (natural-log
density, CDF, sampling, closed-form entropy):

* ``Gaussian(mean, stddev)``       -- Lebesgue base measure
* ``Laplace(location, scale)``     -- Lebesgue base measure
* ``Cauchy(location, scale)``      -- Lebesgue base measure (heavy tails,
  included to exercise infinite-KL corner cases)
* ``FinitePmf(p)``                 -- counting measure on atoms ``0..len(p)-1``

Components are immutable values; sampling takes a caller-owned
``numpy.random.Generator`` so there is no hidden shared state.

All logarithms are natural (nats).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, UnsupportedPair
from .seeding import spawn_rng

LOG_2PI = float(np.log(2.0 * np.pi))

# Atom masses below this count as exact zeros of a pmf.
PMF_ATOL = 1e-12


class Component:
    """Common base for the component kinds; concrete classes are dataclasses."""

    kind: str = "abstract"
    measure_kind: str = "abstract"

    def log_density(self, x):
        raise NotImplementedError

    def density(self, x):
        return np.exp(self.log_density(x))

    def cdf(self, x):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int):
        raise NotImplementedError

    def entropy(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(Component):
    mean: float
    stddev: float

    kind = "gaussian"
    measure_kind = "continuous"

    def __post_init__(self):
        if not np.isfinite(self.mean) or not np.isfinite(self.stddev):
            raise ConfigError("gaussian parameters must be finite")
        if self.stddev <= 0.0:
            raise ConfigError("stddev must be strictly positive")

    def log_density(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.stddev
        return -0.5 * (LOG_2PI + z * z) - np.log(self.stddev)

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mean) / self.stddev)

    def sample(self, rng, n):
        return rng.normal(self.mean, self.stddev, size=int(n))

    def entropy(self):
        return 0.5 * (1.0 + LOG_2PI) + np.log(self.stddev)

    def to_dict(self):
        return {"kind": "gaussian", "mean": self.mean, "stddev": self.stddev}


@dataclass(frozen=True)
class Laplace(Component):
    location: float
    scale: float

    kind = "laplace"
    measure_kind = "continuous"

    def __post_init__(self):
        if not np.isfinite(self.location) or not np.isfinite(self.scale):
            raise ConfigError("laplace parameters must be finite")
        if self.scale <= 0.0:
            raise ConfigError("scale must be strictly positive")

    def log_density(self, x):
        z = np.abs(np.asarray(x, dtype=float) - self.location) / self.scale
        return -z - np.log(2.0 * self.scale)

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        return np.where(
            z < 0.0,
            0.5 * np.exp(np.minimum(z, 0.0)),
            1.0 - 0.5 * np.exp(-np.maximum(z, 0.0)),
        )

    def sample(self, rng, n):
        return rng.laplace(self.location, self.scale, size=int(n))

    def entropy(self):
        return 1.0 + np.log(2.0 * self.scale)

    def to_dict(self):
        return {"kind": "laplace", "location": self.location, "scale": self.scale}


@dataclass(frozen=True)
class Cauchy(Component):
    location: float
    scale: float

    kind = "cauchy"
    measure_kind = "continuous"

    def __post_init__(self):
        if not np.isfinite(self.location) or not np.isfinite(self.scale):
            raise ConfigError("cauchy parameters must be finite")
        if self.scale <= 0.0:
            raise ConfigError("scale must be strictly positive")

    def log_density(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        return -np.log(np.pi * self.scale) - np.log1p(z * z)

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        return np.arctan(z) / np.pi + 0.5

    def sample(self, rng, n):
        return self.location + self.scale * rng.standard_cauchy(size=int(n))

    def entropy(self):
        return np.log(4.0 * np.pi * self.scale)

    def to_dict(self):
        return {"kind": "cauchy", "location": self.location, "scale": self.scale}


@dataclass(frozen=True)
class FinitePmf(Component):
    """Probability mass function over the atoms ``0..len(p)-1``.

    Evaluation points are atom indices; ``log_density`` returns ``-inf`` on
    zero-mass atoms.
    """

    p: np.ndarray = field(repr=True)

    kind = "pmf"
    measure_kind = "counting"

    def __post_init__(self):
        arr = np.array(self.p, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ConfigError("pmf must be a non-empty vector")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ConfigError("pmf entries must be finite and >= 0")
        if abs(arr.sum() - 1.0) > PMF_ATOL:
            raise ConfigError(f"pmf must sum to 1 within {PMF_ATOL}")
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    def __eq__(self, other):
        return isinstance(other, FinitePmf) and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash(self.p.tobytes())

    @property
    def alphabet_size(self) -> int:
        return self.p.size

    def log_density(self, x):
        idx = np.asarray(x, dtype=int)
        with np.errstate(divide="ignore"):
            return np.log(self.p)[idx]

    def cdf(self, x):
        # Cumulative over alphabet order; accepts real x (mass at atoms <= x).
        cum = np.concatenate([[0.0], np.cumsum(self.p)])
        idx = np.clip(np.floor(np.asarray(x, dtype=float)).astype(int) + 1, 0, self.p.size)
        return cum[idx]

    def sample(self, rng, n):
        u = rng.random(int(n))
        return np.searchsorted(np.cumsum(self.p), u, side="right")

    def entropy(self):
        pos = self.p[self.p > 0.0]
        return float(-np.sum(pos * np.log(pos)))

    def to_dict(self):
        return {"kind": "pmf", "p": [float(v) for v in self.p]}


_KIND_MAP = {"gaussian": Gaussian, "laplace": Laplace, "cauchy": Cauchy, "pmf": FinitePmf}


def component_from_dict(d: dict) -> Component:
    """Inverse of ``Component.to_dict``."""
    kind = d.get("kind")
    if kind == "gaussian":
        return Gaussian(float(d["mean"]), float(d["stddev"]))
    if kind == "laplace":
        return Laplace(float(d["location"]), float(d["scale"]))
    if kind == "cauchy":
        return Cauchy(float(d["location"]), float(d["scale"]))
    if kind == "pmf":
        return FinitePmf(np.asarray(d["p"], dtype=float))
    raise ConfigError(f"unknown component kind: {kind!r}")


@dataclass(frozen=True)
class ComponentBasis:
    """An ordered tuple of k >= 2 components sharing one base measure.

    The basis anchors a mixture family: only the weights vary.  Construction
    enforces the cheap structural invariants (shared measure kind, shared
    alphabet, no exact duplicates); numerical linear independence is a
    separate, report-only check (`check_linear_independence`) because it
    requires integration.
    """

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 2:
            raise ConfigError("a basis needs at least two components")
        kinds = {c.measure_kind for c in comps}
        if len(kinds) != 1:
            raise ConfigError("all components must share one base measure")
        if kinds == {"counting"}:
            sizes = {c.alphabet_size for c in comps}
            if len(sizes) != 1:
                raise ConfigError("counting components must share one alphabet")
        for i, a in enumerate(comps):
            for b in comps[i + 1:]:
                if a == b:
                    raise ConfigError("duplicate component in basis")
        object.__setattr__(self, "components", comps)

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def measure_kind(self) -> str:
        return self.components[0].measure_kind

    @property
    def alphabet_size(self) -> int:
        if self.measure_kind != "counting":
            raise UnsupportedPair("alphabet only defined for counting bases")
        return self.components[0].alphabet_size

    def pmf_matrix(self) -> np.ndarray:
        """(k, alphabet) atom masses for a counting basis."""
        if self.measure_kind != "counting":
            raise UnsupportedPair("pmf matrix only defined for counting bases")
        return np.vstack([c.p for c in self.components])

    def log_density_matrix(self, x) -> np.ndarray:
        """Stack of per-component log densities at the points x, shape (k, len(x))."""
        return np.vstack([c.log_density(x) for c in self.components])

    def to_dict(self):
        return [c.to_dict() for c in self.components]


def pairwise_kl(a: Component, b: Component) -> float:
    """Closed-form KL(a : b); +inf when b misses mass that a carries.

    Available pairs: Gaussian-Gaussian and FinitePmf-FinitePmf.  Other kind
    combinations raise ``UnsupportedPair`` (callers fall back to Monte Carlo).
    """
    if isinstance(a, Gaussian) and isinstance(b, Gaussian):
        var_ratio = (a.stddev / b.stddev) ** 2
        return float(
            np.log(b.stddev / a.stddev)
            + 0.5 * (var_ratio + ((a.mean - b.mean) / b.stddev) ** 2 - 1.0)
        )
    if isinstance(a, FinitePmf) and isinstance(b, FinitePmf):
        if a.alphabet_size != b.alphabet_size:
            raise UnsupportedPair("pmf alphabets differ")
        mask = a.p > 0.0
        if np.any(b.p[mask] == 0.0):
            return float("inf")
        return float(np.sum(a.p[mask] * np.log(a.p[mask] / b.p[mask])))
    raise UnsupportedPair(f"no closed-form KL for {a.kind} vs {b.kind}")


def pairwise_bhattacharyya(a: Component, b: Component) -> float:
    """Closed-form Bhattacharyya divergence -log integral sqrt(a b)."""
    if isinstance(a, Gaussian) and isinstance(b, Gaussian):
        va, vb = a.stddev**2, b.stddev**2
        return float(
            0.25 * (a.mean - b.mean) ** 2 / (va + vb)
            + 0.5 * np.log((va + vb) / (2.0 * a.stddev * b.stddev))
        )
    if isinstance(a, FinitePmf) and isinstance(b, FinitePmf):
        if a.alphabet_size != b.alphabet_size:
            raise UnsupportedPair("pmf alphabets differ")
        coeff = float(np.sum(np.sqrt(a.p * b.p)))
        return float(-np.log(coeff))
    raise UnsupportedPair(f"no closed-form Bhattacharyya for {a.kind} vs {b.kind}")


@dataclass(frozen=True)
class IndependenceReport:
    ok: bool
    min_eigenvalue: float
    threshold: float


def check_linear_independence(
    basis: ComponentBasis,
    threshold: float = 1e-9,
    samples: int = 100_000,
    seed: int = 0,
) -> IndependenceReport:
    """Report whether the basis components look numerically independent.

    The Gram matrix G_ij = integral p_i p_j d(mu) is computed exactly for
    counting bases and by Monte Carlo from the uniform mixture for continuous
    bases; the basis passes when the smallest eigenvalue of G stays above the
    threshold.
    """
    if basis.measure_kind == "counting":
        P = basis.pmf_matrix()
        gram = P @ P.T
    else:
        # Importance-sample from the uniform mixture u = (1/k) sum_i p_i.
        k = basis.k
        rng = spawn_rng(seed, 0)
        idx = rng.integers(0, k, size=samples)
        draws = np.empty(samples, dtype=float)
        for i, comp in enumerate(basis.components):
            sel = idx == i
            draws[sel] = comp.sample(rng, int(sel.sum()))
        dens = np.exp(basis.log_density_matrix(draws))  # (k, samples)
        u = dens.mean(axis=0)
        # G_ij = E_u[p_i p_j / u] when x ~ u
        gram = (dens / u) @ dens.T / samples
    min_eig = float(np.linalg.eigvalsh((gram + gram.T) / 2.0).min())
    return IndependenceReport(ok=min_eig >= threshold, min_eigenvalue=min_eig, threshold=threshold)
