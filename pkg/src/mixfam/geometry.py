"""Dually flat geometry of a mixture family.

The convex potential on the eta chart is the Shannon information (negative
entropy) of the mixture,

    Fstar(eta) = integral m(x;eta) log m(x;eta) d(mu),

whose Legendre dual F equals the cross-entropy of the anchor component p_0
against the mixture.  The gradient of Fstar gives the natural parameters

    theta_i(eta) = h_x(p_0 : m) - h_x(p_i : m),      i = 1..k-1,

the Hessian gives the Fisher information integral (p_i-p_0)(p_j-p_0)/m, and
KL divergence between two mixtures over the same basis equals the Bregman
divergence of Fstar on their eta parameters (equivalently the mixed-chart
canonical form Fstar(eta1) + F(theta2) - <eta1, theta2>).

Two oracles evaluate these quantities behind one small interface:

* ``ExactCategoricalOracle`` -- closed-form atom sums for counting bases.
* ``MonteCarloOracle``       -- sampled estimates with CLT error bars.
  Each quantity draws from one fixed (seed, tag) stream regardless of eta,
  so identities across nearby eta values are checked on consistent noise,
  and repeated evaluations are cached.

Cross-entropies h_x(p : m) are always estimated by sampling from p, never
from m: p is known exactly and this keeps the variance low when the
corresponding weight is small.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .components import pairwise_bhattacharyya, pairwise_kl
from .divergence import McEstimate, mc_kl_extended
from .errors import (
    AlphaOutOfRange,
    BasisMismatch,
    ConfigError,
    DivergentIntegralWarning,
    SimplexViolation,
    UnsupportedPair,
)
from .mixture import Mixture, convex_combine, eta_to_weights
from .seeding import derive_seed, spawn_rng, stable_tag

# Oracle evaluations reject eta this close to the simplex boundary, where the
# log and reciprocal integrands degrade.
ETA_GUARD = 1e-9

# A single sampled term dominating the mean by this factor signals a
# divergent integral (heavy-tail component against a light-tail mixture).
_BLOWUP_FACTOR = 1e5

_TAG_FSTAR = 1
_TAG_CE_BASE = 1000
_TAG_HESSIAN = 2
_TAG_CHRISTOFFEL = 3


def _guard_eta(eta: np.ndarray) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if eta.min() < ETA_GUARD or 1.0 - eta.sum() < ETA_GUARD:
        raise SimplexViolation(f"eta within {ETA_GUARD} of the simplex boundary")
    return eta


def _check_blowup(terms: np.ndarray, what: str) -> None:
    peak = float(np.max(np.abs(terms)))
    scale = 1.0 + abs(float(np.mean(terms)))
    if peak > _BLOWUP_FACTOR * scale:
        warnings.warn(
            f"{what}: a single sampled term ({peak:.3g}) dominates the mean; "
            "the defining integral may not converge",
            DivergentIntegralWarning,
            stacklevel=4,
        )


@dataclass(frozen=True)
class DualCoordinates:
    """A point of the family in both charts."""

    eta: np.ndarray
    theta: np.ndarray
    stderr_theta: np.ndarray


@dataclass(frozen=True)
class MatrixEstimate:
    value: np.ndarray
    stderr: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        sym = (self.value + np.swapaxes(self.value, 0, 1)) / 2.0
        return float(np.linalg.eigvalsh(sym).min())


class ExactCategoricalOracle:
    """Closed-form potentials for counting (FinitePmf) bases."""

    mode = "exact"

    def __init__(self, basis):
        if basis.measure_kind != "counting":
            raise ConfigError("exact oracle requires a counting basis")
        self.basis = basis
        self.seed = None
        self.samples = 0
        self._P = basis.pmf_matrix()  # (k, A)
        self._F = self._P[1:] - self._P[0]  # (D, A)

    def _atoms(self, eta: np.ndarray) -> np.ndarray:
        return eta_to_weights(_guard_eta(eta)) @ self._P

    def fstar(self, eta) -> tuple[float, float]:
        m = self._atoms(eta)
        pos = m > 0.0
        return float(np.sum(m[pos] * np.log(m[pos]))), 0.0

    def ce_component(self, i: int, eta) -> tuple[float, float]:
        return self.ce_pmf(self._P[i], eta)

    def ce_pmf(self, p_atoms, eta) -> tuple[float, float]:
        m = self._atoms(eta)
        p_atoms = np.asarray(p_atoms, dtype=float)
        pos = p_atoms > 0.0
        if np.any(m[pos] == 0.0):
            return float("inf"), 0.0
        return float(-np.sum(p_atoms[pos] * np.log(m[pos]))), 0.0

    def ce_density(self, p, eta) -> tuple[float, float]:
        atoms = p.atom_pmf() if isinstance(p, Mixture) else p.p
        return self.ce_pmf(atoms, eta)

    def theta(self, eta) -> tuple[np.ndarray, np.ndarray]:
        m = self._atoms(eta)
        pos = m > 0.0
        vals = self._F[:, pos] @ np.log(m[pos])
        return vals, np.zeros_like(vals)

    def hessian(self, eta) -> MatrixEstimate:
        m = self._atoms(eta)
        pos = m > 0.0
        F = self._F[:, pos]
        mat = (F / m[pos]) @ F.T
        return MatrixEstimate(mat, np.zeros_like(mat))

    def christoffel(self, eta) -> MatrixEstimate:
        m = self._atoms(eta)
        pos = m > 0.0
        F = self._F[:, pos]
        tens = -0.5 * np.einsum("ia,ja,ka,a->ijk", F, F, F, 1.0 / m[pos] ** 2)
        return MatrixEstimate(tens, np.zeros_like(tens))


class MonteCarloOracle:
    """Sampled potentials for arbitrary bases, with per-quantity fixed streams."""

    mode = "mc"

    def __init__(self, basis, samples: int = 1_000_000, seed: int = 0):
        if samples < 2:
            raise ConfigError("oracle needs at least 2 samples")
        self.basis = basis
        self.samples = int(samples)
        self.seed = int(seed)
        self._cache: dict = {}

    # -- sampling helpers ---------------------------------------------------

    def _mixture(self, eta) -> Mixture:
        return Mixture.from_eta(self.basis, _guard_eta(eta))

    def _mean_se(self, terms: np.ndarray) -> tuple[float, float]:
        return float(terms.mean()), float(terms.std(ddof=1) / np.sqrt(terms.size))

    def fstar(self, eta) -> tuple[float, float]:
        eta = _guard_eta(eta)
        key = ("fstar", eta.tobytes())
        if key not in self._cache:
            m = self._mixture(eta)
            x = m.sample(spawn_rng(self.seed, _TAG_FSTAR), self.samples)
            terms = m.log_density(x)
            self._cache[key] = self._mean_se(terms)
        return self._cache[key]

    def _ce_from(self, p, tag: int, eta) -> tuple[float, float]:
        key = ("ce", tag, np.asarray(eta).tobytes())
        if key not in self._cache:
            m = self._mixture(eta)
            x = p.sample(spawn_rng(self.seed, _TAG_CE_BASE, tag), self.samples)
            terms = -m.log_density(x)
            _check_blowup(terms, "cross-entropy")
            self._cache[key] = self._mean_se(terms)
        return self._cache[key]

    def ce_component(self, i: int, eta) -> tuple[float, float]:
        return self._ce_from(self.basis.components[i], i, eta)

    def ce_density(self, p, eta) -> tuple[float, float]:
        tag = self.basis.k + stable_tag(json.dumps(p.to_dict(), sort_keys=True))
        return self._ce_from(p, tag, eta)

    def theta(self, eta) -> tuple[np.ndarray, np.ndarray]:
        ce = [self.ce_component(i, eta) for i in range(self.basis.k)]
        vals = np.array([ce[0][0] - ce[i][0] for i in range(1, self.basis.k)])
        errs = np.array([np.hypot(ce[0][1], ce[i][1]) for i in range(1, self.basis.k)])
        return vals, errs

    def _density_ratios(self, eta, tag: int):
        """Draw x ~ m(eta) and return rows (p_i(x) - p_0(x)) / m(x)."""
        eta = _guard_eta(eta)
        m = self._mixture(eta)
        x = m.sample(spawn_rng(self.seed, tag), self.samples)
        logs = self.basis.log_density_matrix(x)
        logm = logsumexp(logs + np.log(m.weights)[:, None], axis=0)
        dens = np.exp(logs - logm)  # p_i(x) / m(x)
        return dens[1:] - dens[0]

    def hessian(self, eta) -> MatrixEstimate:
        key = ("hess", np.asarray(eta).tobytes())
        if key not in self._cache:
            F = self._density_ratios(eta, _TAG_HESSIAN)
            D, s = F.shape
            mat = np.empty((D, D))
            err = np.empty((D, D))
            for i in range(D):
                for j in range(i, D):
                    mat[i, j], err[i, j] = self._mean_se(F[i] * F[j])
                    mat[j, i], err[j, i] = mat[i, j], err[i, j]
            self._cache[key] = MatrixEstimate(mat, err)
        return self._cache[key]

    def christoffel(self, eta) -> MatrixEstimate:
        key = ("chris", np.asarray(eta).tobytes())
        if key not in self._cache:
            F = self._density_ratios(eta, _TAG_CHRISTOFFEL)
            D, s = F.shape
            tens = np.empty((D, D, D))
            err = np.empty((D, D, D))
            for i in range(D):
                for j in range(D):
                    for k in range(D):
                        tens[i, j, k], err[i, j, k] = self._mean_se(-0.5 * F[i] * F[j] * F[k])
            self._cache[key] = MatrixEstimate(tens, err)
        return self._cache[key]


def oracle_for(basis, samples: int = 1_000_000, seed: int = 0):
    """Exact oracle for counting bases, Monte-Carlo oracle otherwise."""
    if basis.measure_kind == "counting":
        return ExactCategoricalOracle(basis)
    return MonteCarloOracle(basis, samples=samples, seed=seed)


def _require_basis(m: Mixture, oracle) -> None:
    if m.basis != oracle.basis:
        raise BasisMismatch("mixture does not live on the oracle's basis")


def _estimate(oracle, value: float, var: float) -> McEstimate:
    return McEstimate(value, float(np.sqrt(var)), oracle.samples, oracle.seed)


# ---------------------------------------------------------------------------
# Potentials and coordinates
# ---------------------------------------------------------------------------


def shannon_information(m: Mixture, oracle) -> McEstimate:
    """Fstar at m's eta: the negative Shannon entropy of the mixture."""
    _require_basis(m, oracle)
    v, se = oracle.fstar(m.eta)
    return _estimate(oracle, v, se * se)


def cross_entropy(p, m: Mixture, oracle) -> McEstimate:
    """h_x(p : m) = -E_p[log m]; equals the entropy of m when p = m."""
    _require_basis(m, oracle)
    v, se = oracle.ce_density(p, m.eta)
    return _estimate(oracle, v, se * se)


def natural_parameters(m: Mixture, oracle) -> DualCoordinates:
    """The dual (theta) coordinates of m: the gradient of Fstar at eta."""
    _require_basis(m, oracle)
    theta, err = oracle.theta(m.eta)
    return DualCoordinates(eta=m.eta, theta=theta, stderr_theta=err)


def dual_potential(m: Mixture, oracle) -> McEstimate:
    """F(theta) evaluated in the eta chart: the cross-entropy h_x(p_0 : m)."""
    _require_basis(m, oracle)
    v, se = oracle.ce_component(0, m.eta)
    return _estimate(oracle, v, se * se)


def young_gap(m: Mixture, oracle) -> McEstimate:
    """F(theta) + Fstar(eta) - <theta, eta>; zero when the duality is exact.

    Algebraically the gap collapses to sum_i w_i h_x(p_i : m) + Fstar(eta),
    which is what gets evaluated (it needs no theta subtraction and keeps the
    error propagation exact).
    """
    _require_basis(m, oracle)
    w = m.weights
    total, var = oracle.fstar(m.eta)
    var = var * var
    for i in range(m.k):
        v, se = oracle.ce_component(i, m.eta)
        total += w[i] * v
        var += (w[i] * se) ** 2
    return _estimate(oracle, total, var)


def fisher_information(m: Mixture, oracle) -> MatrixEstimate:
    """The metric tensor at eta: Hessian of Fstar, always positive definite."""
    _require_basis(m, oracle)
    return oracle.hessian(m.eta)


def christoffel_symbols(m: Mixture, oracle) -> MatrixEstimate:
    """Connection coefficients -(1/2) integral f_i f_j f_k / m^2 (fully symmetric)."""
    _require_basis(m, oracle)
    return oracle.christoffel(m.eta)


# ---------------------------------------------------------------------------
# Divergences through the potentials
# ---------------------------------------------------------------------------


def bregman_kl(m1: Mixture, m2: Mixture, oracle) -> McEstimate:
    """KL(m1 : m2) through the Bregman form of Fstar on the eta chart."""
    _require_basis(m1, oracle)
    _require_basis(m2, oracle)
    d_eta = m1.eta - m2.eta
    f1, se1 = oracle.fstar(m1.eta)
    f2, se2 = oracle.fstar(m2.eta)
    value = f1 - f2
    var = se1 * se1 + se2 * se2
    # <d_eta, theta(eta2)> expanded over cross-entropies so the shared
    # h_x(p_0 : m2) term is propagated once, not D times.
    c0, s0 = oracle.ce_component(0, m2.eta)
    value -= d_eta.sum() * c0
    var += (d_eta.sum() * s0) ** 2
    for i in range(1, m1.k):
        ci, si = oracle.ce_component(i, m2.eta)
        value += d_eta[i - 1] * ci
        var += (d_eta[i - 1] * si) ** 2
    return _estimate(oracle, value, var)


def canonical_divergence(m1: Mixture, m2: Mixture, oracle) -> McEstimate:
    """KL(m1 : m2) through the mixed-chart form Fstar(eta1) + F(theta2) - <eta1, theta2>.

    The mixed form reduces to Fstar(eta1) + sum_i w1_i h_x(p_i : m2), i.e.
    -h(m1) + h_x(m1 : m2).
    """
    _require_basis(m1, oracle)
    _require_basis(m2, oracle)
    f1, se1 = oracle.fstar(m1.eta)
    value = f1
    var = se1 * se1
    for i in range(m1.k):
        ci, si = oracle.ce_component(i, m2.eta)
        value += m1.weights[i] * ci
        var += (m1.weights[i] * si) ** 2
    return _estimate(oracle, value, var)


def jeffreys_divergence(m1: Mixture, m2: Mixture, oracle) -> McEstimate:
    """Symmetrized KL via the mixed-coordinate identity <eta'-eta, theta'-theta>."""
    _require_basis(m1, oracle)
    _require_basis(m2, oracle)
    d_eta = m2.eta - m1.eta
    value = 0.0
    var = 0.0
    for eta, sign in ((m2.eta, 1.0), (m1.eta, -1.0)):
        c0, s0 = oracle.ce_component(0, eta)
        value += sign * d_eta.sum() * c0
        var += (d_eta.sum() * s0) ** 2
        for i in range(1, m1.k):
            ci, si = oracle.ce_component(i, eta)
            value -= sign * d_eta[i - 1] * ci
            var += (d_eta[i - 1] * si) ** 2
    return _estimate(oracle, value, var)


def skew_jensen(m1: Mixture, m2: Mixture, alpha: float, oracle) -> McEstimate:
    """Jensen gap of Fstar: (1-a) Fstar(eta1) + a Fstar(eta2) - Fstar(eta_a)."""
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange("skew parameter must lie in (0, 1)")
    _require_basis(m1, oracle)
    _require_basis(m2, oracle)
    mid = convex_combine(m1, m2, alpha)
    f1, se1 = oracle.fstar(m1.eta)
    f2, se2 = oracle.fstar(m2.eta)
    fm, sem = oracle.fstar(mid.eta)
    value = (1.0 - alpha) * f1 + alpha * f2 - fm
    var = ((1.0 - alpha) * se1) ** 2 + (alpha * se2) ** 2 + sem * sem
    return _estimate(oracle, value, var)


def skew_jensen_shannon(
    m1: Mixture, m2: Mixture, alpha: float, s: int, seed: int, threads: int = 1
) -> McEstimate:
    """Monte-Carlo skew Jensen-Shannon: (1-a) KL(m1:m_a) + a KL(m2:m_a).

    Equals the skew Jensen gap of Fstar on the eta parameters, because the
    interpolating mixture m_a stays inside the family.
    """
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange("skew parameter must lie in (0, 1)")
    mid = convex_combine(m1, m2, alpha)
    e1 = mc_kl_extended(m1, mid, s, seed, threads=threads)
    e2 = mc_kl_extended(m2, mid, s, derive_seed(seed, 1), threads=threads)
    value = (1.0 - alpha) * e1.value + alpha * e2.value
    stderr = float(np.hypot((1.0 - alpha) * e1.stderr, alpha * e2.stderr))
    return McEstimate(value, stderr, s, seed)


def skew_jensen_shannon_exact(m1: Mixture, m2: Mixture, alpha: float, oracle) -> McEstimate:
    """Exact-path skew Jensen-Shannon via KL computed from the potentials."""
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange("skew parameter must lie in (0, 1)")
    mid = convex_combine(m1, m2, alpha)
    e1 = bregman_kl(m1, mid, oracle)
    e2 = bregman_kl(m2, mid, oracle)
    value = (1.0 - alpha) * e1.value + alpha * e2.value
    stderr = float(np.hypot((1.0 - alpha) * e1.stderr, alpha * e2.stderr))
    return McEstimate(value, stderr, oracle.samples, oracle.seed)


# ---------------------------------------------------------------------------
# Entropy bounds and Chernoff alpha-divergences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyBounds:
    lower: float
    upper: float


def entropy_bounds(m: Mixture) -> EntropyBounds:
    """Closed-form bracket on the mixture entropy h(m).

    lower: sum_i w_i h(p_i) - sum_i w_i log sum_j w_j exp(-Bhat(p_i:p_j))
    upper: the same expression with KL in place of Bhattacharyya.
    Requires closed-form pairwise divergences (Gaussian or FinitePmf bases).
    """
    comps = m.basis.components
    w = m.weights
    base = float(np.sum(w * np.array([c.entropy() for c in comps])))
    k = m.k
    kl_mat = np.array([[pairwise_kl(a, b) for b in comps] for a in comps])
    bh_mat = np.array([[pairwise_bhattacharyya(a, b) for b in comps] for a in comps])
    with np.errstate(divide="ignore"):
        lower = base - float(np.sum(w * np.log(np.exp(-bh_mat) @ w)))
        upper = base - float(np.sum(w * np.log(np.exp(-kl_mat) @ w)))
    return EntropyBounds(lower=lower, upper=upper)


@dataclass(frozen=True)
class ChernoffAlpha:
    coefficient: McEstimate
    divergence: McEstimate


def _chernoff_from_coefficient(c: McEstimate, alpha: float) -> ChernoffAlpha:
    scale = 1.0 / (alpha * (1.0 - alpha))
    return ChernoffAlpha(
        coefficient=c,
        divergence=McEstimate(
            (1.0 - c.value) * scale, abs(scale) * c.stderr, c.samples, c.seed
        ),
    )


def chernoff_alpha_mc(p, q, alpha: float, s: int, seed: int) -> ChernoffAlpha:
    """Estimate c_alpha = E_q[(p/q)^alpha] and the divergence (1-c)/(a(1-a))."""
    if alpha in (0.0, 1.0):
        raise AlphaOutOfRange("alpha must avoid {0, 1}")
    rng = spawn_rng(seed, 0)
    x = q.sample(rng, int(s))
    lp = np.asarray(p.log_density(x), dtype=float)
    lq = np.asarray(q.log_density(x), dtype=float)
    with np.errstate(over="ignore"):
        terms = np.exp(alpha * (lp - lq))
    value = float(terms.mean())
    stderr = float(terms.std(ddof=1) / np.sqrt(terms.size))
    return _chernoff_from_coefficient(McEstimate(value, stderr, int(s), seed), alpha)


def chernoff_alpha_categorical(p: Mixture, q: Mixture, alpha: float) -> ChernoffAlpha:
    """Exact Chernoff coefficient on counting bases (atom sums)."""
    if alpha in (0.0, 1.0):
        raise AlphaOutOfRange("alpha must avoid {0, 1}")
    pa = p.atom_pmf()
    qa = q.atom_pmf()
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = pa**alpha * qa ** (1.0 - alpha)
    vals = np.where((pa == 0.0) & (qa == 0.0), 0.0, vals)
    c = float(np.sum(vals))
    return _chernoff_from_coefficient(McEstimate(c, 0.0, 0, None), alpha)


# ---------------------------------------------------------------------------
# Finite-difference cross checks
# ---------------------------------------------------------------------------
#
# The potential at any eta can be rewritten against one fixed reference
# mixture: Fstar(eta) = E_ref[(m_eta / m_ref) log m_eta].  Holding the sample
# set from m_ref fixed makes the per-sample integrand smooth in eta, so a
# finite-difference stencil applied per sample yields an honest CLT stderr
# for the differentiated quantity; sampling fresh at each stencil point
# would bury derivatives in noise.


class PotentialProbe:
    """Per-sample view of Fstar around a reference eta, for FD stencils."""

    def __init__(self, basis, eta_ref, samples: int, seed: int):
        self.basis = basis
        self.eta_ref = _guard_eta(np.asarray(eta_ref, dtype=float))
        ref = Mixture.from_eta(basis, self.eta_ref)
        x = ref.sample(spawn_rng(seed, 9), int(samples))
        self._logs = basis.log_density_matrix(x)  # (k, s)
        self._log_ref = logsumexp(self._logs + np.log(ref.weights)[:, None], axis=0)

    def terms(self, eta) -> np.ndarray:
        """Per-sample integrand whose mean is Fstar(eta)."""
        w = eta_to_weights(_guard_eta(np.asarray(eta, dtype=float)))
        log_m = logsumexp(self._logs + np.log(w)[:, None], axis=0)
        return np.exp(log_m - self._log_ref) * log_m

    def stencil(self, offsets_coeffs: list[tuple[np.ndarray, float]]) -> tuple[float, float]:
        """Mean and stderr of a per-sample linear combination of Fstar terms."""
        acc = None
        for offset, coeff in offsets_coeffs:
            t = coeff * self.terms(self.eta_ref + offset)
            acc = t if acc is None else acc + t
        return float(acc.mean()), float(acc.std(ddof=1) / np.sqrt(acc.size))


def _central_stencil(direction: np.ndarray, h: float) -> list[tuple[np.ndarray, float]]:
    return [(h * direction, 0.5 / h), (-h * direction, -0.5 / h)]


def _compose(a, b):
    out = []
    for off_a, c_a in a:
        for off_b, c_b in b:
            out.append((off_a + off_b, c_a * c_b))
    return out


def fd_gradient(probe: PotentialProbe, i: int, step: float = 1e-4) -> tuple[float, float]:
    """Central-difference d Fstar / d eta_i at the probe's reference point."""
    d = probe.eta_ref.size
    e = np.zeros(d)
    e[i] = 1.0
    h = step * max(abs(probe.eta_ref[i]), 0.1)
    return probe.stencil(_central_stencil(e, h))


def fd_hessian_entry(probe: PotentialProbe, i: int, j: int, step: float = 1e-3) -> tuple[float, float]:
    """Central-difference d^2 Fstar / d eta_i d eta_j; matches the Fisher matrix."""
    d = probe.eta_ref.size
    ei = np.zeros(d)
    ei[i] = 1.0
    ej = np.zeros(d)
    ej[j] = 1.0
    hi = step * max(abs(probe.eta_ref[i]), 0.1)
    hj = step * max(abs(probe.eta_ref[j]), 0.1)
    return probe.stencil(_compose(_central_stencil(ei, hi), _central_stencil(ej, hj)))


def fd_third_entry(
    probe: PotentialProbe, i: int, j: int, k: int, step: float = 1e-2
) -> tuple[float, float]:
    """Central-difference d^3 Fstar; equals TWICE the Christoffel value here.

    The connection coefficients carry a factor -1/2 relative to the third
    derivative of the potential, so compare this against 2 * christoffel.
    """
    d = probe.eta_ref.size
    sten = None
    for axis in (i, j, k):
        e = np.zeros(d)
        e[axis] = 1.0
        h = step * max(abs(probe.eta_ref[axis]), 0.1)
        c = _central_stencil(e, h)
        sten = c if sten is None else _compose(sten, c)
    return probe.stencil(sten)
