"""Divergence inequalities, coarse-graining bounds, and epsilon-mixture identities.

Everything here is a pure function over immutable inputs.  Exact paths cover
counting bases and closed-form component pairs; Monte-Carlo paths take an
explicit (s, seed) and report CLT error bars so callers can test the
inequalities with honest slack.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .components import ComponentBasis, FinitePmf, pairwise_kl
from .divergence import (
    DivergenceGenerator,
    McEstimate,
    discrete_fdiv,
    discrete_fdiv_extended,
    generator,
    mc_fdivergence,
    mc_kl_extended,
)
from .errors import (
    ConfigError,
    TooManyComponents,
    UnsupportedPair,
    UnsupportedSupport,
)
from .mixture import Mixture, convex_combine
from .seeding import derive_seed, spawn_rng

_INEQ_ATOL = 1e-12


# ---------------------------------------------------------------------------
# Convex-sum lemma and weight-space bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexSumCheck:
    lhs: float
    rhs: float
    holds: bool


def convex_sum_check(a, b, f: DivergenceGenerator) -> ConvexSumCheck:
    """Verify sum_i a_i f(b_i/a_i) >= (sum a) f(sum b / sum a) for positive vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ConfigError("convex-sum check needs positive vectors of equal length")
    lhs = float(np.sum(a * f(b / a)))
    rhs = float(a.sum() * f(b.sum() / a.sum()))
    return ConvexSumCheck(lhs, rhs, holds=lhs >= rhs - _INEQ_ATOL)


@dataclass(frozen=True)
class WeightBounds:
    """Exact weight-space divergence against its cheap upper bounds.

    ``max_generator_bound`` dominates the given f-divergence; the log-ratio
    and fat bounds dominate the KL divergence specifically, so ``kl_exact``
    is carried alongside whatever generator was asked for.
    """

    fdiv_exact: float
    kl_exact: float
    log_maxmin_bound: float
    max_generator_bound: float
    fat_bound: float
    epsilon: float
    holds: bool


def weight_bound_suite(w, w2, f: DivergenceGenerator) -> WeightBounds:
    w = np.asarray(w, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    fdiv = discrete_fdiv(w, w2, f)
    kl = discrete_fdiv(w, w2, generator("kl"))
    log_maxmin = float(np.log(w.max() / w2.min()))
    max_gen = float(np.max(f(w2 / w)))
    eps = float(w2.min())
    fat = float(-np.log(eps))
    holds = (
        fdiv <= max_gen + _INEQ_ATOL
        and kl <= log_maxmin + _INEQ_ATOL
        and kl <= fat + _INEQ_ATOL
    )
    return WeightBounds(fdiv, kl, log_maxmin, max_gen, fat, eps, holds)


def extended_kl_positive(wt, wt2) -> float:
    """KL extended to positive (unnormalized) weight vectors.

    sum_i w_i log(w_i/w2_i) + w2_i - w_i; always >= 0, and equal to the plain
    discrete KL when both vectors are normalized.  For w2 = lam * w with w on
    the simplex this collapses to (lam - 1) - log(lam).
    """
    wt = np.asarray(wt, dtype=float)
    wt2 = np.asarray(wt2, dtype=float)
    if wt.shape != wt2.shape or np.any(wt <= 0.0) or np.any(wt2 <= 0.0):
        raise ConfigError("extended KL needs strictly positive vectors of equal length")
    return float(np.sum(wt * np.log(wt / wt2) + wt2 - wt))


# ---------------------------------------------------------------------------
# Mixture-level KL upper bounds
# ---------------------------------------------------------------------------


def mixture_kl_upper_bound(m1: Mixture, m2: Mixture) -> float:
    """KL(m1:m2) <= KL(w:w') + sum_i w_i KL(p_i:p'_i), paired by index.

    For mixtures over the same basis the component terms vanish and the bound
    is the weight-space KL alone.  Requires closed-form component KL.
    """
    if m1.k != m2.k:
        raise ConfigError("mixtures must have the same component count")
    bound = discrete_fdiv(m1.weights, m2.weights, generator("kl"))
    for w_i, a, b in zip(m1.weights, m1.basis.components, m2.basis.components):
        if a != b:
            bound += w_i * pairwise_kl(a, b)
    return float(bound)


@dataclass(frozen=True)
class PermutationBound:
    best_bound: float
    best_permutation: tuple
    identity_bound: float


def permutation_strengthened_bound(m1: Mixture, m2: Mixture, max_k: int = 8) -> PermutationBound:
    """Minimize the paired KL bound over all component relabelings of m1."""
    k = m1.k
    if k != m2.k:
        raise ConfigError("mixtures must have the same component count")
    if k > max_k:
        raise TooManyComponents(f"exhaustive search capped at k={max_k}")
    kl_gen = generator("kl")
    kl_pairs = np.array(
        [[pairwise_kl(a, b) if a != b else 0.0 for b in m2.basis.components]
         for a in m1.basis.components]
    )
    best = None
    best_sigma = None
    identity = None
    for sigma in permutations(range(k)):
        wp = m1.weights[list(sigma)]
        val = discrete_fdiv(wp, m2.weights, kl_gen) + float(
            np.sum(wp * kl_pairs[list(sigma), range(k)])
        )
        if sigma == tuple(range(k)):
            identity = val
        if best is None or val < best:
            best, best_sigma = val, sigma
    return PermutationBound(best, best_sigma, identity)


def joint_convexity_upper_bound(
    m1: Mixture,
    m2: Mixture,
    f: DivergenceGenerator,
    s: int | None = None,
    seed: int = 0,
):
    """I_f(m1:m2) <= sum_ij w_i w'_j I_f(p_i : p'_j) (joint convexity).

    The right side uses exact pairwise divergences (atom sums on counting
    bases; closed-form KL on Gaussian bases).  The left side is exact on
    counting bases and Monte-Carlo otherwise (pass s).
    """
    k1, k2 = m1.k, m2.k
    counting = m1.basis.measure_kind == "counting"
    pair = np.empty((k1, k2))
    for i, a in enumerate(m1.basis.components):
        for j, b in enumerate(m2.basis.components):
            if counting:
                pair[i, j] = discrete_fdiv_extended(a.p, b.p, f)
            elif f.name == "kl":
                pair[i, j] = 0.0 if a == b else pairwise_kl(a, b)
            else:
                raise UnsupportedPair("continuous pairwise terms only available for kl")
    rhs = float(m1.weights @ pair @ m2.weights)
    if counting:
        lhs = McEstimate(discrete_fdiv_extended(m1.atom_pmf(), m2.atom_pmf(), f), 0.0, 0, None)
    else:
        if s is None:
            raise ConfigError("continuous joint-convexity check needs a sample count")
        lhs = mc_fdivergence(m1, m2, f, s, seed)
    slack = 4.0 * lhs.stderr + _INEQ_ATOL
    return JointConvexityBound(lhs=lhs, rhs=rhs, holds=lhs.value <= rhs + slack)


@dataclass(frozen=True)
class JointConvexityBound:
    lhs: McEstimate
    rhs: float
    holds: bool


# ---------------------------------------------------------------------------
# Lumping (coarse-graining) lower bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LumpingPartition:
    """A finite partition of the support: bin edges (continuous) or an
    atom -> bin label map (counting)."""

    edges: np.ndarray | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        if (self.edges is None) == (self.labels is None):
            raise ConfigError("provide exactly one of edges / labels")
        if self.edges is not None:
            e = np.asarray(self.edges, dtype=float)
            if e.ndim != 1 or e.size < 1 or np.any(np.diff(e) <= 0.0):
                raise ConfigError("edges must be strictly increasing, at least one")
            object.__setattr__(self, "edges", e)
        else:
            lab = np.asarray(self.labels, dtype=int)
            h = lab.max() + 1
            if lab.min() < 0 or set(np.unique(lab)) != set(range(h)):
                raise ConfigError("labels must cover 0..h-1")
            if h < 2:
                raise ConfigError("need at least two bins")
            object.__setattr__(self, "labels", lab)

    @property
    def bins(self) -> int:
        return self.edges.size + 1 if self.edges is not None else int(self.labels.max()) + 1

    @classmethod
    def uniform(cls, lo: float, hi: float, bins: int) -> "LumpingPartition":
        if bins < 2:
            raise ConfigError("need at least two bins")
        return cls(edges=np.linspace(lo, hi, bins + 1)[1:-1])

    @classmethod
    def equal_mass(cls, dist, bins: int) -> "LumpingPartition":
        """Quantile bins of ``dist`` (the default, usually tighter than uniform)."""
        if bins < 2:
            raise ConfigError("need at least two bins")
        qs = np.arange(1, bins) / bins
        return cls(edges=np.array([dist.quantile(q) for q in qs]))


def lump(dist, partition: LumpingPartition) -> np.ndarray:
    """Coarse-grain a distribution onto the partition's bins (exact masses)."""
    kind = getattr(dist, "measure_kind", None) or dist.basis.measure_kind
    if kind == "continuous":
        if partition.edges is None:
            raise UnsupportedSupport("continuous lumping needs bin edges")
        cdf_vals = np.concatenate(
            [[0.0], np.asarray(dist.cdf(partition.edges), dtype=float).ravel(), [1.0]]
        )
        return np.diff(cdf_vals)
    if partition.labels is None:
        raise UnsupportedSupport("counting lumping needs atom labels")
    atoms = dist.atom_pmf() if isinstance(dist, Mixture) else dist.p
    if partition.labels.size != atoms.size:
        raise ConfigError("label map must cover the alphabet")
    return np.bincount(partition.labels, weights=atoms, minlength=partition.bins)


def lumping_lower_bound(p, q, partition: LumpingPartition, f: DivergenceGenerator) -> float:
    """Exact I_f between the lumped histograms: a lower bound on I_f(p:q).

    Coarse-graining can only lose information, so this is always a valid
    lower bound, computable in O(bins) from CDFs / atom masses.
    """
    return discrete_fdiv_extended(lump(p, partition), lump(q, partition), f)


# ---------------------------------------------------------------------------
# Epsilon-mixtures: interpolants toward the family closure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpsilonPair:
    """The two interpolants (1-e)p + eq and (1-e)q + ep for densities p, q.

    p and q are either mixtures over one shared basis or two plain
    components; either way the interpolants are mixtures, so the order-1
    family machinery applies to them.
    """

    p: object
    q: object
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in (0, 1)")

    def _as_mixtures(self, eps: float) -> Mixture:
        if isinstance(self.p, Mixture):
            return convex_combine(self.p, self.q, eps)
        basis = ComponentBasis((self.p, self.q))
        return Mixture(basis, np.array([1.0 - eps, eps]))

    @property
    def mix_pq(self) -> Mixture:
        return self._as_mixtures(self.epsilon)

    @property
    def mix_qp(self) -> Mixture:
        return self._as_mixtures(1.0 - self.epsilon)

    @property
    def counting(self) -> bool:
        kind = getattr(self.p, "measure_kind", None)
        if kind is None:
            kind = self.p.basis.measure_kind
        return kind == "counting"

    def _atoms(self, d) -> np.ndarray:
        return d.atom_pmf() if isinstance(d, Mixture) else d.p


def _tv_atoms(pa: np.ndarray, qa: np.ndarray) -> float:
    return 0.5 * float(np.abs(pa - qa).sum())


def _tv_mc(p, q, s: int, seed: int) -> McEstimate:
    """TV by sampling the dominating reference r = (p+q)/2: TV = E_r[|p-q|]/(2r)."""
    if isinstance(p, Mixture):
        ref = convex_combine(p, q, 0.5)
    else:
        ref = Mixture(ComponentBasis((p, q)), np.array([0.5, 0.5]))
    x = ref.sample(spawn_rng(seed, 0), int(s))
    lr = np.asarray(ref.log_density(x), dtype=float)
    terms = 0.5 * np.abs(
        np.exp(np.asarray(p.log_density(x), dtype=float) - lr)
        - np.exp(np.asarray(q.log_density(x), dtype=float) - lr)
    )
    return McEstimate(
        float(terms.mean()), float(terms.std(ddof=1) / np.sqrt(terms.size)), int(s), seed
    )


@dataclass(frozen=True)
class TvEpsilonReport:
    tv_eps: McEstimate
    tv_base: McEstimate
    identity_gap: float
    scale: float  # |1 - 2 epsilon|


def tv_epsilon(pair: EpsilonPair, s: int | None = None, seed: int = 0) -> TvEpsilonReport:
    """Check TV(m_e(p,q), m_e(q,p)) = |1-2e| TV(p,q); exact on counting pairs."""
    scale = abs(1.0 - 2.0 * pair.epsilon)
    if pair.counting:
        pa, qa = pair._atoms(pair.p), pair._atoms(pair.q)
        tv_base = McEstimate(_tv_atoms(pa, qa), 0.0, 0, None)
        tv_eps = McEstimate(
            _tv_atoms(pair._atoms(pair.mix_pq), pair._atoms(pair.mix_qp)), 0.0, 0, None
        )
    else:
        if s is None:
            raise ConfigError("continuous TV needs a sample count")
        tv_base = _tv_mc(pair.p, pair.q, s, derive_seed(seed, 1))
        tv_eps = _tv_mc(pair.mix_pq, pair.mix_qp, s, derive_seed(seed, 2))
    gap = abs(tv_eps.value - scale * tv_base.value)
    return TvEpsilonReport(tv_eps=tv_eps, tv_base=tv_base, identity_gap=gap, scale=scale)


@dataclass(frozen=True)
class KlEpsilonReport:
    lower: float
    upper: float
    estimate: McEstimate


def kl_epsilon_bounds(pair: EpsilonPair, s: int | None = None, seed: int = 0) -> KlEpsilonReport:
    """KL between the two interpolants, bracketed by +/- log(C_e/c_e).

    The interpolant density ratio is pinned inside [c_e/C_e, C_e/c_e] with
    C_e = max(e, 1-e) and c_e = min(e, 1-e), which bounds the KL regardless
    of p and q.
    """
    c_eps = min(pair.epsilon, 1.0 - pair.epsilon)
    big_c = max(pair.epsilon, 1.0 - pair.epsilon)
    lower = float(np.log(c_eps / big_c))
    upper = float(np.log(big_c / c_eps))
    if pair.counting:
        est = McEstimate(
            discrete_fdiv_extended(
                pair._atoms(pair.mix_pq), pair._atoms(pair.mix_qp), generator("kl")
            ),
            0.0, 0, None,
        )
    else:
        if s is None:
            raise ConfigError("continuous KL-epsilon needs a sample count")
        est = mc_kl_extended(pair.mix_pq, pair.mix_qp, s, seed)
    return KlEpsilonReport(lower=lower, upper=upper, estimate=est)


def kl_epsilon_bregman(pair: EpsilonPair) -> float:
    """KL of the interpolants as a one-dimensional Bregman divergence.

    The pair spans an order-1 family along the segment p -> q; in its eta
    chart the interpolants sit at eta = epsilon and eta = 1 - epsilon, and
    their KL is the Bregman divergence of the segment's Shannon information.
    Exact for counting supports.
    """
    from .geometry import ExactCategoricalOracle, bregman_kl

    if not pair.counting:
        raise UnsupportedSupport("exact Bregman path requires counting support")
    basis = ComponentBasis(
        (FinitePmf(pair._atoms(pair.p)), FinitePmf(pair._atoms(pair.q)))
    )
    oracle = ExactCategoricalOracle(basis)
    m_pq = Mixture(basis, np.array([1.0 - pair.epsilon, pair.epsilon]))
    m_qp = Mixture(basis, np.array([pair.epsilon, 1.0 - pair.epsilon]))
    return bregman_kl(m_pq, m_qp, oracle).value


@dataclass(frozen=True)
class FdivEpsilonReport:
    if_eps: McEstimate
    bound_mixture: McEstimate  # (1-e) I_f(p:q) + e I_f(q:p)
    bound_generator: float  # (1-e) f(e/(1-e)) + e f((1-e)/e)
    holds: bool


def fdiv_epsilon_inequalities(
    pair: EpsilonPair, f: DivergenceGenerator, s: int | None = None, seed: int = 0
) -> FdivEpsilonReport:
    """Check I_f between interpolants against its two closure bounds."""
    eps = pair.epsilon
    bound_gen = float(
        (1.0 - eps) * f(eps / (1.0 - eps)) + eps * f((1.0 - eps) / eps)
    )
    if pair.counting:
        pa, qa = pair._atoms(pair.p), pair._atoms(pair.q)
        if_eps = McEstimate(
            discrete_fdiv_extended(pair._atoms(pair.mix_pq), pair._atoms(pair.mix_qp), f),
            0.0, 0, None,
        )
        fwd = discrete_fdiv_extended(pa, qa, f)
        rev = discrete_fdiv_extended(qa, pa, f)
        bound_mix = McEstimate((1.0 - eps) * fwd + eps * rev, 0.0, 0, None)
    else:
        if s is None:
            raise ConfigError("continuous epsilon inequalities need a sample count")
        if_eps = mc_fdivergence(pair.mix_pq, pair.mix_qp, f, s, derive_seed(seed, 1))
        fwd = mc_fdivergence(pair.p, pair.q, f, s, derive_seed(seed, 2))
        rev = mc_fdivergence(pair.q, pair.p, f, s, derive_seed(seed, 3))
        bound_mix = McEstimate(
            (1.0 - eps) * fwd.value + eps * rev.value,
            float(np.hypot((1.0 - eps) * fwd.stderr, eps * rev.stderr)),
            int(s), seed,
        )
    slack_mix = 4.0 * float(np.hypot(if_eps.stderr, bound_mix.stderr)) + _INEQ_ATOL
    slack_gen = 4.0 * if_eps.stderr + _INEQ_ATOL
    holds = (
        if_eps.value <= bound_mix.value + slack_mix
        and if_eps.value <= bound_gen + slack_gen
    )
    return FdivEpsilonReport(
        if_eps=if_eps, bound_mixture=bound_mix, bound_generator=bound_gen, holds=holds
    )
