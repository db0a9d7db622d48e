"""Distributed weight estimation and KL-averaging aggregation.

Local machines fit mixture weights on their shard with a weight-only EM
(components are fixed, so the likelihood is concave in the weights and EM is
just multiplicative updates on responsibilities).  A central node then merges
the local eta estimates by KL-averaging: minimize the summed KL from the
local models to one merged model.  Because that objective is a sum of
right-sided Bregman divergences on eta -- whatever the convex potential is --
its minimizer is the plain center of mass of the local etas; no potential
evaluation is needed, and with equal shards the merge loses nothing relative
to pooling all the data.

The same centroid step drives a k-means clustering of mixtures under KL
cost, and a moment-matching projection collapses a Gaussian-basis mixture to
the closest single Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .components import Gaussian
from .divergence import McEstimate, discrete_fdiv_extended, generator, mc_kl_extended
from .errors import (
    AllZeroDensity,
    BasisMismatch,
    ConfigError,
    EmptyInput,
    NotGaussianBasis,
)
from .mixture import Mixture
from .seeding import derive_seed, spawn_rng

EM_WEIGHT_FLOOR = 1e-9


@dataclass(frozen=True)
class EmFit:
    weights: np.ndarray
    loglik_trace: np.ndarray
    iterations: int
    converged: bool


def fit_weights_em(
    basis,
    samples,
    init=None,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> EmFit:
    """Maximum-likelihood mixture weights for fixed components.

    E-step: responsibilities r_ij = w_j p_j(x_i) / m(x_i); M-step: w_j =
    mean_i r_ij.  The log-likelihood is nondecreasing; iteration stops when
    the increase falls below ``tol``.  Weights are floored at 1e-9 and
    renormalized to stay inside the open simplex.
    """
    x = np.asarray(samples)
    if x.size == 0:
        raise ConfigError("EM needs at least one sample")
    logp = basis.log_density_matrix(x)  # (k, n)
    if init is None:
        w = np.full(basis.k, 1.0 / basis.k)
    else:
        w = np.asarray(init, dtype=float).copy()
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        with np.errstate(divide="ignore"):
            weighted = logp + np.log(w)[:, None]
        log_mix = logsumexp(weighted, axis=0)
        if np.isneginf(log_mix).any():
            raise AllZeroDensity("a sample has zero density under every component")
        loglik = float(log_mix.sum())
        trace.append(loglik)
        resp = np.exp(weighted - log_mix)
        w_new = resp.mean(axis=1)
        w_new = np.maximum(w_new, EM_WEIGHT_FLOOR)
        w_new /= w_new.sum()
        w = w_new
        if len(trace) >= 2 and trace[-1] - trace[-2] < tol:
            converged = True
            break
    return EmFit(
        weights=w, loglik_trace=np.asarray(trace), iterations=it, converged=converged
    )


def kl_average(etas) -> np.ndarray:
    """The optimal KL-averaging merge of eta estimates: their center of mass.

    This is the exact argmin of sum_i B(eta_i : eta) for any right-sided
    Bregman objective with a convex potential, so no potential (entropy)
    evaluation is involved.
    """
    etas = [np.asarray(e, dtype=float) for e in etas]
    if not etas:
        raise EmptyInput("no eta estimates to aggregate")
    dims = {e.shape for e in etas}
    if len(dims) != 1:
        raise ConfigError("eta estimates must share one dimension")
    return np.mean(np.stack(etas), axis=0)


def kl_average_weighted(etas, sizes) -> np.ndarray:
    """Sample-size-weighted merge sum_i (n_i/n) eta_i for unequal shards."""
    etas = [np.asarray(e, dtype=float) for e in etas]
    if not etas:
        raise EmptyInput("no eta estimates to aggregate")
    sizes = np.asarray(sizes, dtype=float)
    return np.tensordot(sizes / sizes.sum(), np.stack(etas), axes=1)


@dataclass(frozen=True)
class ShardedDataset:
    shards: list
    truth: Mixture
    seed: int

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.shards])


def shard_dataset(truth: Mixture, n: int, m: int, seed: int) -> ShardedDataset:
    """Draw n points from the truth and split them into m near-equal shards."""
    if not 1 <= m <= n:
        raise ConfigError("need n >= m >= 1")
    x = truth.sample(spawn_rng(seed, 0), n)
    bounds = np.linspace(0, n, m + 1).astype(int)
    shards = [x[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    return ShardedDataset(shards=shards, truth=truth, seed=seed)


@dataclass(frozen=True)
class AggregationReport:
    local_etas: list
    aggregate_eta: np.ndarray
    global_eta: np.ndarray
    kl_truth_aggregate: McEstimate
    kl_truth_global: McEstimate
    shard_sizes: np.ndarray
    seed: int

    def to_dict(self) -> dict:
        return {
            "local_etas": [[float(v) for v in e] for e in self.local_etas],
            "aggregate_eta": [float(v) for v in self.aggregate_eta],
            "global_eta": [float(v) for v in self.global_eta],
            "kl_to_truth": {
                "aggregate": self.kl_truth_aggregate.to_dict(),
                "global": self.kl_truth_global.to_dict(),
            },
            "shard_sizes": [int(v) for v in self.shard_sizes],
            "seed": self.seed,
        }


def _kl_to(truth: Mixture, est_eta: np.ndarray, s: int, seed: int) -> McEstimate:
    other = Mixture.from_eta(truth.basis, est_eta)
    if truth.basis.measure_kind == "counting":
        val = discrete_fdiv_extended(truth.atom_pmf(), other.atom_pmf(), generator("kl"))
        return McEstimate(float(val), 0.0, 0, None)
    return mc_kl_extended(truth, other, s, seed)


def run_distributed_experiment(
    truth: Mixture,
    n: int,
    m: int,
    seed: int,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    eval_samples: int = 200_000,
) -> AggregationReport:
    """Simulate shard -> local EM -> KL-average, against pooled global EM.

    Reports KL(truth : aggregate) and KL(truth : global), exact on counting
    bases and Monte-Carlo otherwise.  Unequal shard sizes (when m does not
    divide n) are merged with the size-weighted mean.
    """
    data = shard_dataset(truth, n, m, seed)
    fits = [fit_weights_em(truth.basis, shard, tol=tol, max_iter=max_iter) for shard in data.shards]
    local_etas = [f.weights[1:] for f in fits]
    aggregate_eta = kl_average_weighted(local_etas, data.sizes)
    pooled = np.concatenate(data.shards)
    global_eta = fit_weights_em(truth.basis, pooled, tol=tol, max_iter=max_iter).weights[1:]
    kl_agg = _kl_to(truth, aggregate_eta, eval_samples, derive_seed(seed, 1))
    kl_glob = _kl_to(truth, global_eta, eval_samples, derive_seed(seed, 2))
    return AggregationReport(
        local_etas=local_etas,
        aggregate_eta=aggregate_eta,
        global_eta=global_eta,
        kl_truth_aggregate=kl_agg,
        kl_truth_global=kl_glob,
        shard_sizes=data.sizes,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Bregman k-means over mixtures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KMeansResult:
    assignments: np.ndarray
    centroids: list
    objective_trace: np.ndarray
    iterations: int


def _kl_cost_exact(oracle, eta_point, eta_centroid) -> float:
    from .geometry import bregman_kl

    m1 = Mixture.from_eta(oracle.basis, eta_point)
    m2 = Mixture.from_eta(oracle.basis, eta_centroid)
    return bregman_kl(m1, m2, oracle).value


def bregman_kmeans(
    mixtures,
    k: int,
    oracle,
    seed: int = 0,
    max_iter: int = 100,
    mc_samples: int = 10_000,
) -> KMeansResult:
    """k-means on mixtures under KL cost, centroids as eta means.

    Assignment uses KL(point : centroid) -- the right-sided Bregman cost
    whose cluster minimizer is the eta center of mass.  Exact oracles give a
    nonincreasing objective; Monte-Carlo assignment freezes one seed per
    (point, centroid-slot) pair so comparisons stay stable across iterations.
    Initialization is farthest-first traversal in the eta chart.
    """
    mixtures = list(mixtures)
    if not 1 <= k <= len(mixtures):
        raise ConfigError("need 1 <= k <= number of mixtures")
    basis = mixtures[0].basis
    for m in mixtures:
        if m.basis != basis:
            raise BasisMismatch("all mixtures must share one basis")
    etas = np.stack([m.eta for m in mixtures])
    n = len(mixtures)
    exact = oracle.mode == "exact"

    def cost(i: int, centroid_eta: np.ndarray, slot: int) -> float:
        if exact:
            return _kl_cost_exact(oracle, etas[i], centroid_eta)
        est = mc_kl_extended(
            mixtures[i],
            Mixture.from_eta(basis, centroid_eta),
            mc_samples,
            derive_seed(seed, 7919 + i * k + slot),
        )
        return est.value

    # farthest-first seeding in the eta chart
    rng = spawn_rng(seed, 1)
    chosen = [int(rng.integers(n))]
    while len(chosen) < k:
        d2 = np.min(
            np.stack([np.sum((etas - etas[c]) ** 2, axis=1) for c in chosen]), axis=0
        )
        chosen.append(int(np.argmax(d2)))
    centroids = [etas[c].copy() for c in chosen]

    assign = np.full(n, -1)
    trace = []
    it = 0
    for it in range(1, max_iter + 1):
        costs = np.array([[cost(i, c, j) for j, c in enumerate(centroids)] for i in range(n)])
        new_assign = costs.argmin(axis=1)
        trace.append(float(costs[np.arange(n), new_assign].sum()))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            members = etas[assign == j]
            if members.size:
                centroids[j] = members.mean(axis=0)
    return KMeansResult(
        assignments=assign,
        centroids=centroids,
        objective_trace=np.asarray(trace),
        iterations=it,
    )


def gaussian_simplify(m: Mixture) -> Gaussian:
    """KL-project a Gaussian-basis mixture onto a single Gaussian.

    The projection argmin_N KL(m : N) matches first and second moments:
    mean = sum w_i mu_i, variance = sum w_i (sigma_i^2 + mu_i^2) - mean^2.
    """
    comps = m.basis.components
    if not all(isinstance(c, Gaussian) for c in comps):
        raise NotGaussianBasis("simplification needs an all-Gaussian basis")
    mus = np.array([c.mean for c in comps])
    sig2 = np.array([c.stddev**2 for c in comps])
    mean = float(np.sum(m.weights * mus))
    var = float(np.sum(m.weights * (sig2 + mus**2)) - mean**2)
    return Gaussian(mean, float(np.sqrt(var)))
