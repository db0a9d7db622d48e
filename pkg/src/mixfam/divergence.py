"""f-divergence generators and Monte-Carlo estimation with confidence intervals.

Generator catalog (u > 0, natural logs; each f is convex with f(1) = 0)::

    total_variation     |u - 1| / 2
    squared_hellinger   (sqrt(u) - 1)^2
    pearson_chi2        (u - 1)^2
    neyman_chi2         (1 - u)^2 / u
    kl                  -log u
    reverse_kl          u log u
    squared_triangular  (u - 1)^2 / (2 (1 + u))
    squared_perimeter   sqrt(1 + u^2) - (1 + u) / sqrt(2)
    alpha               4 (1 - u^((1+a)/2)) / (1 - a^2),  a in (-1, 1)
    jensen_shannon      -(u + 1) log((1 + u) / 2) + u log u

The induced divergence is I_f(p:q) = E_p[f(q/p)].  Generators carry their
boundary limits f(0+) and lim f(u)/u so that algebraic closure operations
(dual, symmetrization, extension, affine shift) and the upper bound
f(0+) + lim f(u)/u can be formed without symbolic work.

Monte-Carlo estimators draw from p in fixed chunks of 65536 samples, one
PCG64 stream per chunk keyed by (seed, chunk index); chunk statistics are
merged in chunk order, so results are bit-identical for any thread count.
"""

from __future__ import annotations

import re
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .errors import (
    ConfigError,
    DegenerateRatio,
    DivergentIntegralWarning,
    NonDifferentiableAt1,
    UnknownGenerator,
    ZeroDenominator,
)
from .seeding import chunk_sizes, spawn_rng

SQRT2 = float(np.sqrt(2.0))

# Sampled density ratios outside [1/threshold, threshold] make the estimate
# suspect: the target integral may diverge (in either tail), so estimates are
# flagged rather than trusted.
RATIO_RISK_THRESHOLD = 1e12

_RESAMPLE_CAP = 100


@dataclass(frozen=True)
class DivergenceGenerator:
    """A convex generator f with f(1)=0 plus its boundary behavior.

    ``deriv_at_1`` is None when f has a kink at u=1 (total variation), in
    which case the extended generator does not exist.  ``limit_at_0`` is
    f(0+) and ``limit_slope_at_inf`` is lim_{u->inf} f(u)/u; either may be
    +inf.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    deriv_at_1: float | None
    limit_at_0: float
    limit_slope_at_inf: float

    def __call__(self, u) -> np.ndarray:
        """Evaluate f, patching the u=0 and u=inf boundaries with their limits."""
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        out = np.empty_like(u)
        zero = u == 0.0
        top = np.isinf(u)
        mid = ~zero & ~top
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out[mid] = self.fn(u[mid])
        if zero.any():
            out[zero] = self.limit_at_0
        if top.any():
            if self.limit_slope_at_inf > 0.0:
                out[top] = np.inf
            elif self.limit_slope_at_inf < 0.0:
                out[top] = -np.inf
            else:
                with np.errstate(all="ignore"):
                    tail = float(self.fn(np.asarray([1e300]))[0])
                out[top] = np.sign(tail) * np.inf if tail != 0.0 else 0.0
        return out[0] if scalar else out

    def validate(self, atol_f1: float = 1e-14, atol_convex: float = 1e-10) -> None:
        """Check f(1)=0 and midpoint convexity on a log grid over [1e-6, 1e6].

        The convexity slack is atol_convex plus a small relative term, since
        grid values reach 1e6 where double rounding alone exceeds 1e-10.
        """
        f1 = float(self(np.asarray([1.0]))[0])
        if abs(f1) > atol_f1:
            raise ConfigError(f"{self.name}: f(1)={f1} violates f(1)=0")
        grid = np.logspace(-6.0, 6.0, 49)
        fu = self(grid)
        u, v = np.meshgrid(grid, grid)
        mids = self((u + v) / 2.0)
        avg = (fu[None, :] + fu[:, None]) / 2.0
        slack = atol_convex + 1e-12 * np.abs(avg)
        ok = ~np.isfinite(mids) | ~np.isfinite(avg) | (mids <= avg + slack)
        if not ok.all():
            raise ConfigError(f"{self.name}: midpoint convexity violated")


def _alpha_generator(a: float) -> DivergenceGenerator:
    if not -1.0 < a < 1.0:
        raise ConfigError("alpha generator needs alpha in (-1, 1)")
    coef = 4.0 / (1.0 - a * a)
    expo = (1.0 + a) / 2.0
    return DivergenceGenerator(
        name=f"alpha({a:g})",
        fn=lambda u: coef * (1.0 - u**expo),
        deriv_at_1=-2.0 / (1.0 - a),
        limit_at_0=coef,
        limit_slope_at_inf=0.0,
    )


def _js_fn(u):
    return -(u + 1.0) * np.log((1.0 + u) / 2.0) + u * np.log(u)


_CATALOG: dict[str, Callable[[], DivergenceGenerator]] = {
    "total_variation": lambda: DivergenceGenerator(
        "total_variation", lambda u: 0.5 * np.abs(u - 1.0), None, 0.5, 0.5
    ),
    "squared_hellinger": lambda: DivergenceGenerator(
        "squared_hellinger", lambda u: (np.sqrt(u) - 1.0) ** 2, 0.0, 1.0, 1.0
    ),
    "pearson_chi2": lambda: DivergenceGenerator(
        "pearson_chi2", lambda u: (u - 1.0) ** 2, 0.0, 1.0, np.inf
    ),
    "neyman_chi2": lambda: DivergenceGenerator(
        "neyman_chi2", lambda u: u - 2.0 + 1.0 / u, 0.0, np.inf, 1.0
    ),
    "kl": lambda: DivergenceGenerator("kl", lambda u: -np.log(u), -1.0, np.inf, 0.0),
    "reverse_kl": lambda: DivergenceGenerator(
        "reverse_kl", lambda u: u * np.log(u), 1.0, 0.0, np.inf
    ),
    "squared_triangular": lambda: DivergenceGenerator(
        "squared_triangular", lambda u: (u - 1.0) * ((u - 1.0) / (2.0 * (1.0 + u))), 0.0, 0.5, 0.5
    ),
    "squared_perimeter": lambda: DivergenceGenerator(
        "squared_perimeter",
        lambda u: np.sqrt(1.0 + u * u) - (1.0 + u) / SQRT2,
        0.0,
        1.0 - 1.0 / SQRT2,
        1.0 - 1.0 / SQRT2,
    ),
    "jensen_shannon": lambda: DivergenceGenerator(
        "jensen_shannon", _js_fn, 0.0, float(np.log(2.0)), float(np.log(2.0))
    ),
}

GENERATOR_NAMES = tuple(list(_CATALOG) + ["alpha"])

_ALPHA_RE = re.compile(r"^alpha\((?P<a>[-+0-9.eE]+)\)$")


def generator(name: str, alpha: float | None = None) -> DivergenceGenerator:
    """Look up a catalog generator by name.

    The alpha family is parameterized: pass ``alpha=`` explicitly or embed it
    in the name as ``"alpha(0.5)"`` (the CLI form).
    """
    if name in _CATALOG:
        return _CATALOG[name]()
    m = _ALPHA_RE.match(name)
    if m is not None:
        return _alpha_generator(float(m.group("a")))
    if name == "alpha":
        if alpha is None:
            raise UnknownGenerator("alpha generator requires its parameter")
        return _alpha_generator(float(alpha))
    raise UnknownGenerator(f"unknown generator {name!r}; known: {', '.join(GENERATOR_NAMES)}")


# ---------------------------------------------------------------------------
# Generator algebra
# ---------------------------------------------------------------------------


def dual_generator(f: DivergenceGenerator) -> DivergenceGenerator:
    """u f(1/u): induces the argument-swapped divergence."""
    return DivergenceGenerator(
        name=f"dual({f.name})",
        fn=lambda u: u * f(1.0 / u),
        deriv_at_1=None if f.deriv_at_1 is None else -f.deriv_at_1,
        limit_at_0=f.limit_slope_at_inf,
        limit_slope_at_inf=f.limit_at_0,
    )


def symmetrize_generator(f: DivergenceGenerator) -> DivergenceGenerator:
    """(f + dual(f)) / 2: induces the symmetrized divergence."""
    d = dual_generator(f)
    return DivergenceGenerator(
        name=f"sym({f.name})",
        fn=lambda u: 0.5 * (f(u) + d(u)),
        deriv_at_1=None if f.deriv_at_1 is None else 0.0,
        limit_at_0=0.5 * (f.limit_at_0 + d.limit_at_0),
        limit_slope_at_inf=0.5 * (f.limit_slope_at_inf + d.limit_slope_at_inf),
    )


def extend_generator(f: DivergenceGenerator) -> DivergenceGenerator:
    """f(u) - f'(1)(u - 1): same divergence, but with f(1) = f'(1) = 0.

    This is the extension to unnormalized measures; it requires f to be
    differentiable at 1.
    """
    if f.deriv_at_1 is None or not np.isfinite(f.deriv_at_1):
        raise NonDifferentiableAt1(f"{f.name} has no derivative at u=1")
    d = f.deriv_at_1
    return DivergenceGenerator(
        name=f"ext({f.name})",
        fn=lambda u: f(u) - d * (u - 1.0),
        deriv_at_1=0.0,
        limit_at_0=f.limit_at_0 + d,
        limit_slope_at_inf=f.limit_slope_at_inf - d,
    )


def shift_generator(f: DivergenceGenerator, lam: float) -> DivergenceGenerator:
    """f(u) + lam (u - 1): induces the SAME divergence for every lam."""
    lam = float(lam)
    return DivergenceGenerator(
        name=f"shift({f.name},{lam:g})",
        fn=lambda u: f(u) + lam * (u - 1.0),
        deriv_at_1=None if f.deriv_at_1 is None else f.deriv_at_1 + lam,
        limit_at_0=f.limit_at_0 - lam,
        limit_slope_at_inf=f.limit_slope_at_inf + lam,
    )


# ---------------------------------------------------------------------------
# Exact discrete divergences
# ---------------------------------------------------------------------------


def discrete_fdiv(w, w2, f: DivergenceGenerator) -> float:
    """Exact sum_i w_i f(w2_i / w_i) for strictly positive vectors."""
    w = np.asarray(w, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if w.shape != w2.shape:
        raise ConfigError("weight vectors must have equal length")
    if np.any(w <= 0.0) or np.any(w2 <= 0.0):
        raise ConfigError("discrete_fdiv needs strictly positive entries")
    return float(np.sum(w * f(w2 / w)))


def discrete_fdiv_extended(p, q, f: DivergenceGenerator) -> float:
    """Discrete I_f allowing zero cells.

    Conventions: 0 f(q/0) = q lim f(u)/u, and p f(0/p) = p f(0+); a cell with
    both masses zero contributes nothing.  May be +inf.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    both = (p > 0.0) & (q > 0.0)
    total = float(np.sum(p[both] * f(q[both] / p[both])))
    p_only = float(p[(p > 0.0) & (q == 0.0)].sum())
    q_only = float(q[(q > 0.0) & (p == 0.0)].sum())
    if p_only > 0.0:
        total += p_only * f.limit_at_0
    if q_only > 0.0:
        total += q_only * f.limit_slope_at_inf
    return total


def vajda_bound(f: DivergenceGenerator) -> float:
    """Universal upper bound f(0+) + lim f(u)/u on I_f; +inf propagates."""
    return float(f.limit_at_0 + f.limit_slope_at_inf)


# ---------------------------------------------------------------------------
# Monte-Carlo estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class McEstimate:
    """A Monte-Carlo estimate with its CLT error bar.

    ``stderr`` is the unbiased sample standard deviation divided by sqrt(s).
    Exact (non-sampled) results reuse this type with stderr=0 and samples=0.
    """

    value: float
    stderr: float
    samples: int
    seed: int | None
    rejected: int = 0
    divergence_risk: bool = False

    def ci(self, level: float = 0.95) -> tuple[float, float]:
        """Two-sided normal-quantile confidence interval."""
        if not 0.0 < level < 1.0:
            raise ConfigError("confidence level must be in (0, 1)")
        half = float(ndtri(0.5 + level / 2.0)) * self.stderr
        return (self.value - half, self.value + half)

    def to_dict(self) -> dict:
        lo, hi = self.ci(0.95)
        return {
            "value": self.value,
            "stderr": self.stderr,
            "s": self.samples,
            "seed": self.seed,
            "ci95": [lo, hi],
            "rejected": self.rejected,
            "divergence_risk": self.divergence_risk,
        }


@dataclass
class _ChunkStats:
    n: int
    mean: float
    m2: float
    rejected: int = 0
    risky: int = 0
    n_posinf: int = 0
    n_neginf: int = 0


def _merge_stats(a: _ChunkStats, b: _ChunkStats) -> _ChunkStats:
    n = a.n + b.n
    delta = b.mean - a.mean
    mean = a.mean + delta * (b.n / n)
    m2 = a.m2 + b.m2 + delta * delta * (a.n * b.n / n)
    return _ChunkStats(
        n, mean, m2,
        a.rejected + b.rejected,
        a.risky + b.risky,
        a.n_posinf + b.n_posinf,
        a.n_neginf + b.n_neginf,
    )


def _stats_of(terms: np.ndarray, rejected: int, risky: int) -> _ChunkStats:
    n = terms.size
    n_posinf = int(np.sum(np.isposinf(terms)))
    n_neginf = int(np.sum(np.isneginf(terms)))
    if n_posinf or n_neginf:
        # divergent chunk: Welford math would turn inf into nan downstream
        terms = terms[np.isfinite(terms)]
        if terms.size == 0:
            return _ChunkStats(n, 0.0, 0.0, rejected, risky, n_posinf, n_neginf)
    mean = float(terms.mean())
    m2 = float(np.sum((terms - mean) ** 2))
    return _ChunkStats(n, mean, m2, rejected, risky, n_posinf, n_neginf)


def _chunk_log_ratios(p, q, seed: int, idx: int, size: int):
    """Draw one chunk from p and return (log p(x), log q(x), rejected count).

    Draws landing where p evaluates to zero density (possible in floating
    point far tails) are resampled from the same stream, with a counter.
    """
    rng = spawn_rng(seed, idx)
    x = p.sample(rng, size)
    lp = np.asarray(p.log_density(x), dtype=float)
    rejected = 0
    retries = 0
    bad = np.isneginf(lp)
    while bad.any():
        rejected += int(bad.sum())
        retries += 1
        if retries > _RESAMPLE_CAP:
            raise DegenerateRatio(f"chunk {idx}: could not draw positive-density samples from p")
        redraw = p.sample(rng, int(bad.sum()))
        x = np.asarray(x)
        x[bad] = redraw
        lp[bad] = p.log_density(redraw)
        bad = np.isneginf(lp)
    lq = np.asarray(q.log_density(x), dtype=float)
    return lp, lq, rejected


def _run_chunks(worker, s: int, threads: int) -> _ChunkStats:
    sizes = chunk_sizes(s)
    jobs = list(enumerate(sizes))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: worker(*job), jobs))
    else:
        parts = [worker(*job) for job in jobs]
    stats = parts[0]
    for part in parts[1:]:  # fixed chunk order => bit-stable for any thread count
        stats = _merge_stats(stats, part)
    return stats


def _finalize(stats: _ChunkStats, seed: int) -> McEstimate:
    if stats.n < 2:
        raise ConfigError("need at least 2 samples for a variance estimate")
    value = float(stats.mean)
    stderr = float(np.sqrt(stats.m2 / (stats.n - 1) / stats.n))
    if stats.n_posinf or stats.n_neginf:
        value = np.nan if (stats.n_posinf and stats.n_neginf) else (
            np.inf if stats.n_posinf else -np.inf
        )
        stderr = np.inf
    if stats.risky:
        warnings.warn(
            "sampled density ratios exceeded 1e12; the target divergence may "
            "be infinite and the Monte-Carlo estimate is not trustworthy",
            DivergentIntegralWarning,
            stacklevel=3,
        )
    return McEstimate(
        value=value,
        stderr=stderr,
        samples=stats.n,
        seed=seed,
        rejected=stats.rejected,
        divergence_risk=bool(stats.risky or stats.n_posinf or stats.n_neginf),
    )


def mc_fdivergence(p, q, f: DivergenceGenerator, s: int, seed: int, threads: int = 1) -> McEstimate:
    """Estimate I_f(p:q) = E_p[f(q/p)] from s draws of p.

    ``p`` and ``q`` are any densities exposing ``sample(rng, n)`` and
    ``log_density(x)`` over a common support (components or mixtures).  The
    plain estimator can go negative and, with a shifted generator, can even
    be driven to zero for p != q; see `mc_kl_extended` and
    `reflexivity_break`.
    """
    if s < 2:
        raise ConfigError("s must be >= 2")

    log_risk = np.log(RATIO_RISK_THRESHOLD)

    def work(idx, size):
        lp, lq, rejected = _chunk_log_ratios(p, q, seed, idx, size)
        with np.errstate(over="ignore"):
            ratio = np.exp(lq - lp)
        terms = f(ratio)
        risky = int(np.sum(np.abs(lq - lp) > log_risk))
        return _stats_of(terms, rejected, risky)

    return _finalize(_run_chunks(work, s, threads), seed)


def mc_kl_extended(p, q, s: int, seed: int, threads: int = 1) -> McEstimate:
    """Nonnegative KL estimator: mean of log(p/q) + q/p - 1 over draws from p.

    Each summand is a scalar Itakura-Saito divergence, hence >= 0, so the
    estimate is >= 0 with equality only when every sampled ratio is 1.  For
    normalized densities the target equals KL(p:q).
    """
    if s < 2:
        raise ConfigError("s must be >= 2")

    log_risk = np.log(RATIO_RISK_THRESHOLD)

    def work(idx, size):
        lp, lq, rejected = _chunk_log_ratios(p, q, seed, idx, size)
        lr = lp - lq
        with np.errstate(over="ignore"):
            terms = np.maximum(np.expm1(-lr) + lr, 0.0)
            risky = int(np.sum(np.abs(lr) > log_risk))
        return _stats_of(terms, rejected, risky)

    return _finalize(_run_chunks(work, s, threads), seed)


@dataclass(frozen=True)
class ReflexivityBreak:
    """Outcome of the reflexivity-breaking shift construction."""

    lambda0: float
    shifted_estimate: float
    base_estimate: float
    samples: int
    seed: int


def reflexivity_break(p, q, f: DivergenceGenerator, s: int, seed: int) -> ReflexivityBreak:
    """Shift f by the data-dependent lambda0 that zeroes the MC estimate.

    Uses the SAME sample set as ``mc_fdivergence(p, q, f, s, seed)``.  With
    lambda0 = sum f(r_i) / sum (r_i - 1), the estimator of the shifted
    generator f_{lambda0} hits exactly zero even though the true divergence
    is unchanged and positive for p != q: plain MC estimation can break the
    reflexivity axiom.  Raises ``ZeroDenominator`` when the sampled ratios
    average to one (e.g. p = q).
    """
    if s < 2:
        raise ConfigError("s must be >= 2")
    sum_f = 0.0
    sum_shift = 0.0
    for idx, size in enumerate(chunk_sizes(s)):
        lp, lq, _ = _chunk_log_ratios(p, q, seed, idx, size)
        lr = lq - lp
        with np.errstate(over="ignore"):
            sum_f += float(np.sum(f(np.exp(lr))))
            sum_shift += float(np.sum(np.expm1(lr)))
    if abs(sum_shift) < 1e-12 * s:
        raise ZeroDenominator("sum of (q/p - 1) is ~0; shift construction undefined")
    lambda0 = sum_f / sum_shift
    shifted = (sum_f - lambda0 * sum_shift) / s
    return ReflexivityBreak(
        lambda0=lambda0,
        shifted_estimate=shifted,
        base_estimate=sum_f / s,
        samples=s,
        seed=seed,
    )
