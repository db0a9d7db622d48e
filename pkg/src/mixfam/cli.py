"""Command-line driver.

Subcommands: estimate | verify | aggregate | cluster | bounds | plot-potential.
Configs are JSON documents validated against strict schemas; every command is
deterministic given its config and seed (``--threads`` changes speed only).
Primary outputs are JSON/CSV files with no timestamps; a sibling
``<out>.manifest.json`` records the config hash, package version, seed,
wall-clock time, and the sha256 of each emitted file.

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from . import bounds as bounds_mod
from . import geometry as geo
from .aggregation import bregman_kmeans, run_distributed_experiment
from .components import ComponentBasis, FinitePmf, Gaussian, component_from_dict
from .divergence import (
    discrete_fdiv_extended,
    generator,
    mc_fdivergence,
    mc_kl_extended,
)
from .errors import ConfigError, MixfamError, NumericalError
from .figures import render_aggregation_summary, render_potential_curve
from .mixture import Mixture, convex_combine
from .seeding import spawn_rng
from .serialize import (
    canonical_json,
    config_hash,
    mixture_from_dict,
    sha256_file,
    validate_config,
    validate_report,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# Check records
# ---------------------------------------------------------------------------


def _equality_check(name, lhs, rhs, slack):
    return {
        "name": name,
        "lhs": float(lhs),
        "rhs": float(rhs),
        "slack": float(slack),
        "pass": bool(abs(lhs - rhs) <= slack),
    }


def _upper_check(name, lhs, rhs, slack):
    return {
        "name": name,
        "lhs": float(lhs),
        "rhs": float(rhs),
        "slack": float(slack),
        "pass": bool(lhs <= rhs + slack),
    }


def _direct_kl(m1: Mixture, m2: Mixture) -> float:
    return discrete_fdiv_extended(m1.atom_pmf(), m2.atom_pmf(), generator("kl"))


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def cmd_estimate(cfg: dict, threads: int) -> dict:
    p = mixture_from_dict(cfg["p"])
    q = mixture_from_dict(cfg["q"])
    s = cfg.get("samples", 100_000)
    seed = cfg.get("seed", 0)
    results = []
    for name in cfg["generators"]:
        if name == "extended_kl":
            est = mc_kl_extended(p, q, s, seed, threads=threads)
        else:
            est = mc_fdivergence(p, q, generator(name), s, seed, threads=threads)
        results.append({"generator": name, **est.to_dict()})
    return {"command": "estimate", "results": results}


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

EXACT_SLACK = 1e-12


def _verify_categorical(cfg: dict) -> list[dict]:
    basis = ComponentBasis(
        (
            FinitePmf([0.70, 0.10, 0.10, 0.10]),
            FinitePmf([0.10, 0.60, 0.20, 0.10]),
            FinitePmf([0.05, 0.15, 0.30, 0.50]),
        )
    )
    m1 = Mixture(basis, [0.6, 0.3, 0.1])
    m2 = Mixture(basis, [0.2, 0.3, 0.5])
    oracle = geo.ExactCategoricalOracle(basis)
    corrupt = cfg.get("corrupt_eta", 0.0)
    m2_oracle = Mixture.from_eta(basis, m2.eta + corrupt) if corrupt else m2

    checks = []
    kl12 = _direct_kl(m1, m2)
    kl21 = _direct_kl(m2, m1)
    checks.append(
        _equality_check("kl_vs_bregman", kl12, geo.bregman_kl(m1, m2_oracle, oracle).value, EXACT_SLACK)
    )
    checks.append(
        _equality_check(
            "kl_vs_canonical", kl12, geo.canonical_divergence(m1, m2_oracle, oracle).value, EXACT_SLACK
        )
    )
    checks.append(_equality_check("young_gap", geo.young_gap(m1, oracle).value, 0.0, EXACT_SLACK))
    checks.append(
        _equality_check(
            "jeffreys_mixed", geo.jeffreys_divergence(m1, m2, oracle).value, kl12 + kl21, EXACT_SLACK
        )
    )
    for alpha in cfg.get("alphas", [0.25, 0.5, 0.75]):
        mid = convex_combine(m1, m2, alpha)
        js_direct = (1.0 - alpha) * _direct_kl(m1, mid) + alpha * _direct_kl(m2, mid)
        checks.append(
            _equality_check(
                f"js_equals_jensen_alpha_{alpha:g}",
                geo.skew_jensen(m1, m2, alpha, oracle).value,
                js_direct,
                EXACT_SLACK,
            )
        )
    eps = cfg.get("epsilon", 0.25)
    pair = bounds_mod.EpsilonPair(m1, m2, eps)
    tv = bounds_mod.tv_epsilon(pair)
    checks.append(
        _equality_check("tv_epsilon_identity", tv.tv_eps.value, tv.scale * tv.tv_base.value, EXACT_SLACK)
    )
    ke = bounds_mod.kl_epsilon_bounds(pair)
    checks.append(_upper_check("kl_epsilon_below_upper", ke.estimate.value, ke.upper, EXACT_SLACK))
    checks.append(_upper_check("kl_epsilon_above_lower", ke.lower, ke.estimate.value, EXACT_SLACK))
    checks.append(
        _equality_check(
            "kl_epsilon_is_bregman", ke.estimate.value, bounds_mod.kl_epsilon_bregman(pair), EXACT_SLACK
        )
    )
    wb = bounds_mod.weight_bound_suite(m1.weights, m2.weights, generator("kl"))
    checks.append(_upper_check("weight_kl_le_log_maxmin", wb.kl_exact, wb.log_maxmin_bound, EXACT_SLACK))
    return checks


def _verify_gmm(cfg: dict, threads: int) -> list[dict]:
    basis = ComponentBasis((Gaussian(-1.0, 1.0), Gaussian(1.0, 1.0)))
    m1 = Mixture(basis, [0.8, 0.2])
    m2 = Mixture(basis, [0.3, 0.7])
    s = cfg.get("samples", 1_000_000)
    seed = cfg.get("seed", 0)
    oracle = geo.MonteCarloOracle(basis, samples=s, seed=seed)
    corrupt = cfg.get("corrupt_eta", 0.0)
    m2_oracle = Mixture.from_eta(basis, m2.eta + corrupt) if corrupt else m2

    checks = []
    mc12 = mc_kl_extended(m1, m2, s, seed, threads=threads)
    mc21 = mc_kl_extended(m2, m1, s, seed + 1, threads=threads)
    breg = geo.bregman_kl(m1, m2_oracle, oracle)
    checks.append(
        _equality_check(
            "kl_vs_bregman", mc12.value, breg.value, 4.0 * float(np.hypot(mc12.stderr, breg.stderr))
        )
    )
    gap = geo.young_gap(m1, oracle)
    checks.append(_equality_check("young_gap", gap.value, 0.0, 4.0 * gap.stderr))
    jeff = geo.jeffreys_divergence(m1, m2, oracle)
    checks.append(
        _equality_check(
            "jeffreys_mixed",
            jeff.value,
            mc12.value + mc21.value,
            4.0 * float(np.hypot(jeff.stderr, np.hypot(mc12.stderr, mc21.stderr))),
        )
    )
    for alpha in cfg.get("alphas", [0.5]):
        jen = geo.skew_jensen(m1, m2, alpha, oracle)
        js = geo.skew_jensen_shannon(m1, m2, alpha, s, seed + 2, threads=threads)
        checks.append(
            _equality_check(
                f"js_equals_jensen_alpha_{alpha:g}",
                js.value,
                jen.value,
                4.0 * float(np.hypot(js.stderr, jen.stderr)),
            )
        )
    eps = cfg.get("epsilon", 0.25)
    pair = bounds_mod.EpsilonPair(m1, m2, eps)
    tv = bounds_mod.tv_epsilon(pair, s=s, seed=seed + 3)
    checks.append(
        _equality_check(
            "tv_epsilon_identity",
            tv.tv_eps.value,
            tv.scale * tv.tv_base.value,
            4.0 * float(np.hypot(tv.tv_eps.stderr, tv.scale * tv.tv_base.stderr)),
        )
    )
    return checks


def cmd_verify(cfg: dict, threads: int) -> dict:
    mode = cfg.get("mode", "categorical")
    checks = _verify_categorical(cfg) if mode == "categorical" else _verify_gmm(cfg, threads)
    return {
        "command": "verify",
        "mode": mode,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
    }


# ---------------------------------------------------------------------------
# aggregate / cluster
# ---------------------------------------------------------------------------

_DEFAULT_TRUTH = {
    "pmf": {
        "basis": [
            {"kind": "pmf", "p": [1.0, 0.0, 0.0]},
            {"kind": "pmf", "p": [0.0, 1.0, 0.0]},
            {"kind": "pmf", "p": [0.0, 0.0, 1.0]},
        ],
        "w": [0.2, 0.3, 0.5],
    },
    "gmm": {
        "basis": [
            {"kind": "gaussian", "mean": -3.0, "stddev": 1.0},
            {"kind": "gaussian", "mean": 3.0, "stddev": 1.0},
        ],
        "w": [0.3, 0.7],
    },
}


def cmd_aggregate(cfg: dict) -> dict:
    truth_doc = cfg.get("truth") or _DEFAULT_TRUTH[cfg.get("basis_mode", "pmf")]
    truth = mixture_from_dict(truth_doc)
    report = run_distributed_experiment(
        truth,
        n=cfg.get("n", 100_000),
        m=cfg.get("shards", 10),
        seed=cfg.get("seed", 0),
        eval_samples=cfg.get("eval_samples", 200_000),
    )
    return {"command": "aggregate", **report.to_dict()}


def cmd_cluster(cfg: dict) -> dict:
    basis = ComponentBasis(tuple(component_from_dict(c) for c in cfg["basis"]))
    mixtures = [Mixture(basis, w) for w in cfg["weights"]]
    oracle = geo.oracle_for(basis, samples=cfg.get("samples", 10_000), seed=cfg.get("seed", 0))
    result = bregman_kmeans(
        mixtures,
        cfg["k"],
        oracle,
        seed=cfg.get("seed", 0),
        max_iter=cfg.get("max_iter", 100),
        mc_samples=cfg.get("samples", 10_000),
    )
    return {
        "command": "cluster",
        "assignments": [int(a) for a in result.assignments],
        "centroids": [[float(v) for v in c] for c in result.centroids],
        "objective_trace": [float(v) for v in result.objective_trace],
        "iterations": result.iterations,
    }


# ---------------------------------------------------------------------------
# bounds sweep
# ---------------------------------------------------------------------------

_SWEEP_GENERATORS = (
    "kl",
    "total_variation",
    "squared_hellinger",
    "pearson_chi2",
    "neyman_chi2",
    "reverse_kl",
    "squared_triangular",
    "squared_perimeter",
    "jensen_shannon",
    "alpha(0.5)",
)


class _IneqTracker:
    def __init__(self, name):
        self.name = name
        self.instances = 0
        self.violations = 0
        self.worst = None  # record with smallest margin rhs - lhs

    def add(self, lhs, rhs, slack):
        self.instances += 1
        ok = lhs <= rhs + slack
        if not ok:
            self.violations += 1
        margin = rhs - lhs
        if self.worst is None or margin < self.worst[1] - self.worst[0]:
            self.worst = (float(lhs), float(rhs), float(slack))

    def record(self):
        lhs, rhs, slack = self.worst
        return {
            "name": self.name,
            "lhs": lhs,
            "rhs": rhs,
            "slack": slack,
            "holds": self.violations == 0,
            "instances": self.instances,
            "violations": self.violations,
        }


def _random_simplex(rng, k, floor=1e-6):
    w = np.maximum(rng.dirichlet(np.ones(k)), floor)
    return w / w.sum()


def cmd_bounds(cfg: dict) -> dict:
    instances = cfg.get("instances", 1000)
    seed = cfg.get("seed", 0)
    gen_names = cfg.get("generators", list(_SWEEP_GENERATORS))
    gens = [generator(n) for n in gen_names]
    kl_gen = generator("kl")
    trackers: dict[str, _IneqTracker] = {}

    def track(name, lhs, rhs, slack=1e-12):
        trackers.setdefault(name, _IneqTracker(name)).add(lhs, rhs, slack)

    for i in range(instances):
        rng = spawn_rng(seed, 100, i)
        f = gens[i % len(gens)]
        k = int(rng.integers(2, 6))
        n_atoms = int(rng.integers(k, k + 4))
        rows = [_random_simplex(rng, n_atoms) for _ in range(k)]
        basis = ComponentBasis(tuple(FinitePmf(r) for r in rows))
        w1 = _random_simplex(rng, k)
        w2 = _random_simplex(rng, k)
        m1 = Mixture(basis, w1)
        m2 = Mixture(basis, w2)

        a = np.exp(rng.normal(size=k))
        b = np.exp(rng.normal(size=k))
        cs = bounds_mod.convex_sum_check(a, b, f)
        track("convex_sum", cs.rhs, cs.lhs)

        wb = bounds_mod.weight_bound_suite(w1, w2, f)
        track("fdiv_le_max_generator", wb.fdiv_exact, wb.max_generator_bound)
        track("kl_le_log_maxmin", wb.kl_exact, wb.log_maxmin_bound)
        track("kl_le_fat_bound", wb.kl_exact, wb.fat_bound)

        track("mixture_kl_le_weight_kl", _direct_kl(m1, m2), wb.kl_exact)

        jc = bounds_mod.joint_convexity_upper_bound(m1, m2, f)
        track("joint_convexity", jc.lhs.value, jc.rhs)

        labels = rng.integers(0, 2, size=n_atoms)
        if labels.min() == labels.max():  # force two nonempty bins
            labels[0] = 1 - labels[0]
        part = bounds_mod.LumpingPartition(labels=labels)
        lumped = bounds_mod.lumping_lower_bound(m1, m2, part, f)
        exact = discrete_fdiv_extended(m1.atom_pmf(), m2.atom_pmf(), f)
        track("lumping_lower_bound", lumped, exact)

        eps = float(rng.uniform(0.05, 0.95))
        pair = bounds_mod.EpsilonPair(m1, m2, eps)
        fe = bounds_mod.fdiv_epsilon_inequalities(pair, f)
        track("fdiv_epsilon_mixture_bound", fe.if_eps.value, fe.bound_mixture.value)
        track("fdiv_epsilon_generator_bound", fe.if_eps.value, fe.bound_generator)
        ke = bounds_mod.kl_epsilon_bounds(pair)
        track("kl_epsilon_below_upper", ke.estimate.value, ke.upper)
        track("kl_epsilon_above_lower", ke.lower, ke.estimate.value)

        alpha = float(rng.uniform(0.05, 0.95))
        ca = geo.chernoff_alpha_categorical(m1, m2, alpha)
        lo_w = (w1.min() / w2.max()) ** alpha
        hi_w = (w1.max() / w2.min()) ** alpha
        track("chernoff_coefficient_above_weight_min", lo_w, ca.coefficient.value)
        track("chernoff_coefficient_below_weight_max", ca.coefficient.value, hi_w)

    records = [trackers[name].record() for name in sorted(trackers)]
    return {
        "command": "bounds",
        "inequalities": records,
        "all_hold": all(r["holds"] for r in records),
    }


# ---------------------------------------------------------------------------
# plot-potential
# ---------------------------------------------------------------------------

_DEFAULT_PLOT_BASIS = [
    {"kind": "gaussian", "mean": -1.0, "stddev": 1.0},
    {"kind": "gaussian", "mean": 1.5, "stddev": 0.75},
]


def cmd_plot_potential(cfg: dict) -> list[dict]:
    basis = ComponentBasis(tuple(component_from_dict(c) for c in cfg["basis"]))
    grid = np.linspace(cfg.get("eta_min", 0.01), cfg.get("eta_max", 0.99), cfg.get("grid_points", 101))
    oracle = geo.oracle_for(basis, samples=cfg.get("samples", 100_000), seed=cfg.get("seed", 0))
    rows = []
    for eta in grid:
        fstar, se_fstar = oracle.fstar(np.array([eta]))
        f_val, se_f = oracle.ce_component(0, np.array([eta]))
        rows.append(
            {
                "eta": float(eta),
                "Fstar": fstar,
                "stderr": se_fstar,
                "F": f_val,
                "stderr_F": se_f,
            }
        )
    return rows


def _write_potential_csv(rows: list[dict], path: str) -> None:
    cols = ["eta", "Fstar", "stderr", "F", "stderr_F"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(repr(r[c]) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixfam",
        description="Information geometry of mixtures with fixed components.",
    )
    parser.add_argument("--version", action="version", version=f"mixfam {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("estimate", "verify", "aggregate", "cluster", "bounds", "plot-potential"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--samples", type=int, help="override config sample count")
        p.add_argument("--out", help="primary output path")
        p.add_argument("--threads", type=int, default=1, help="worker threads (speed only)")
        if name == "aggregate":
            p.add_argument("--truth", help="JSON file with the ground-truth mixture")
            p.add_argument("--n", type=int, help="total sample count")
            p.add_argument("--shards", type=int, help="number of shards")
            p.add_argument("--basis-mode", choices=("pmf", "gmm"), dest="basis_mode")
        if name == "plot-potential":
            p.add_argument("--no-figure", action="store_true", help="skip the PNG render")
    return parser


def _load_config(args) -> dict:
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
    if args.command == "aggregate":
        if getattr(args, "truth", None):
            with open(args.truth) as fh:
                cfg["truth"] = json.load(fh)
        for key in ("n", "shards", "basis_mode"):
            val = getattr(args, key, None)
            if val is not None:
                cfg[key] = val
    if args.command == "plot-potential" and "basis" not in cfg:
        cfg["basis"] = _DEFAULT_PLOT_BASIS
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.samples is not None:
        if args.command == "aggregate":
            cfg["eval_samples"] = args.samples
        elif args.command == "bounds":
            print("note: the bounds sweep is exact arithmetic; --samples has no effect")
        else:
            cfg["samples"] = args.samples
    return validate_config(args.command, cfg)


def _default_out(command: str) -> str:
    return "potential.csv" if command == "plot-potential" else f"{command.replace('-', '_')}_report.json"


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = _load_config(args)
        out = args.out or _default_out(args.command)
        outputs = [out]
        exit_code = EXIT_OK

        if args.command == "estimate":
            report = cmd_estimate(cfg, args.threads)
            validate_report("estimate", report)
            _write_text(out, canonical_json(report))
        elif args.command == "verify":
            report = cmd_verify(cfg, args.threads)
            validate_report("verify", report)
            _write_text(out, canonical_json(report))
            for c in report["checks"]:
                print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}: "
                      f"lhs={c['lhs']:.9g} rhs={c['rhs']:.9g} slack={c['slack']:.3g}")
            if not report["all_pass"]:
                exit_code = EXIT_VERIFY_FAILED
        elif args.command == "aggregate":
            report = cmd_aggregate(cfg)
            validate_report("aggregate", report)
            _write_text(out, canonical_json(report))
            fig_path = _with_suffix(out, ".png")
            render_aggregation_summary(report, fig_path)
            outputs.append(fig_path)
        elif args.command == "cluster":
            report = cmd_cluster(cfg)
            validate_report("cluster", report)
            _write_text(out, canonical_json(report))
        elif args.command == "bounds":
            report = cmd_bounds(cfg)
            validate_report("bounds", report)
            _write_text(out, canonical_json(report))
            for r in report["inequalities"]:
                print(f"{'HOLDS' if r['holds'] else 'VIOLATED'}  {r['name']} "
                      f"({r['violations']}/{r['instances']} violations)")
            if not report["all_hold"]:
                exit_code = EXIT_VERIFY_FAILED
        else:  # plot-potential
            rows = cmd_plot_potential(cfg)
            _write_potential_csv(rows, out)
            if not getattr(args, "no_figure", False) and cfg.get("figure", True):
                fig_path = _with_suffix(out, ".png")
                render_potential_curve(rows, fig_path)
                outputs.append(fig_path)

        _write_manifest(out, cfg, outputs, time.perf_counter() - started)
        print(f"wrote {', '.join(outputs)}")
        return exit_code
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MixfamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _write_text(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def _with_suffix(path: str, suffix: str) -> str:
    stem = path.rsplit(".", 1)[0] if "." in path.split("/")[-1] else path
    return stem + suffix


def _write_manifest(out: str, cfg: dict, outputs: list[str], wall_clock: float) -> None:
    manifest = {
        "config_hash": config_hash(cfg),
        "version": __version__,
        "seed": cfg.get("seed", 0),
        "wall_clock_s": wall_clock,
        "outputs": [{"path": p, "sha256": sha256_file(p)} for p in outputs],
    }
    _write_text(out + ".manifest.json", canonical_json(manifest))


if __name__ == "__main__":
    sys.exit(main())
