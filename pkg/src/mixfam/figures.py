"""Matplotlib rendering for the report paths (headless, deterministic files)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

# Pinned so rerenders of identical data are byte-identical.
_PNG_METADATA = {"Software": "mixfam"}


def render_potential_curve(rows: list[dict], path: str) -> None:
    """Plot the two potentials over the eta grid with 2-sigma bands.

    ``rows`` are the plot-potential CSV records: dicts with keys eta, Fstar,
    stderr, F, stderr_F.
    """
    eta = [r["eta"] for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), sharex=True)
    for ax, key, err_key, label in (
        (axes[0], "Fstar", "stderr", "negative entropy  F*(eta)"),
        (axes[1], "F", "stderr_F", "cross-entropy  F(theta(eta))"),
    ):
        vals = [r[key] for r in rows]
        errs = [2.0 * r[err_key] for r in rows]
        ax.plot(eta, vals, lw=1.2, color="C0")
        ax.fill_between(
            eta,
            [v - e for v, e in zip(vals, errs)],
            [v + e for v, e in zip(vals, errs)],
            alpha=0.25,
            color="C0",
            lw=0,
        )
        ax.set_xlabel("eta")
        ax.set_title(label, fontsize=10)
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)


def render_aggregation_summary(report: dict, path: str) -> None:
    """Bar chart comparing KL(truth:aggregate) and KL(truth:global)."""
    kl = report["kl_to_truth"]
    names = ["aggregate", "global"]
    vals = [kl[n]["value"] for n in names]
    errs = [2.0 * kl[n]["stderr"] for n in names]
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.bar(names, vals, yerr=errs, color=["C0", "C1"], capsize=4)
    ax.set_ylabel("KL(truth : estimate)  [nats]")
    ax.set_title("KL-averaging vs pooled fit", fontsize=10)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)
