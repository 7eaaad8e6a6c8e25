"""Figure rendering for sweep reports.

Figures are written as SVG with a fixed hash salt and no embedded date so
repeated runs of the same sweep produce byte-identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "spslab"

import matplotlib.pyplot as plt  # noqa: E402


def _positive_rows(rows):
    out = [(r["eps"], r) for r in rows if r["eps"] and r["eps"] > 0]
    out.sort(key=lambda t: t[0])
    return out


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_gap(rows: list[dict], path: str, slope: float | None = None) -> str:
    """Log-log energy gap versus eps with the fitted near-linear trend."""
    pts = _positive_rows(rows)
    eps = [e for e, _ in pts]
    gap = [r["gap"] for _, r in pts]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(eps, gap, "o-", color="#1f77b4", label="m(eps) - m(0)")
    if slope is not None and len(eps) >= 2 and all(g > 0 for g in gap):
        ref = [gap[0] * (e / eps[0]) ** slope for e in eps]
        ax.loglog(eps, ref, "--", color="#888888",
                  label="slope %.2f fit" % slope)
    ax.set_xlabel("eps")
    ax.set_ylabel("energy gap")
    ax.set_title("ground-state energy gap vs eps")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
    return path


def plot_distance(rows: list[dict], path: str) -> str:
    """Distance to the limit profile and rescaled mass, both versus eps."""
    pts = _positive_rows(rows)
    eps = [e for e, _ in pts]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(eps, [r["e_dist"] for _, r in pts], "s-", color="#d62728",
              label="distance to limit profile")
    ax.loglog(eps, [r["eps_times_B"] for _, r in pts], "^-", color="#2ca02c",
              label="eps * squared mass")
    ax.set_xlabel("eps")
    ax.set_ylabel("diagnostic")
    ax.set_title("convergence to the zero-mass limit")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
    return path
