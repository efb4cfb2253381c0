"""Figure rendering for experiment outputs.

Each renderer takes the in-memory results a runner produced and writes a
PNG next to the delimited files.  Figures are a convenience view; the
CSV/JSON files stay the authoritative record.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import NOT_FOUND

__all__ = [
    "plot_table1",
    "plot_ratio",
    "plot_pgd_compare",
    "plot_landscape",
    "plot_theorem_audit",
    "plot_rip_estimate",
]

_META = {"Software": "bmsense"}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)


def _by_n(rows):
    groups = {}
    for row in rows:
        groups.setdefault(row[0], []).append(row)
    return groups


def plot_table1(rows, path):
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    for n, grp in sorted(_by_n(rows).items()):
        lams = [r[1] for r in grp if r[2] != NOT_FOUND]
        lmin = [r[2] for r in grp if r[2] != NOT_FOUND]
        lmax = [r[3] for r in grp if r[2] != NOT_FOUND]
        axes[0].plot(lams, lmin, "o-", label=f"n={n}")
        axes[1].plot(lams, lmax, "o-", label=f"n={n}")
    for ax, title in zip(axes, (r"$\lambda_{\min}$ at spurious point",
                                r"$\lambda_{\max}$ at spurious point")):
        ax.set_xlabel(r"penalty weight $\lambda$")
        ax.set_xscale("symlog", linthresh=0.5)
        ax.set_title(title)
        ax.legend(fontsize=8)
    axes[1].set_yscale("log")
    _save(fig, path)


def plot_ratio(rows, path):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for n, grp in sorted(_by_n(rows).items()):
        ax.plot([r[1] for r in grp], [r[2] for r in grp], "o-", label=f"n={n}")
    ax.set_xlabel(r"penalty weight $\lambda$")
    ax.set_ylabel(r"$\lambda_{\max}/\lambda_{\min}$")
    ax.set_xscale("symlog", linthresh=0.5)
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_pgd_compare(curve_rows, path):
    runs = {}
    for seed, lam, it, f, d, g, p in curve_rows:
        runs.setdefault((seed, lam), []).append((it, f, d))
    lams = sorted({lam for _, lam in runs})
    colors = plt.cm.viridis(np.linspace(0.1, 0.85, len(lams)))
    cmap = dict(zip(lams, colors))
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    seen = set()
    for (seed, lam), rec in sorted(runs.items()):
        rec = np.array(rec)
        label = rf"$\lambda$={lam:g}" if lam not in seen else None
        seen.add(lam)
        axes[0].semilogy(rec[:, 0], np.maximum(rec[:, 1], 1e-18),
                         color=cmap[lam], alpha=0.6, lw=1, label=label)
        axes[1].semilogy(rec[:, 0], np.maximum(rec[:, 2], 1e-18),
                         color=cmap[lam], alpha=0.6, lw=1)
    axes[0].set_ylabel("objective")
    axes[1].set_ylabel(r"$\|XX^\top - M^*\|_F$")
    for ax in axes:
        ax.set_xlabel("iteration")
    axes[0].legend(fontsize=8)
    _save(fig, path)


def plot_landscape(grids, path):
    fig, axes = plt.subplots(1, len(grids), figsize=(3.4 * len(grids), 3.2),
                             squeeze=False)
    vmin = min(g.lambda_min.min() for _, g in grids)
    vmax = max(g.lambda_min.max() for _, g in grids)
    for ax, (lam, sweep) in zip(axes[0], grids):
        im = ax.imshow(
            sweep.lambda_min.T, origin="lower", cmap="viridis",
            vmin=vmin, vmax=vmax,
            extent=[sweep.s_values[0], sweep.s_values[-1],
                    sweep.t_values[0], sweep.t_values[-1]],
        )
        ax.set_title(rf"$\lambda$={lam:g}", fontsize=10)
        ax.set_xlabel("toward ground truth")
    axes[0][0].set_ylabel("orthogonal direction")
    fig.colorbar(im, ax=axes[0].tolist(), shrink=0.85, label=r"$\lambda_{\min}(\nabla^2 f)$")
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)


def plot_theorem_audit(rows, path):
    crit = np.array([(r[5], r[6]) for r in rows if r[4]])
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    if crit.size:
        lo = min(crit.min(), -1.0) * 1.05
        ax.plot([lo, 0], [lo, 0], "k--", lw=1, label="observed = bound")
        ax.scatter(crit[:, 0], crit[:, 1], s=14, alpha=0.7)
    ax.set_xlabel("predicted eigenvalue bound")
    ax.set_ylabel(r"observed $\lambda_{\min}$")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_rip_estimate(result, path):
    keys = [k for k in ("delta_hat", "claimed_delta", "two_sided_delta")
            if result.get(k) is not None]
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.bar(range(len(keys)), [result[k] for k in keys], color="steelblue")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, fontsize=8)
    ax.set_ylabel("isometry constant")
    _save(fig, path)
