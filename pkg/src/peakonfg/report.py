"""Optional figure rendering for CLI runs.

Figures are rendered to PNG files next to the delimited output when the CLI
is invoked with --plot.  The Agg backend is forced so runs never require a
display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fields import helmholtz_invert


def plot_trajectory(traj, path) -> None:
    """Peak positions (top) and amplitudes (bottom) against time."""
    ts = np.asarray(traj.ts, dtype=float)
    alphas = np.array([s.alphas for s in traj.states])
    betas = np.array([s.betas for s in traj.states])
    n = alphas.shape[1]
    fig, (ax_b, ax_a) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    for i in range(n):
        ax_b.plot(ts, betas[:, i], label=f"beta_{i + 1}")
        ax_a.plot(ts, alphas[:, i], label=f"alpha_{i + 1}")
    for ev in traj.events:
        ax_b.axvline(ev.time, color="k", alpha=0.25, linestyle="--")
    ax_b.set_ylabel("position")
    ax_a.set_ylabel("amplitude")
    ax_a.set_xlabel("t")
    ax_b.legend(loc="best", fontsize="small")
    ax_b.set_title(f"termination: {traj.reason}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(rows, path) -> None:
    """Speed-amplitude relation from a single-peakon sweep."""
    a = np.array([r[0] for r in rows])
    c = np.array([r[2] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(a, c, "o-")
    ax.set_xlabel("amplitude a")
    ax.set_ylabel("speed c")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_field(states, path) -> None:
    """u profiles at the sampled times (earliest light, latest dark)."""
    fig, ax = plt.subplots(figsize=(7, 4))
    k_list = np.linspace(0, len(states) - 1, min(len(states), 8)).astype(int)
    for j, k in enumerate(k_list):
        fs = states[k]
        u, _, _ = helmholtz_invert(fs)
        ax.plot(fs.x, u, color=plt.cm.viridis(j / max(len(k_list) - 1, 1)),
                label=f"t={fs.t:.2f}")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_indicator(ts, values, path) -> None:
    """Blow-up indicator time series."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.asarray(ts), np.asarray(values))
    ax.set_xlabel("t")
    ax.set_ylabel("inf(alpha A + beta B)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
