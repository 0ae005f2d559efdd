"""Figure rendering for run reports (written next to the CSV artifacts)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _orbit_figure(sol, path: str):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 4),
                                   constrained_layout=True)
    xs = sol.xs
    ax0.plot(xs[:, 0], xs[:, xs.shape[1] // 2], lw=1.2)
    ax0.scatter([xs[0, 0]], [xs[0, xs.shape[1] // 2]], marker="o", s=25,
                zorder=3, label="t = 0")
    ax0.set_xlabel("$x_1$")
    ax0.set_ylabel(f"$x_{{{xs.shape[1] // 2 + 1}}}$")
    ax0.set_title("phase projection")
    ax0.set_aspect("equal", "datalim")
    ax0.legend(loc="best", fontsize=8)
    for j in range(xs.shape[1]):
        ax1.plot(sol.ts, xs[:, j], lw=1.0, label=f"$x_{{{j + 1}}}$")
    ax1.set_xlabel("t")
    ax1.set_title(f"components (action = {sol.action:.6g})")
    ax1.legend(loc="best", fontsize=8)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _flow_figure(label: str, table: np.ndarray, path: str):
    grid = np.linspace(0.0, 1.0, table.shape[0])
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    ax.plot(grid, table, lw=0.9)
    ax.axhline(0.0, color="k", lw=0.8, ls="--")
    ax.set_xlabel("s")
    ax.set_ylabel("eigenvalues of the form of $A - sB$")
    ax.set_title(f"spectral flow: {label}")
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _continuation_figure(orbits, path: str):
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    drew = False
    for i, sol in enumerate(orbits):
        trail = sol.continuation
        if len(trail) > 1:
            ms = [row[0] for row in trail]
            vals = [row[1] for row in trail]
            ax.plot(ms, vals, marker="o", label=f"orbit {i}")
            drew = True
    if not drew:
        ax.scatter([sol.space.m for sol in orbits],
                   [sol.action for sol in orbits])
    ax.set_xlabel("truncation m")
    ax.set_ylabel("action")
    ax.set_title("action under continuation")
    if drew:
        ax.legend(fontsize=8)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(report, out_dir) -> list:
    """Render orbit portraits, spectral flows and the continuation trail."""
    fig_dir = os.path.join(out_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    paths = []
    for i, sol in enumerate(report.orbits):
        p = os.path.join(fig_dir, f"orbit_{i:02d}.png")
        _orbit_figure(sol, p)
        paths.append(p)
    for label, table in report.flow_tables.items():
        p = os.path.join(fig_dir, f"eigflow_{label}.png")
        _flow_figure(label, table, p)
        paths.append(p)
    if report.orbits:
        p = os.path.join(fig_dir, "action_vs_m.png")
        _continuation_figure(report.orbits, p)
        paths.append(p)
    return paths
