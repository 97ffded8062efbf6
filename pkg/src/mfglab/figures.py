"""Matplotlib rendering of command outputs to image files.

Each renderer takes the same data the CSV/JSON writers receive and saves a
PNG next to the delimited output.  Rendering is strictly opt-in from the
CLI; the library never imports pyplot at module import time of the solver
modules, and the Agg backend keeps everything headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 150, "bbox_inches": "tight", "metadata": {"Software": "mfglab"}}


def render_selection(rows, eps_list, path, switch=None) -> None:
    """Velocity comparison across the sweep: Hopf-Lax, Godunov, viscous."""
    xs = np.array([r.x for r in rows])
    fig, ax = plt.subplots(figsize=(7, 4))
    hl = np.array([r.hl_grad if r.hl_grad is not None else np.nan for r in rows])
    ax.plot(xs, hl, "k-", lw=2, label="value gradient")
    ax.plot(xs, [r.godunov_u for r in rows], "C0--", lw=1.5, label="godunov")
    for eps in eps_list:
        ax.plot(xs, [r.viscous_u[float(eps)] for r in rows], lw=1,
                alpha=0.8, label=f"viscous eps={eps}")
    ax.plot(xs, [r.selected_velocity for r in rows], "C3:", lw=1.5,
            label="selected equilibrium")
    if switch is not None:
        ax.axvline(switch, color="gray", ls=":", label=f"switch x={switch:.4g}")
    ax.set_xlabel("x")
    ax.set_ylabel("velocity")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_burgers(fields: dict, shocks: dict, path) -> None:
    """Profiles u(t, x) per scheme with detected shock positions."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, fld in fields.items():
        ax.plot(fld.grid.centers, fld.values, lw=1.2, label=name)
    for positions in shocks.values():
        for p in positions:
            ax.axvline(p, color="gray", ls=":", alpha=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_enumeration(spec, enum, lo, hi, path) -> None:
    """Reduced potential over the scan window with the roots marked."""
    from .reduced_game import reduced_potential

    ys = np.linspace(lo, hi, 600)
    pot = [reduced_potential(spec, [[y]]) for y in ys]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(ys, pot, "C0-", lw=1.5, label="potential")
    for root, val in zip(enum.roots, enum.potentials):
        ax.plot([root], [val], "C3o", ms=6)
    if enum.roots.size:
        sel = enum.selected_index()
        ax.plot([enum.roots[sel]], [enum.potentials[sel]], "k*", ms=12,
                label="selected")
    ax.set_xlabel("terminal point y")
    ax.set_ylabel("potential")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_solve(spec, result, path) -> None:
    """Initial vs terminal points (first two coordinates)."""
    x = spec.initial.points
    y = np.atleast_2d(result.terminal)
    fig, ax = plt.subplots(figsize=(5, 5))
    if x.shape[1] == 1:
        ax.plot(x[:, 0], np.zeros(len(x)), "C0o", label="initial")
        ax.plot(y[:, 0], np.zeros(len(y)), "C3x", ms=8, label="terminal")
        for a, b in zip(x[:, 0], y[:, 0]):
            ax.annotate("", xy=(b, 0), xytext=(a, 0),
                        arrowprops={"arrowstyle": "->", "alpha": 0.5})
        ax.set_yticks([])
    else:
        ax.plot(x[:, 0], x[:, 1], "C0o", label="initial")
        ax.plot(y[:, 0], y[:, 1], "C3x", ms=8, label="terminal")
        for a, b in zip(x, y):
            ax.annotate("", xy=(b[0], b[1]), xytext=(a[0], a[1]),
                        arrowprops={"arrowstyle": "->", "alpha": 0.5})
        ax.set_ylabel("x_2")
    ax.set_xlabel("x_1")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
