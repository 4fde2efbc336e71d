"""Matplotlib renderings written next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import ScalarField
from .solver import TIMER_CATEGORIES


def plot_body_velocity(times, v_y, plateau, target, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(times, v_y, lw=1.2, label="body $v_y$")
    ax.axhline(target, color="k", ls="--", lw=0.8, label=f"reference {target}")
    ax.axhline(plateau, color="C1", ls=":", lw=0.8, label=f"plateau {plateau:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("$v_y$")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_vorticity_isovalues(omega: ScalarField, path: str, n_levels: int = 15) -> None:
    spec = omega.spec
    x = spec.axis_coords(0)
    y = spec.axis_coords(1)
    peak = np.abs(omega.data).max()
    levels = np.linspace(-peak, peak, n_levels) if peak > 0 else [0.0]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.contour(x, y, omega.data.T, levels=levels, cmap="RdBu_r", linewidths=0.7)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_timing(report: dict[str, float], path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    keys = TIMER_CATEGORIES
    ax.bar(range(len(keys)), [report[k] for k in keys], color="C0")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=40, ha="right", fontsize=8)
    ax.set_ylabel("% of stage time")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
