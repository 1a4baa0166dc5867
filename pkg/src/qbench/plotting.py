"""Matplotlib figures for sweep and training reports (headless, file output only)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (np.sqrt(5) - 1.0) / 2.0
FIG_WIDTH = 5.0
COLORS = ["#08589e", "#d95f02", "#1b9e77", "#7570b3", "#e7298a"]

STYLE = {
    "axes.prop_cycle": matplotlib.cycler(color=COLORS),
    "axes.labelsize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "figure.figsize": (FIG_WIDTH, FIG_WIDTH * GOLDEN),
    "figure.dpi": 120,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "savefig.bbox": "tight",
    "svg.hashsalt": "qbench",  # stable element ids
}


def _save(fig, path: Path, formats=("png", "svg")) -> list[Path]:
    written = []
    for ext in formats:
        p = path.with_suffix("." + ext)
        meta = {"Date": None} if ext == "svg" else {"Software": None}
        fig.savefig(p, metadata=meta)
        written.append(p)
    plt.close(fig)
    return written


def fidelity_vs_width(series: dict[str, dict], path: Path, title: str = "", metric: str = "polarization") -> list[Path]:
    """``series``: label -> {"width": [...], "mean": [...], "err": [...]} with bootstrap error bars."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, s in series.items():
            ax.errorbar(s["width"], s["mean"], yerr=s["err"], marker="o", capsize=3, label=label)
        ax.set_xlabel("circuit width (qubits)")
        ax.set_ylabel(f"{metric} fidelity")
        ax.set_ylim(-0.02, 1.02)
        if series:
            widths = sorted({w for s in series.values() for w in s["width"]})
            ax.set_xticks(widths)
            ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, path)


def volumetric(points: Sequence[tuple[int, float, float]], path: Path, title: str = "") -> list[Path]:
    """Width x depth grid of squares shaded by fidelity."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if points:
            w, d, f = (np.array(x, dtype=float) for x in zip(*points))
            sc = ax.scatter(d, w, c=f, cmap="RdYlGn", vmin=0, vmax=1, marker="s", s=120, edgecolors="k")
            fig.colorbar(sc, ax=ax, label="fidelity")
            ax.set_xscale("log")
        ax.set_xlabel("normalized depth")
        ax.set_ylabel("circuit width (qubits)")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def qrl_steps(steps: Sequence[dict], path: Path, title: str = "") -> list[Path]:
    """Per-step circuit evaluations, explore/exploit flag and cumulative environment steps."""
    with plt.rc_context({**STYLE, "figure.figsize": (FIG_WIDTH, FIG_WIDTH * 1.1)}):
        fig, axes = plt.subplots(3, 1, sharex=True)
        x = [s["step"] for s in steps]
        axes[0].bar(x, [s["circuit_evaluations"] for s in steps], width=1.0, color=COLORS[0])
        axes[0].set_ylabel("circuit evals")
        axes[0].set_yscale("symlog")
        axes[1].step(x, [0 if s["explore"] else 1 for s in steps], where="mid", color=COLORS[1])
        axes[1].set_yticks([0, 1], ["explore", "exploit"])
        axes[2].plot(x, [s["environment_evaluations"] for s in steps], color=COLORS[2])
        axes[2].set_ylabel("env evals (cum.)")
        axes[2].set_xlabel("step")
        if title:
            axes[0].set_title(title)
        return _save(fig, path)
