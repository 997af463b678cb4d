"""Figure rendering for run reports: written next to the CSV outputs.

The gap-decay figure plots the contraction trace against the geometric
reference slope; schedule runs get a residual-versus-n figure with the
relaxation estimate curve; the stability figure charts observed worst ratios
per bound kind against the admissible limit of 1.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .solver import NonexpansiveReport, SolveReport

__all__ = ["render_gap_decay", "render_schedule_residuals", "render_stability"]


def render_gap_decay(path: str, report: SolveReport, lam: float | None = None) -> None:
    """Semilog plot of gap_n - d over the iterate trace."""
    e = np.asarray(report.gaps) - report.d
    n = np.arange(e.size)
    pos = e > 0
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(n[pos], e[pos], marker=".", lw=1.0, label="gap $-$ d")
    if lam is not None and e.size and e[0] > 0:
        ax.semilogy(n, e[0] * lam**n, ls="--", c="gray",
                    label=rf"$\lambda^n$ reference ($\lambda$={lam:g})")
    ax.axhline(report.tol, ls=":", c="k", lw=0.8, label="tol")
    ax.set_xlabel("iteration")
    ax.set_ylabel("gap $-$ d")
    ax.legend(loc="best", fontsize=9)
    ax.set_title("Coupled iteration gap decay")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_schedule_residuals(path: str, report: NonexpansiveReport,
                              residuals_minus_d: list[float],
                              diam: float, inner_tol: float) -> None:
    """Residual excess per schedule entry against the diam/n estimate."""
    ns = np.asarray(report.schedule, dtype=float)
    res = np.asarray(residuals_minus_d)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(ns, np.maximum(res, 1e-18), marker="o", lw=1.0, label="residual $-$ d")
    ax.loglog(ns, diam / ns + inner_tol, ls="--", c="gray", label="diam/n + inner tol")
    ax.set_xlabel("relaxation index n")
    ax.set_ylabel("residual $-$ d")
    ax.legend(loc="best", fontsize=9)
    ax.set_title("Relaxation schedule residuals")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_stability(path: str, rows: list[dict]) -> None:
    """Worst observed deviation-to-bound ratios per (kind, epsilon)."""
    if not rows:
        return
    labels = [f"{r['kind']}\n$\\epsilon$={r['epsilon']:g}" for r in rows]
    ratios = [r["max_ratio"] for r in rows]
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(rows)), 4.0))
    bars = ax.bar(range(len(rows)), ratios, color="#4878a8")
    for bar, r in zip(bars, rows):
        color = "#b04030" if r["violations"] else "#4878a8"
        bar.set_color(color)
    ax.axhline(1.0, ls="--", c="k", lw=0.9, label="admissible limit")
    ax.set_xticks(range(len(rows)), labels, fontsize=8)
    ax.set_ylabel("max deviation / bound")
    ax.set_title("Perturbation stability check")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
