"""Matplotlib renderings of fit reports and evaluation sweeps.

File output only (Agg backend); the CLI drops these next to the
delimited outputs so a fit or a sweep is inspectable at a glance.
"""

from __future__ import annotations

import math
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .estimator import FitResult
from .evaluation import EvalRow
from .model import Dataset

__all__ = ["render_fit_figure", "render_eval_figure"]

_METHOD_STYLE = {
    "pipeline": dict(color="C0", marker="o"),
    "naive": dict(color="C1", marker="s"),
    "kmeans": dict(color="C2", marker="^"),
    "oracle": dict(color="C7", marker="x"),
}


def render_fit_figure(ds: Dataset, result: FitResult, path) -> None:
    """Scatter the measurements by stroke mode and draw both fitted lines."""
    labels = result.labels
    if labels is None:
        labels = np.zeros(len(ds), dtype=np.int64)
    down = labels == 0
    up = labels == 1

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.scatter(ds.openings[down], ds.flows[down], s=14, color="C0",
               alpha=0.7, label="down-stroke")
    if up.any():
        ax.scatter(ds.openings[up], ds.flows[up], s=14, color="C3",
                   alpha=0.7, label="up-stroke")
    grid = np.linspace(float(ds.openings.min()), float(ds.openings.max()), 50)
    alpha, beta = result.params.alpha, result.params.beta
    ax.plot(grid, alpha * grid, "k--", lw=1.2, label="down line (through origin)")
    if up.any():
        ax.plot(grid, alpha * grid + beta, "k-", lw=1.2, label="up line (offset)")
    ax.set_xlabel("opening (fraction)")
    ax.set_ylabel("flow")
    ax.set_title(f"alpha={alpha:.6g}  beta={beta:.6g}  "
                 f"width={result.params.hysteresis_width:.6g}")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_eval_figure(rows: List[EvalRow], path) -> None:
    """Misclassification and gain error versus SNR, one curve per method."""
    methods = []
    for row in rows:
        if row.method not in methods:
            methods.append(row.method)
    finite = [r.snr_db for r in rows if math.isfinite(r.snr_db)]
    # place the noiseless point one grid step beyond the largest finite SNR
    inf_pos = (max(finite) + 10.0) if finite else 0.0

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 7.2), sharex=True)
    for method in methods:
        cells = [r for r in rows if r.method == method]
        xs = [r.snr_db if math.isfinite(r.snr_db) else inf_pos for r in cells]
        order = np.argsort(xs)
        xs = np.asarray(xs)[order]
        style = _METHOD_STYLE.get(method, dict(marker="."))
        ax1.plot(xs, np.asarray([c.misclassification_mean for c in cells])[order],
                 label=method, **style)
        ax2.plot(xs, np.asarray([c.alpha_rel_err_mean for c in cells])[order],
                 label=method, **style)
    ax1.set_ylabel("mean misclassification ratio")
    ax2.set_ylabel("mean relative gain error")
    ax2.set_xlabel("SNR (dB)")
    for ax in (ax1, ax2):
        ax.set_yscale("symlog", linthresh=1e-6)
        ax.grid(alpha=0.3)
        ax.legend(loc="best", fontsize=8)
    if any(not math.isfinite(r.snr_db) for r in rows):
        ticks = sorted(set(finite)) + [inf_pos]
        ax2.set_xticks(ticks)
        ax2.set_xticklabels([f"{t:g}" for t in ticks[:-1]] + ["inf"])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
