"""Figure rendering for evaluation reports.

Each report CSV has a matching PNG: prediction traces, the cross-condition
correlation matrix, the training-size ablation curve, and the per-coefficient
correlation profile. Rendering is headless (Agg) and timestamp-free so
repeated runs produce stable files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import AblationPoint, CoefficientCorrelations, CrossMatrix

_SAVE_KWARGS = dict(dpi=150, metadata={"Software": None})


def plot_trace(times: np.ndarray, gold: np.ndarray, pred: np.ndarray,
               out_path: str | Path, title: str = "") -> None:
    """Gold vs predicted semitone trajectory for one utterance."""
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(times, gold, label="gold", color="0.2", linewidth=1.5)
    ax.plot(times, pred, label="pred", color="tab:orange", linewidth=1.0)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("semitones")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(out_path, **_SAVE_KWARGS)
    plt.close(fig)


def plot_matrix(matrix: CrossMatrix, out_path: str | Path) -> None:
    """Heatmap of mean correlation per train/test cell.

    Cells that fail the per-run significance requirement are marked with a
    triangle, matching the convention used in the matrix CSV.
    """
    n = len(matrix.conditions)
    fig, ax = plt.subplots(figsize=(1.0 * n + 2.5, 1.0 * n + 2))
    image = ax.imshow(matrix.mean_r, vmin=-1.0, vmax=1.0, cmap="viridis")
    for i in range(n):
        for j in range(n):
            label = f"{matrix.mean_r[i, j]:.2f}"
            if not matrix.significant[i, j]:
                label += "\n△"
            ax.text(j, i, label, ha="center", va="center",
                    color="white" if matrix.mean_r[i, j] < 0.5 else "black",
                    fontsize=8)
    ax.set_xticks(range(n), matrix.conditions, rotation=45, ha="right")
    ax.set_yticks(range(n), matrix.conditions)
    ax.set_xlabel("test condition")
    ax.set_ylabel("train condition")
    fig.colorbar(image, ax=ax, label="mean Pearson r", fraction=0.046)
    fig.tight_layout()
    fig.savefig(out_path, **_SAVE_KWARGS)
    plt.close(fig)


def plot_ablation(points: list[AblationPoint], out_path: str | Path) -> None:
    """RMSE and correlation as the training set shrinks."""
    fractions = [p.fraction for p in points]
    fig, ax_err = plt.subplots(figsize=(6, 3.5))
    ax_err.plot(fractions, [p.rmse for p in points], "o-", color="tab:blue")
    ax_err.set_xlabel("fraction of training data")
    ax_err.set_ylabel("RMSE (semitones)", color="tab:blue")
    ax_err.tick_params(axis="y", labelcolor="tab:blue")

    ax_r = ax_err.twinx()
    ax_r.plot(fractions, [p.pearson_r for p in points], "s--", color="tab:red")
    ax_r.set_ylabel("Pearson r", color="tab:red")
    ax_r.tick_params(axis="y", labelcolor="tab:red")
    ax_r.set_ylim(0.0, 1.05)
    fig.tight_layout()
    fig.savefig(out_path, **_SAVE_KWARGS)
    plt.close(fig)


def plot_coefficient_correlations(result: CoefficientCorrelations,
                                  out_path: str | Path) -> None:
    """Bar profile of per-coefficient correlation with the semitone target."""
    n = result.r.size
    fig, ax = plt.subplots(figsize=(7, 3))
    values = np.where(result.constant, 0.0, result.r)
    ax.bar(np.arange(n), values, color="tab:blue", width=0.8)
    ax.axhline(0.0, color="0.4", linewidth=0.8)
    ax.set_xlabel("cepstral coefficient")
    ax.set_ylabel("Pearson r")
    ax.set_xlim(-0.5, n - 0.5)
    ax.set_ylim(-1.0, 1.0)
    fig.tight_layout()
    fig.savefig(out_path, **_SAVE_KWARGS)
    plt.close(fig)
