"""Figure rendering for the batch-report path.

Evaluation commands write these PNGs next to their CSV/JSON output so a
report directory is self-contained: score-distribution histograms annotated
with the headline metrics, PAD score histograms with operating points, and
quality pair-feature density heatmaps.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .model import EvaluationSummary, PadSummary


def _metric_text(summary: EvaluationSummary) -> str:
    d = "n/a" if summary.d_prime is None else f"{summary.d_prime:.2f}"
    return (f"d' = {d}\nEER = {summary.eer:.1%}\nAUC = {summary.auc:.3f}\n"
            f"FTM = {summary.ftm_rate:.1%}")


def score_distribution_figure(summary: EvaluationSummary, path, title: str = "") -> Path:
    """Genuine/impostor score histograms with the summary metrics inset."""
    edges = np.asarray(summary.histogram.get("edges", np.linspace(0, 1, 101)))
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = edges[1] - edges[0]
    fig, ax = plt.subplots(figsize=(5, 3.4), dpi=120)
    ax.bar(centers, summary.histogram.get("genuine", []), width=width,
           alpha=0.6, color="#2a7fff", label=f"genuine (n={summary.n_genuine})")
    ax.bar(centers, summary.histogram.get("impostor", []), width=width,
           alpha=0.6, color="#d1495b", label=f"impostor (n={summary.n_impostor})")
    ax.set_xlabel("comparison score (dissimilarity)")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8, loc="upper right")
    ax.text(0.02, 0.97, _metric_text(summary), transform=ax.transAxes,
            va="top", ha="left", fontsize=8,
            bbox=dict(boxstyle="round", fc="white", ec="#888888", alpha=0.8))
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def pad_distribution_figure(summary: PadSummary, path, title: str = "") -> Path:
    """Bona fide vs attack score histograms with AUC and operating points."""
    edges = np.asarray(summary.histogram.get("edges", np.linspace(0, 1, 101)))
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = edges[1] - edges[0]
    fig, ax = plt.subplots(figsize=(5, 3.4), dpi=120)
    ax.bar(centers, summary.histogram.get("genuine", []), width=width,
           alpha=0.6, color="#2a7fff", label="bona fide")
    ax.bar(centers, summary.histogram.get("impostor", []), width=width,
           alpha=0.6, color="#d1495b", label="attack")
    lines = [f"AUC = {summary.auc:.3f}"]
    for level in sorted(summary.bpcer_at_apcer):
        lines.append(f"1-BPCER@{level:g} = {summary.bpcer_at_apcer[level]:.2%}")
    ax.text(0.02, 0.97, "\n".join(lines), transform=ax.transAxes, va="top",
            fontsize=8, bbox=dict(boxstyle="round", fc="white", ec="#888888", alpha=0.8))
    ax.set_xlabel("attack score")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8, loc="upper right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def quality_heatmap_figure(bins: dict, path, metric: str = "", title: str = "") -> Path:
    """Density heatmap of (average, difference) quality pair features."""
    density = np.asarray(bins["density"], dtype=np.float64)
    x_edges = np.asarray(bins["avg_edges"])
    y_edges = np.asarray(bins["diff_edges"])
    fig, ax = plt.subplots(figsize=(4.4, 3.6), dpi=120)
    mesh = ax.pcolormesh(x_edges, y_edges, density.T, cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="density")
    ax.set_xlabel(f"average {metric}".strip())
    ax.set_ylabel(f"difference {metric}".strip())
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def bootstrap_dprime_figure(values_by_group: dict, path, title: str = "") -> Path:
    """Box plot of resampled decidability values per demographic group."""
    labels = sorted(values_by_group)
    fig, ax = plt.subplots(figsize=(4.4, 3.4), dpi=120)
    ax.boxplot([values_by_group[k] for k in labels], tick_labels=labels)
    ax.set_ylabel("resampled d'")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def heatmap_to_png_bytes(heatmap: np.ndarray) -> bytes:
    """Render a similarity heatmap (values in [0, 1], NaN = absent) as a
    grayscale+alpha PNG suitable for overlaying on the polar view."""
    from PIL import Image

    values = np.asarray(heatmap, dtype=np.float64)
    alpha = np.where(np.isnan(values), 0, 255).astype(np.uint8)
    lum = np.where(np.isnan(values), 0.0, values)
    lum = np.clip(np.rint(lum * 255.0), 0, 255).astype(np.uint8)
    img = Image.fromarray(np.stack([lum, alpha], axis=-1), mode="LA")
    import io

    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
