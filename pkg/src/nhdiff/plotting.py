"""Figure rendering for the experiment runner.

Every report path writes matplotlib figures next to its CSV output.  The
CSVs stay the authoritative artifacts; these are quick-look renderings.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 130


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_scatter_figure(points, contours, tau, path):
    """Eigenvalue scatter with the large-N boundary overlaid."""
    fig, ax = plt.subplots(figsize=(5, 5))
    if len(points):
        ax.plot(points[:, 0], points[:, 1], ".", ms=1.5, alpha=0.6, color="#1f77b4")
    for c in contours:
        ax.plot(c[:, 0], c[:, 1], "k-", lw=1.2)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(f"eigenvalues, tau = {tau:g}")
    ax.set_aspect("equal")
    _finish(fig, path)


def save_field_figure(field, tau, path, contours=()):
    """Side-by-side density and overlap heatmaps."""
    g = field.grid
    extent = [g.x_min, g.x_max, g.y_min, g.y_max]
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, data, label in (
        (axes[0], field.rho, "density"),
        (axes[1], field.overlap, "overlap"),
    ):
        im = ax.imshow(
            data.T, origin="lower", extent=extent, aspect="equal", cmap="viridis"
        )
        for c in contours:
            ax.plot(c[:, 0], c[:, 1], "w-", lw=0.8)
        ax.set_xlabel("Re z")
        ax.set_ylabel("Im z")
        ax.set_title(f"{label}, tau = {tau:g}")
        fig.colorbar(im, ax=ax, shrink=0.85)
    _finish(fig, path)


def save_largen_figure(xs, ys, rho, overlap, contours, tau, path):
    """Large-N density/overlap heatmaps with the support boundary."""
    extent = [xs[0], xs[-1], ys[0], ys[-1]]
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, data, label in ((axes[0], rho, "density"), (axes[1], overlap, "overlap")):
        im = ax.imshow(
            data.T, origin="lower", extent=extent, aspect="equal", cmap="magma"
        )
        for c in contours:
            ax.plot(c[:, 0], c[:, 1], "c-", lw=0.9)
        ax.set_xlabel("Re z")
        ax.set_ylabel("Im z")
        ax.set_title(f"large-N {label}, tau = {tau:g}")
        fig.colorbar(im, ax=ax, shrink=0.85)
    _finish(fig, path)


def save_scan_figure(param_name, params, log_d, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(params, log_d, "-", color="#d62728")
    ax.set_xlabel(param_name)
    ax.set_ylabel("log D")
    ax.set_title("characteristic-polynomial scan")
    _finish(fig, path)


def save_profile_figure(family, coords, values, path, log_scale=False):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(coords, values, "-", color="#2ca02c")
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("scaling coordinate")
    ax.set_ylabel("profile")
    ax.set_title(f"{family} finite-size profile")
    _finish(fig, path)


def save_kernel_figure(radii, diag, tau, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(radii, diag, "-", color="#9467bd")
    ax.axhline(1.0 / (np.pi * tau), color="k", ls="--", lw=0.8, label="1/(pi tau)")
    ax.set_xlabel("|z|")
    ax.set_ylabel("K(z, z)")
    ax.legend()
    ax.set_title("kernel diagonal")
    _finish(fig, path)


def save_compare_figure(family, coords, series, path):
    """series: list of (label, values) along the section coordinate."""
    fig, ax = plt.subplots(figsize=(6.5, 4))
    for label, vals in series:
        style = "-" if "closed" in label else ("--" if "solver" in label else ".")
        ax.plot(coords, vals, style, label=label, ms=4)
    ax.set_xlabel("section coordinate")
    ax.set_ylabel("value")
    ax.legend(fontsize=8)
    ax.set_title(f"{family}: analytic vs solver vs MC")
    _finish(fig, path)
