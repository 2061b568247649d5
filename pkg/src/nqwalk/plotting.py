"""Matplotlib renderings of the command outputs.

Every figure function returns a Figure; `save_figure` writes it next to
the numeric output (SVG by default, static markup, no scripting).  The
CSV files remain the source of truth, figures are a convenience view.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg", force=False)
matplotlib.rcParams["svg.hashsalt"] = "nqwalk"

import matplotlib.pyplot as plt
import numpy as np

from .bloch import BlochResult, ProbeSample
from .evolution import Trajectory
from .spectral import AsymptoticDistribution, SpectralData

__all__ = [
    "trajectory_figure",
    "dispersion_figure",
    "asymptotic_figure",
    "bloch_figure",
    "probe_figure",
    "save_figure",
]


def save_figure(fig, path) -> None:
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def _crop(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Drop empty margins so heatmaps show the populated window."""
    occupied = traj.distributions.max(axis=0) > 1e-12
    idx = np.nonzero(occupied)[0]
    lo, hi = int(idx[0]), int(idx[-1]) + 1
    return traj.grid.sites[lo:hi], traj.distributions[:, lo:hi]


def trajectory_figure(traj: Trajectory) -> plt.Figure:
    """Greyscale density of P_t(x) over position and step number."""
    sites, rows = _crop(traj)
    fig, ax = plt.subplots(figsize=(7, 4.2))
    mesh = ax.pcolormesh(sites, traj.times, rows, cmap="Greys", rasterized=True)
    fig.colorbar(mesh, ax=ax, label="P")
    ax.set_xlabel("position x")
    ax.set_ylabel("step t")
    fig.tight_layout()
    return fig


def dispersion_figure(spec: SpectralData) -> plt.Figure:
    p = spec.grid.momenta
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.5, 5.5), sharex=True)
    for k in (0, 1):
        ax1.plot(p, np.mod(spec.omega[k] + np.pi, 2 * np.pi) - np.pi, lw=1.2)
        if spec.velocity is not None:
            ax2.plot(p, spec.velocity[k], lw=1.2)
    ax1.set_ylabel(r"$\omega_k(p)$")
    ax2.set_ylabel(r"$v_k(p)$")
    ax2.set_xlabel("p")
    ax2.set_ylim(-1.05, 1.05)
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def asymptotic_figure(dist: AsymptoticDistribution) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6.5, 4))
    width = dist.edges[1] - dist.edges[0]
    ax.bar(dist.centers, dist.masses / width, width=width, color="0.3")
    ax.set_xlabel("q = x/t")
    ax.set_ylabel("probability density")
    ax.set_xlim(-1, 1)
    fig.tight_layout()
    return fig


def bloch_figure(result: BlochResult) -> plt.Figure:
    traj = result.trajectory
    sites, rows = _crop(traj)
    fig, (ax1, ax2) = plt.subplots(
        2, 1, figsize=(7, 6), sharex=False, height_ratios=[2.2, 1]
    )
    mesh = ax1.pcolormesh(traj.times, sites, rows.T, cmap="Greys", rasterized=True)
    fig.colorbar(mesh, ax=ax1, label="P")
    for which in (0, -1):
        ax1.plot(traj.times, result.peak_track.positions(which), lw=0.8, color="tab:red")
    ax1.set_xlabel("step t")
    ax1.set_ylabel("position x")

    ax2.plot(traj.times, result.occupation, lw=1.2, color="0.2")
    ax2.set_xlabel("step t")
    ax2.set_ylabel(r"$\langle N \rangle$")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def probe_figure(samples: list[ProbeSample]) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6.5, 4))
    for s in samples:
        ax.plot([s.theta] * len(s.predicted), s.predicted, "o", ms=7, mfc="none", color="0.4")
        ax.plot([s.theta] * len(s.measured), s.measured, "x", ms=6, color="tab:red")
    ax.plot([], [], "o", mfc="none", color="0.4", label="spectral prediction")
    ax.plot([], [], "x", color="tab:red", label="measured")
    ax.set_xlabel(r"$\Theta$")
    ax.set_ylabel("peak velocity")
    ax.set_ylim(-1.05, 1.05)
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig
