"""Serialization of results to CSV and JSON.

CSV is the source of truth for every command; floats are written with 17
significant digits so identical configurations produce byte-identical
files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .bloch import BlochResult, ProbeSample
from .evolution import Trajectory
from .spectral import AsymptoticDistribution, SpectralData

__all__ = [
    "write_trajectory_csv",
    "write_trajectory_json",
    "write_dispersion_csv",
    "write_asymptotic_csv",
    "write_bloch_csv",
    "write_probe_csv",
    "write_husimi_csv",
]


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Rows `t,x,P` for every recorded step and site."""
    sites = traj.grid.sites
    lines = ["t,x,P"]
    for i, t in enumerate(traj.times):
        row = traj.distributions[i]
        lines.extend(f"{t},{x},{_fmt(p)}" for x, p in zip(sites, row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_trajectory_json(traj: Trajectory, path) -> None:
    payload = {
        "meta": traj.meta,
        "x": [int(x) for x in traj.grid.sites],
        "rows": [
            {"t": int(t), "P": [float(p) for p in traj.distributions[i]]}
            for i, t in enumerate(traj.times)
        ],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True))


def write_dispersion_csv(spec: SpectralData, path) -> None:
    """Rows `p,omega1,omega2,v1,v2` over the momentum grid."""
    if spec.velocity is None:
        raise ValueError("group velocities not computed")
    lines = ["p,omega1,omega2,v1,v2"]
    for j, p in enumerate(spec.grid.momenta):
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    p,
                    spec.omega[0, j],
                    spec.omega[1, j],
                    spec.velocity[0, j],
                    spec.velocity[1, j],
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_asymptotic_csv(dist: AsymptoticDistribution, path) -> None:
    """Rows `q_lo,q_hi,mass` for every histogram bin."""
    lines = ["q_lo,q_hi,mass"]
    for lo, hi, m in zip(dist.edges[:-1], dist.edges[1:], dist.masses):
        lines.append(f"{_fmt(lo)},{_fmt(hi)},{_fmt(m)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_bloch_csv(result: BlochResult, path) -> None:
    """Rows `t,peak1,peak2,N_expect`; peak1/peak2 are the leftmost and
    rightmost detected peaks (equal when only one peak is present, empty
    when none)."""
    lines = ["t,peak1,peak2,N_expect"]
    for i, t in enumerate(result.peak_track.times):
        pks = result.peak_track.peaks[i]
        if pks:
            p1, p2 = _fmt(pks[0].position), _fmt(pks[-1].position)
        else:
            p1 = p2 = ""
        n = result.occupation[i]
        lines.append(f"{t},{p1},{p2},{_fmt(n) if np.isfinite(n) else ''}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_probe_csv(samples: list[ProbeSample], path) -> None:
    """One row `theta,v_measured,v_theory,error` per measured peak, where
    v_theory is the matched spectral peak-velocity prediction."""
    lines = ["theta,v_measured,v_theory,error"]
    for s in samples:
        for v in s.measured:
            nearest = min(s.predicted, key=lambda q: abs(v - q))
            lines.append(f"{_fmt(s.theta)},{_fmt(v)},{_fmt(nearest)},{_fmt(abs(v - nearest))}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_husimi_csv(grid2d: np.ndarray, re_axis, im_axis, path) -> None:
    """Dense matrix with axis headers: first row the Re(alpha) axis, first
    column the Im(alpha) axis."""
    lines = ["im\\re," + ",".join(_fmt(v) for v in re_axis)]
    for i, im in enumerate(im_axis):
        lines.append(_fmt(im) + "," + ",".join(_fmt(v) for v in grid2d[i]))
    Path(path).write_text("\n".join(lines) + "\n")
