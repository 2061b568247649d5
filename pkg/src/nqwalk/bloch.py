"""Experiment drivers: Bloch-oscillation runs, peak tracking, dispersion
probing by momentum-shift sweeps, occupation-number readout, and Husimi
phase-space rendering.

A linearly advancing momentum shift (angle t * dtheta at step t) drags the
walker through its band structure, so a wave packet prepared at zero
momentum samples the group velocity periodically and its position peaks
oscillate, the lattice analog of Bloch oscillations in a biased crystal.
Freezing the accumulated shift at a zero of the group velocity parks the
peaks in place.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import CoinOp, LatticeGrid, Spinor, coin_hadamard
from .errors import BasisMismatchError, BoundaryOverflowError, NoPeaksError, SigmaZeroError
from .evolution import TAIL_LIMIT, ShiftSchedule, Trajectory, evolve
from .overlap import GramOperator, OverlapModel, gram_operator, initial_state
from .spectral import (
    asymptotic_distribution,
    eigensystem,
    group_velocity,
    point_velocities,
    walk_symbol,
)
from .state import BasisTag, Representation, WalkState, _to_position

__all__ = [
    "BlochConfig",
    "BlochResult",
    "BlochSummary",
    "PeakTrack",
    "PhaseSpaceMap",
    "Peak",
    "ProbeSample",
    "bloch_schedule",
    "run_bloch",
    "summarize_bloch",
    "track_peaks",
    "occupation_expectation",
    "probe_dispersion",
    "husimi_grid",
    "thread_count",
]

TWO_PI = 2.0 * math.pi


def thread_count() -> int:
    """Worker cap from NQWALK_THREADS (0 or unset means auto)."""
    raw = os.environ.get("NQWALK_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 0:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


class Peak(NamedTuple):
    position: float
    mass: float


class ProbeSample(NamedTuple):
    theta: float
    measured: tuple[float, ...]  # fitted peak velocities, ascending
    predicted: tuple[float, ...]  # spectral peak-velocity prediction (pushforward modes)
    branch: tuple[float, float]  # exact branch velocities of the shifted walk at p = 0
    error: float  # worst |measured - nearest predicted|


@dataclass(frozen=True)
class BlochConfig:
    """Parameters of a Bloch-oscillation run.

    The drive applies the momentum shift (t - t_on + 1) * delta_theta
    (modulo 2*pi) at each step t in [t_on, t_off); afterwards the
    accumulated shift is frozen at its last driven value (`freeze=True`,
    which keeps peaks parked when the drive stops at a group-velocity
    zero) or reset to 0 (`freeze=False`).
    """

    delta_theta: float
    t_on: int
    t_off: int
    steps: int
    sigma: float = 14.0
    coin: CoinOp | None = None
    coin_state: Spinor = field(default_factory=Spinor.up)
    freeze: bool = True
    grid_size: int | None = None
    peak_min_mass: float = 0.05
    peak_window: int = 5

    def __post_init__(self):
        if not (0 <= self.t_on <= self.t_off <= self.steps):
            raise ValueError(
                f"need 0 <= t_on <= t_off <= steps, got {self.t_on}, {self.t_off}, {self.steps}"
            )
        if not math.isfinite(self.delta_theta):
            raise ValueError("delta_theta must be finite")


@dataclass(frozen=True)
class PeakTrack:
    """Detected peaks per recorded step."""

    times: list[int]
    peaks: list[list[Peak]]

    def positions(self, which: int) -> np.ndarray:
        """Time series of the leftmost (0) or rightmost (-1) peak position."""
        return np.array(
            [pk[which].position if pk else np.nan for pk in self.peaks]
        )

    def follow(self, start_index: int, which: int) -> np.ndarray:
        """Track one peak by continuity from `start_index` onward: at every
        later step pick the detected peak nearest the previous position.
        Robust against transient extra detections."""
        out = np.full(len(self.peaks) - start_index, np.nan)
        prev = self.peaks[start_index][which].position if self.peaks[start_index] else np.nan
        for i, pks in enumerate(self.peaks[start_index:]):
            if pks and np.isfinite(prev):
                prev = min((pk.position for pk in pks), key=lambda x: abs(x - prev))
            elif pks:
                prev = pks[which].position
            out[i] = prev
        return out


@dataclass(frozen=True)
class BlochResult:
    trajectory: Trajectory
    peak_track: PeakTrack
    occupation: np.ndarray  # <N> per recorded step


@dataclass(frozen=True)
class BlochSummary:
    period: float
    amplitude: float
    drift: float
    n_min: float
    n_max: float


@dataclass(frozen=True)
class PhaseSpaceMap:
    """Placement of the position states along a line in phase space:
    alpha_x = origin_offset + x * sqrt(2)/sigma (real)."""

    sigma: float
    origin_offset: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise SigmaZeroError("phase-space map needs sigma > 0")

    def alpha_of(self, x) -> np.ndarray:
        return self.origin_offset + np.asarray(x, dtype=float) * math.sqrt(2.0) / self.sigma


def bloch_schedule(cfg: BlochConfig) -> ShiftSchedule:
    """Momentum-shift angle for every step of a Bloch run."""
    entries: dict[int, float] = {}
    frozen = ((cfg.t_off - cfg.t_on) * cfg.delta_theta) % TWO_PI if cfg.freeze else 0.0
    for t in range(1, cfg.steps + 1):
        if t < cfg.t_on:
            entries[t] = 0.0
        elif t < cfg.t_off:
            entries[t] = ((t - cfg.t_on + 1) * cfg.delta_theta) % TWO_PI
        else:
            entries[t] = frozen
    return ShiftSchedule(entries=entries)


def track_peaks(
    distribution: np.ndarray,
    min_mass: float = 0.05,
    window: int = 5,
    sites: np.ndarray | None = None,
) -> list[Peak]:
    """Locate probability peaks with sub-site precision.

    The distribution is smoothed by a centered moving average of width
    `window`; local maxima of the smoothed curve seed candidate peaks,
    which are refined by the centroid of the raw distribution over
    +-window sites and keep the raw mass of that window.  Candidates
    closer than a window to an already-claimed (larger) peak are merged
    into it; peaks below `min_mass` are dropped.
    """
    p = np.asarray(distribution, dtype=float)
    m = p.size
    if sites is None:
        sites = np.arange(m) - m // 2
    kernel = np.ones(window)
    # edge-normalized moving average, so a flat distribution stays flat
    s = np.convolve(p, kernel, mode="same") / np.convolve(np.ones(m), kernel, mode="same")

    candidates = [
        i
        for i in range(1, m - 1)
        if s[i] > s[i - 1] and s[i] >= s[i + 1]
    ]
    candidates.sort(key=lambda i: -s[i])

    peaks: list[Peak] = []
    claimed: list[int] = []
    for i in candidates:
        if any(abs(i - j) <= window for j in claimed):
            continue
        lo, hi = max(0, i - window), min(m, i + window + 1)
        mass = float(p[lo:hi].sum())
        if mass < min_mass:
            continue
        position = float((p[lo:hi] * sites[lo:hi]).sum() / mass)
        peaks.append(Peak(position, mass))
        claimed.append(i)
    if not peaks:
        raise NoPeaksError(f"no peak above mass {min_mass}")
    return sorted(peaks, key=lambda pk: pk.position)


def occupation_expectation(
    state: WalkState, gram: GramOperator, pmap: PhaseSpaceMap
) -> float:
    """Harmonic-oscillator occupation <N> of an alpha-basis state.

    Uses the coherent-state identity <a|N|b> = conj(alpha_a) alpha_b <a|b>
    on the phase-space line: with coefficients c and overlaps g,
    <N> = sum conj(c_x) c_y alpha_x alpha_y g(y-x) / sum conj(c_x) c_y g(y-x),
    both sums truncated to the overlap band.
    """
    if state.basis is not BasisTag.ALPHA:
        raise BasisMismatchError("occupation_expectation expects alpha-basis coefficients")
    model = gram.model
    if model.sigma == 0.0:
        raise SigmaZeroError("occupation number undefined in the orthogonal limit")
    c = state.to_position().amplitudes
    alpha = pmap.alpha_of(state.grid.sites)
    u = alpha[:, None] * c
    band = min(model.band, state.grid.size - 1)

    num = model.g(0)[0] * float(np.sum(u.conj() * u).real)
    den = model.g(0)[0] * float(np.sum(c.conj() * c).real)
    for k in range(1, band + 1):
        gk = float(model.g(k)[0])
        if gk == 0.0:
            break
        num += 2.0 * gk * float(np.sum(u[:-k].conj() * u[k:]).real)
        den += 2.0 * gk * float(np.sum(c[:-k].conj() * c[k:]).real)
    return num / den


def run_bloch(cfg: BlochConfig) -> BlochResult:
    """Evolve the Bloch scenario, tracking peaks and <N> every step.

    The walk is carried in alpha-basis coefficients (which evolve exactly
    like orthonormal ones); the recorded position distribution applies the
    Gram symbol in momentum space, and <N> is evaluated directly on the
    coefficients, so no inverse Gram powers are ever needed.
    """
    coin = cfg.coin if cfg.coin is not None else coin_hadamard()
    grid = (
        LatticeGrid(cfg.grid_size)
        if cfg.grid_size
        else LatticeGrid.for_walk(cfg.steps, cfg.sigma)
    )
    model = OverlapModel(cfg.sigma)
    gram = gram_operator(model, grid)
    pmap = PhaseSpaceMap(cfg.sigma) if cfg.sigma > 0 else None
    schedule = bloch_schedule(cfg)
    sym = gram.symbol

    state = WalkState.localized(grid, 0, cfg.coin_state, basis=BasisTag.ALPHA)
    mom = state.to_momentum()
    amps = mom.amplitudes.copy()
    phase = np.exp(1j * grid.momenta)
    coin_t = coin.matrix.T

    times = list(range(cfg.steps + 1))
    rows = np.empty((len(times), grid.size))
    all_peaks: list[list[Peak]] = []
    occupation = np.empty(len(times))

    def record(slot: int, t: int):
        weighted = _to_position(sym[:, None] * amps)
        prob = np.sum(np.abs(weighted) ** 2, axis=1)
        prob /= prob.sum()
        edge = max(1, round(grid.size * 0.05 / 2))
        tail = prob[:edge].sum() + prob[-edge:].sum()
        if tail > TAIL_LIMIT:
            raise BoundaryOverflowError(
                f"tail mass {tail:.3e} at step {t}; grid {grid.size} too small"
            )
        rows[slot] = prob
        try:
            all_peaks.append(track_peaks(prob, cfg.peak_min_mass, cfg.peak_window, grid.sites))
        except NoPeaksError:
            all_peaks.append([])
        if pmap is not None:
            coeffs = mom.with_amplitudes(_to_position(amps), representation=Representation.POSITION)
            occupation[slot] = occupation_expectation(coeffs, gram, pmap)
        else:
            occupation[slot] = np.nan

    record(0, 0)
    for t in range(1, cfg.steps + 1):
        amps = amps @ coin_t
        ph = phase * np.exp(1j * schedule.value(t))
        amps[:, 0] *= ph
        amps[:, 1] *= ph.conj()
        record(t, t)

    meta = {
        "steps": cfg.steps,
        "sigma": cfg.sigma,
        "delta_theta": cfg.delta_theta,
        "t_on": cfg.t_on,
        "t_off": cfg.t_off,
        "freeze": cfg.freeze,
        "grid_size": grid.size,
    }
    traj = Trajectory(grid, times, rows, meta=meta, observables={"occupation": occupation})
    return BlochResult(traj, PeakTrack(times, all_peaks), occupation)


def _dominant_period(series: np.ndarray) -> float:
    """Lag of the first dominant autocorrelation peak, after removing a
    linear trend (slow centroid drift would otherwise mask the cycle)."""
    if np.isnan(series).any():
        return math.nan
    n = series.size
    if n < 6:
        return math.nan
    ts = np.arange(n)
    s = series - np.polyval(np.polyfit(ts, series, 1), ts)
    if np.allclose(s, 0.0):
        return math.nan
    ac = np.correlate(s, s, mode="full")[n - 1 :]
    # search past the first zero crossing so the lag-0 envelope cannot win
    neg = np.nonzero(ac < 0.0)[0]
    lo = int(neg[0]) if neg.size else 2
    hi = n - 2
    if hi <= lo:
        return math.nan
    return float(np.argmax(ac[lo:hi]) + lo)


def summarize_bloch(result: BlochResult, cfg: BlochConfig) -> BlochSummary:
    """Oscillation period/amplitude inside the drive window, post-drive
    drift (sites/step) and the <N> extrema during the drive."""
    track = result.peak_track
    followed = track.follow(cfg.t_on, -1)
    s = followed[: cfg.t_off - cfg.t_on + 1]
    period = _dominant_period(s)
    amplitude = float(np.nanmax(s) - np.nanmin(s))

    after = followed[cfg.t_off - cfg.t_on + 2 :]
    if after.size >= 2 and not np.isnan(after).any():
        ts = np.arange(after.size)
        drift = float(np.polyfit(ts, after, 1)[0])
    else:
        drift = math.nan

    occ = result.occupation[cfg.t_on : cfg.t_off + 1]
    return BlochSummary(
        period=period,
        amplitude=amplitude,
        drift=drift,
        n_min=float(np.nanmin(occ)),
        n_max=float(np.nanmax(occ)),
    )


def _predicted_peak_velocities(
    coin: CoinOp,
    model: OverlapModel,
    theta: float,
    steps: int,
    window: int,
    bins: int = 401,
    spectral_size: int = 4096,
) -> tuple[float, ...]:
    """Modes of the overlap-weighted velocity pushforward of the shifted walk.

    This is the spectral prediction of where the position peaks travel: at
    finite overlap width the peak sits at the mode of the weighted velocity
    distribution, not exactly at the branch velocity.  The mode search uses
    the same window in q-units as the position fit uses in sites.
    """
    spec = group_velocity(eigensystem(walk_symbol(coin, LatticeGrid(spectral_size), theta)))
    hist = asymptotic_distribution(spec, model, Spinor.up(), bins=bins)
    window_bins = max(3, round(window * bins / (2.0 * steps)))
    modes = track_peaks(hist.masses, min_mass=0.02, window=window_bins, sites=hist.centers)
    return tuple(pk.position for pk in modes)


def _probe_single(
    coin: CoinOp,
    model: OverlapModel,
    theta: float,
    steps: int,
    min_mass: float,
    window: int,
) -> ProbeSample:
    grid = LatticeGrid.for_walk(steps, model.sigma)
    state = initial_state(model, grid, Spinor.up())
    traj = evolve(state, coin, steps, ShiftSchedule.constant(theta), record_every=1)

    start = int(math.ceil(0.75 * steps))
    fit_times = [t for t in traj.times if t >= start]
    per_time = []
    for t in fit_times:
        try:
            pks = track_peaks(traj.row(t), min_mass, window, grid.sites)
        except NoPeaksError:
            pks = []
        per_time.append((t, pks))

    counts = [len(p) for _, p in per_time if p]
    if not counts:
        raise NoPeaksError(f"no peaks found while probing theta={theta}")
    n = int(np.bincount(counts).argmax())
    usable = [(t, p) for t, p in per_time if len(p) == n]

    measured = []
    for k in range(n):
        ts = np.array([t for t, _ in usable], dtype=float)
        xs = np.array([p[k].position for _, p in usable])
        measured.append(float(np.polyfit(ts, xs, 1)[0]))
    measured.sort()

    predicted = _predicted_peak_velocities(coin, model, theta, steps, window)
    branch = tuple(point_velocities(coin, theta))
    error = max(min(abs(v - q) for q in predicted) for v in measured)
    return ProbeSample(theta, tuple(measured), predicted, branch, error)


def probe_dispersion(
    coin: CoinOp,
    model: OverlapModel,
    thetas,
    steps: int = 200,
    min_mass: float = 0.05,
    window: int = 15,
) -> list[ProbeSample]:
    """Measure wave-packet velocities for each momentum shift in `thetas`.

    For every theta the walk runs with a constant shift; the peak positions
    over the last quarter of the run are fitted by least squares, which is
    robust to early-time transients.  Each sample carries two reference
    values: `predicted`, the spectral peak-velocity prediction (pushforward
    modes, the quantity the fit actually estimates), and `branch`, the bare
    branch velocities of the shifted walk at the packet momentum.

    The default window is wider than the track_peaks default so that the
    spreading shoulders of a packet parked at a band extremum are not
    mistaken for separate peaks.
    """
    thetas = list(thetas)
    workers = min(thread_count(), len(thetas)) or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(
                pool.map(
                    lambda th: _probe_single(coin, model, th, steps, min_mass, window),
                    thetas,
                )
            )
    return [_probe_single(coin, model, th, steps, min_mass, window) for th in thetas]


def husimi_grid(
    subject,
    model: OverlapModel,
    pmap: PhaseSpaceMap,
    re_axis: np.ndarray,
    im_axis: np.ndarray,
) -> np.ndarray:
    """Phase-space density sampled on a rectangular grid.

    For a single position x (integer subject) this is the coherent-state
    bump exp(-|alpha - alpha_x|^2); for a WalkState it is the sum of the
    bumps weighted by the normalized site probabilities of its alpha-basis
    coefficients.  Rows of the result run along im_axis, columns along
    re_axis.
    """
    if model.sigma == 0.0:
        raise SigmaZeroError("phase space undefined in the orthogonal limit")
    re_axis = np.asarray(re_axis, dtype=float)
    im_axis = np.asarray(im_axis, dtype=float)

    if isinstance(subject, WalkState):
        weights = subject.site_probabilities()
        weights = weights / weights.sum()
        centers = pmap.alpha_of(subject.grid.sites)
        keep = weights > 1e-15
        weights, centers = weights[keep], centers[keep]
    else:
        centers = np.array([float(pmap.alpha_of(int(subject)))])
        weights = np.array([1.0])

    dre2 = (re_axis[None, :, None] - centers[None, None, :]) ** 2
    dim2 = (im_axis[:, None, None]) ** 2
    return (weights[None, None, :] * np.exp(-(dre2 + dim2))).sum(axis=2)
