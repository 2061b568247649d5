"""Time evolution of the walk and extraction of position distributions.

One step is coin-then-shift: every spinor is rotated by the coin, then the
"+" component moves one site right and the "-" component one site left,
followed by an optional momentum-shift phase diag(e^{i theta}, e^{-i theta})
on the coin space.  The production backend performs the whole step in
momentum space (a 2x2 multiply per node); a position-side path is kept as a
cross-check.  Both are exact on the periodic lattice.

Two measurement formulas are supported: `position_distribution` reads off
|psi_x|^2 of an orthonormal-basis state, while `nonorthogonal_distribution`
evaluates the overlap-weighted projector statistics of alpha-basis
coefficients against the dense Gram matrix (reference backend).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CoinOp, LatticeGrid, momentum_shift
from .errors import BasisMismatchError, BoundaryOverflowError
from .overlap import GramOperator
from .state import BasisTag, Representation, WalkState

__all__ = [
    "ShiftSchedule",
    "Trajectory",
    "step",
    "evolve",
    "evolve_coin_mixture",
    "position_distribution",
    "nonorthogonal_distribution",
    "nonorthogonal_norm",
]

TAIL_LIMIT = 1e-9
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ShiftSchedule:
    """Per-step momentum-shift angles theta_t (1-based step index).

    Missing steps fall back to `default`.  All angles are stored modulo
    2*pi, which leaves the applied phases unchanged.
    """

    default: float = 0.0
    entries: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.default):
            raise ValueError("schedule default must be finite")
        clean = {}
        for t, th in self.entries.items():
            if not np.isfinite(th):
                raise ValueError(f"schedule angle at step {t} is not finite")
            clean[int(t)] = float(th) % TWO_PI
        object.__setattr__(self, "default", float(self.default) % TWO_PI)
        object.__setattr__(self, "entries", clean)

    @classmethod
    def constant(cls, theta: float) -> "ShiftSchedule":
        return cls(default=theta)

    def value(self, t: int) -> float:
        return self.entries.get(t, self.default)


@dataclass(frozen=True)
class Trajectory:
    """Recorded position distributions P_t(x) of one walk run."""

    grid: LatticeGrid
    times: list[int]
    distributions: np.ndarray  # shape (len(times), M)
    meta: dict = field(default_factory=dict)
    observables: dict | None = None

    def row(self, t: int) -> np.ndarray:
        return self.distributions[self.times.index(t)]

    @property
    def final(self) -> np.ndarray:
        return self.distributions[-1]


def step(state: WalkState, coin: CoinOp, theta: float = 0.0) -> WalkState:
    """Advance the walker by one step in its current representation."""
    amps = state.amplitudes @ coin.matrix.T
    if state.representation is Representation.MOMENTUM:
        phase = np.exp(1j * (state.grid.momenta + theta))
        out = np.empty_like(amps)
        out[:, 0] = amps[:, 0] * phase
        out[:, 1] = amps[:, 1] * phase.conj()
    else:
        out = np.empty_like(amps)
        out[:, 0] = np.roll(amps[:, 0], 1)
        out[:, 1] = np.roll(amps[:, 1], -1)
        if theta != 0.0:
            out = out @ momentum_shift(theta).matrix.T
    return state.with_amplitudes(out)


def _record_times(steps: int, record_every: int) -> list[int]:
    times = list(range(0, steps + 1, max(1, record_every)))
    if times[-1] != steps:
        times.append(steps)
    return times


def evolve(
    state0: WalkState,
    coin: CoinOp,
    steps: int,
    schedule: ShiftSchedule | None = None,
    record_every: int = 1,
) -> Trajectory:
    """Run `steps` walk steps and record position distributions.

    Stepping happens momentum-side; the state is transformed back only at
    recording times.  Every recorded step is checked against the
    boundary-tail guard (mass in the outer 5% of sites must stay below
    1e-9), raising BoundaryOverflowError for an undersized grid.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    schedule = schedule or ShiftSchedule()

    times = _record_times(steps, record_every)
    rows = np.empty((len(times), state0.grid.size))

    mom = state0.to_momentum()
    phase = np.exp(1j * state0.grid.momenta)
    coin_t = coin.matrix.T
    amps = mom.amplitudes.copy()

    def record(slot: int, t: int, a: np.ndarray):
        snap = mom.with_amplitudes(a)
        p = snap.site_probabilities()
        tail = snap.boundary_tail_mass()
        if tail > TAIL_LIMIT:
            raise BoundaryOverflowError(
                f"tail mass {tail:.3e} at step {t} exceeds {TAIL_LIMIT:.0e}; "
                f"grid size {state0.grid.size} is too small for this run"
            )
        rows[slot] = p / p.sum()

    slot = 0
    if times[slot] == 0:
        record(slot, 0, amps)
        slot += 1
    for t in range(1, steps + 1):
        amps = amps @ coin_t
        ph = phase * np.exp(1j * schedule.value(t))
        amps[:, 0] *= ph
        amps[:, 1] *= ph.conj()
        if slot < len(times) and times[slot] == t:
            record(slot, t, amps)
            slot += 1

    meta = {
        "steps": steps,
        "record_every": record_every,
        "basis": state0.basis.value,
        "grid_size": state0.grid.size,
    }
    return Trajectory(state0.grid, times, rows, meta=meta)


def evolve_coin_mixture(
    states_and_weights,
    coin: CoinOp,
    steps: int,
    schedule: ShiftSchedule | None = None,
    record_every: int = 1,
) -> Trajectory:
    """Evolve a statistical mixture over coin components.

    Walk and measurement are linear in the coin density matrix, so running
    each pure component and convexly combining the recorded distributions
    is exact.  Mixtures over position are not supported.
    """
    pairs = [(float(w), st) for w, st in states_and_weights]
    total = sum(w for w, _ in pairs)
    if total <= 0 or any(w < 0 for w, _ in pairs):
        raise ValueError("mixture weights must be non-negative with positive sum")
    trajs = [evolve(st, coin, steps, schedule, record_every) for _, st in pairs]
    rows = sum(w / total * tr.distributions for (w, _), tr in zip(pairs, trajs))
    first = trajs[0]
    meta = dict(first.meta, mixture_components=len(pairs))
    return Trajectory(first.grid, first.times, rows, meta=meta)


def position_distribution(state: WalkState, gram: GramOperator | None = None) -> np.ndarray:
    """P(x) = sum_s |psi_{x,s}|^2 of an orthonormal-basis state."""
    if state.basis is not BasisTag.ORTHONORMAL:
        raise BasisMismatchError("position_distribution expects an orthonormal-basis state")
    if gram is not None and gram.grid.size != state.grid.size:
        raise ValueError("gram grid does not match state grid")
    p = state.site_probabilities()
    return p / p.sum()


def nonorthogonal_distribution(state: WalkState, gram: GramOperator) -> np.ndarray:
    """Position statistics of alpha-basis coefficients, dense reference.

    With coefficients c of psi = sum_x c_x |alpha_x>, the probability of
    finding the walker at position x is |(Gamma c)_x|^2 summed over the
    coin and normalized by the Gram-weighted norm of the state.
    """
    if state.basis is not BasisTag.ALPHA:
        raise BasisMismatchError("nonorthogonal_distribution expects alpha-basis coefficients")
    if gram.dense is None:
        raise ValueError("nonorthogonal_distribution needs a dense Gram matrix")
    c = state.to_position().amplitudes
    gc = gram.dense @ c
    p = np.sum(np.abs(gc) ** 2, axis=1)
    return p / p.sum()


def nonorthogonal_norm(state: WalkState, gram: GramOperator) -> float:
    """The normalization sum |Gamma c|^2; constant along any trajectory
    because the shift commutes with the Gram operator."""
    if gram.dense is None:
        raise ValueError("nonorthogonal_norm needs a dense Gram matrix")
    c = state.to_position().amplitudes
    return float(np.sum(np.abs(gram.dense @ c) ** 2))
