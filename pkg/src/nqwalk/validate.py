"""Self-contained property and oracle suite behind `nqwalk validate`.

Each check exercises one of the structural identities the simulator relies
on: commutation of shift and Gram operator, invertibility of the basis
transforms, duality of the position states, agreement of the position- and
momentum-side backends, the causal bound on group velocities, the gauge
equivalence of the two standard coins, and their exact degeneracy in the
orthogonal limit.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .core import LatticeGrid, Spinor, coin_experimental, coin_hadamard, coin_rotation
from .evolution import ShiftSchedule, evolve, step
from .overlap import OverlapModel, apply_gram_power, gram_dense, gram_operator, initial_state
from .spectral import eigensystem, group_velocity, walk_symbol
from .state import BasisTag, Representation, WalkState

__all__ = ["CheckResult", "run_validation"]


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _random_state(grid: LatticeGrid, rng: np.random.Generator) -> WalkState:
    amps = rng.standard_normal((grid.size, 2)) + 1j * rng.standard_normal((grid.size, 2))
    st = WalkState(grid, BasisTag.ORTHONORMAL, Representation.POSITION, amps)
    return st.normalized()


def _check_commutation(rng) -> CheckResult:
    grid = LatticeGrid(128)
    gram = gram_operator(OverlapModel(1.5), grid)
    worst = 0.0
    for _ in range(3):
        st = _random_state(grid, rng)
        a = apply_gram_power(gram, 0.5, step(st, coin_rotation(0.0)))
        b = step(apply_gram_power(gram, 0.5, st), coin_rotation(0.0))
        worst = max(worst, float(np.abs(a.amplitudes - b.amplitudes).max()))
    return CheckResult("shift commutes with Gram operator", worst < 1e-12, f"sup {worst:.2e}")


def _check_roundtrip(rng) -> CheckResult:
    grid = LatticeGrid(128)
    gram = gram_operator(OverlapModel(1.5), grid)
    worst = 0.0
    for _ in range(3):
        st = _random_state(grid, rng)
        back = apply_gram_power(gram, -0.5, apply_gram_power(gram, 0.5, st))
        worst = max(worst, float(np.abs(back.amplitudes - st.amplitudes).max()))
    return CheckResult("Gram power +1/2 then -1/2 round-trips", worst < 1e-10, f"sup {worst:.2e}")


def _check_dual_basis(rng) -> CheckResult:
    from .state import _to_momentum, _to_position

    worst = 0.0
    for sigma in (1.0, 2.0):
        grid = LatticeGrid(64)
        m = grid.size
        gram = gram_dense(OverlapModel(sigma), grid, circulant=True)
        # position-state vectors via a dense eigensolver, dual vectors via
        # the FFT symbol; the two routes must be mutually inverse halves
        lam, u = np.linalg.eigh(gram.dense)
        alpha = (u * np.sqrt(np.clip(lam, 0.0, None))) @ u.T  # columns: Gamma^{1/2} e_x
        dual = _to_position(_to_momentum(np.eye(m)) / np.sqrt(gram.symbol)[:, None])
        grammat = alpha.conj().T @ dual
        worst = max(worst, float(np.abs(grammat - np.eye(m)).max()))
    return CheckResult("dual basis satisfies <alpha_x|dual_y> = delta", worst < 1e-8, f"sup {worst:.2e}")


def _check_backends(rng) -> CheckResult:
    grid = LatticeGrid(128)
    worst = 0.0
    for _ in range(2):
        st = _random_state(grid, rng)
        angle = rng.uniform(0, 2 * np.pi)
        theta = rng.uniform(-np.pi, np.pi)
        coin = coin_rotation(angle)
        a, b = st, st.to_momentum()
        for _ in range(25):
            a = step(a, coin, theta)
            b = step(b, coin, theta)
        diff = np.abs(a.site_probabilities() - b.site_probabilities()).max()
        worst = max(worst, float(diff))
    return CheckResult("position and momentum backends agree", worst < 1e-10, f"sup {worst:.2e}")


def _check_causality(rng) -> CheckResult:
    grid = LatticeGrid(512)
    worst = 0.0
    for coin in (coin_experimental(), coin_hadamard(), coin_rotation(0.3)):
        spec = group_velocity(eigensystem(walk_symbol(coin, grid)))
        worst = max(worst, float(np.abs(spec.velocity).max()))
    return CheckResult("group velocities respect |v| <= 1", worst <= 1.0 + 1e-12, f"max |v| {worst:.12f}")


def _check_gauge(rng) -> CheckResult:
    worst = 0.0
    for sigma in (0.0, 1.5):
        grid = LatticeGrid.for_walk(60, sigma)
        s0 = initial_state(OverlapModel(sigma), grid, Spinor.up())
        te = evolve(s0, coin_experimental(), 60, ShiftSchedule.constant(-np.pi / 2))
        th = evolve(s0, coin_hadamard(), 60)
        worst = max(worst, float(np.abs(te.distributions - th.distributions).max()))
    return CheckResult("momentum shift -pi/2 turns rotation coin into Hadamard", worst < 1e-10, f"sup {worst:.2e}")


def _check_orthogonal_degeneracy(rng) -> CheckResult:
    grid = LatticeGrid.for_walk(150, 0.0)
    s0 = initial_state(OverlapModel(0.0), grid, Spinor.up())
    te = evolve(s0, coin_experimental(), 150)
    th = evolve(s0, coin_hadamard(), 150)
    worst = float(np.abs(te.distributions - th.distributions).max())
    return CheckResult("orthogonal limit: both coins give equal walks", worst < 1e-10, f"sup {worst:.2e}")


def _check_normalization(rng) -> CheckResult:
    grid = LatticeGrid.for_walk(100, 4.0)
    s0 = initial_state(OverlapModel(4.0), grid, Spinor.up())
    traj = evolve(s0, coin_hadamard(), 100)
    worst = float(np.abs(traj.distributions.sum(axis=1) - 1.0).max())
    return CheckResult("distributions stay normalized", worst < 1e-10, f"sup {worst:.2e}")


def _check_denominator(rng) -> CheckResult:
    from .evolution import nonorthogonal_norm

    grid = LatticeGrid(64)
    gram = gram_dense(OverlapModel(1.5), grid, circulant=True)
    amps = rng.standard_normal((64, 2)) + 1j * rng.standard_normal((64, 2))
    st = WalkState(grid, BasisTag.ALPHA, Representation.POSITION, amps).normalized()
    ref = nonorthogonal_norm(st, gram)
    worst = 0.0
    for _ in range(20):
        st = step(st, coin_hadamard())
        worst = max(worst, abs(nonorthogonal_norm(st, gram) - ref) / ref)
    return CheckResult("overlap normalization independent of step", worst < 1e-10, f"rel dev {worst:.2e}")


def run_validation(seed: int = 7) -> list[CheckResult]:
    """Run the full property suite; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    checks = [
        _check_commutation,
        _check_roundtrip,
        _check_dual_basis,
        _check_backends,
        _check_causality,
        _check_gauge,
        _check_orthogonal_degeneracy,
        _check_normalization,
        _check_denominator,
    ]
    return [c(rng) for c in checks]
