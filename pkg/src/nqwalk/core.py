"""Foundational types: coins, spinors, lattice/momentum grids, matrix fields.

Conventions used throughout the package:

* positions live on a periodic lattice x in {-M/2, ..., M/2 - 1} (M even),
* momenta on the conjugate grid p_j = -pi + 2*pi*j/M, j = 0..M-1,
* the momentum representation of an amplitude field is
  psi(p) = sum_x exp(i*p*x) * psi_x,
* the coin-conditioned shift moves the "+" spinor component to x+1 and the
  "-" component to x-1, i.e. it multiplies by diag(e^{ip}, e^{-ip}) in
  momentum space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "CoinOp",
    "Spinor",
    "LatticeGrid",
    "MatrixField",
    "coin_experimental",
    "coin_hadamard",
    "coin_identity",
    "coin_rotation",
    "momentum_shift",
    "shift_symbol",
]

UNITARITY_TOL = 1e-12


@dataclass(frozen=True)
class CoinOp:
    """A 2x2 unitary acting on the internal (coin) space."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.shape != (2, 2):
            raise ValueError(f"coin matrix must be 2x2, got {m.shape}")
        dev = np.abs(m.conj().T @ m - np.eye(2)).max()
        if not dev <= UNITARITY_TOL:
            raise ValueError(f"coin matrix is not unitary (deviation {dev:.3e})")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other: "CoinOp") -> "CoinOp":
        return CoinOp(self.matrix @ other.matrix)


def coin_experimental() -> CoinOp:
    """The pi/4 rotation coin exp(i*pi/4*sigma_y) = [[1, 1], [-1, 1]]/sqrt(2)."""
    return coin_rotation(math.pi / 4)


def coin_hadamard() -> CoinOp:
    """The Hadamard coin [[1, 1], [1, -1]]/sqrt(2) = sigma_z * coin_experimental()."""
    s = 1.0 / math.sqrt(2.0)
    return CoinOp(np.array([[s, s], [s, -s]]))


def coin_identity() -> CoinOp:
    return CoinOp(np.eye(2))


def coin_rotation(angle: float) -> CoinOp:
    """exp(i*angle*sigma_y), a real rotation of the coin space."""
    c, s = math.cos(angle), math.sin(angle)
    return CoinOp(np.array([[c, s], [-s, c]]))


def momentum_shift(theta: float) -> CoinOp:
    """diag(e^{i*theta}, e^{-i*theta}): shifts the walk's momentum by theta.

    Applied after each step, this phase on the coin space is equivalent to
    translating the momentum argument of the shift by theta, because the
    two operators are simultaneously diagonal.
    """
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    return CoinOp(np.diag([np.exp(1j * theta), np.exp(-1j * theta)]))


@dataclass(frozen=True)
class Spinor:
    """A coin-space vector in the sigma_z eigenbasis (components +, -)."""

    plus: complex
    minus: complex

    def __post_init__(self):
        if not (np.isfinite(self.plus) and np.isfinite(self.minus)):
            raise ValueError("spinor entries must be finite")

    @classmethod
    def up(cls) -> "Spinor":
        return cls(1.0, 0.0)

    @classmethod
    def down(cls) -> "Spinor":
        return cls(0.0, 1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.plus, self.minus], dtype=np.complex128)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def normalized(self) -> "Spinor":
        n = self.norm()
        if n <= 0.0:
            raise ValueError("cannot normalize a zero spinor")
        return Spinor(self.plus / n, self.minus / n)

    def density_matrix(self) -> np.ndarray:
        v = self.normalized().as_array()
        return np.outer(v, v.conj())


@dataclass(frozen=True)
class LatticeGrid:
    """Periodic lattice of M sites together with its FFT-conjugate momenta.

    The continuum momentum integral over [-pi, pi) is realized as the
    Riemann sum (2*pi/M) * sum_j, which makes position <-> momentum
    transforms exact on the periodic lattice.
    """

    size: int

    def __post_init__(self):
        if self.size < 4 or self.size % 2 != 0:
            raise ValueError(f"grid size must be an even integer >= 4, got {self.size}")

    @cached_property
    def sites(self) -> np.ndarray:
        return np.arange(self.size) - self.size // 2

    @cached_property
    def momenta(self) -> np.ndarray:
        return -np.pi + 2.0 * np.pi * np.arange(self.size) / self.size

    def index_of(self, x: int) -> int:
        return int(x) + self.size // 2

    @classmethod
    def for_walk(cls, steps: int, sigma: float = 0.0, minimum: int = 64) -> "LatticeGrid":
        """Smallest power-of-two grid that keeps a `steps`-step walk with
        overlap width `sigma` away from the periodic boundary.

        The walk spreads at most one site per step and the Gaussian
        initial state adds tails of about 6*sigma.
        """
        need = 2 * (steps + 6 * math.ceil(sigma)) + 64
        need = max(need, minimum)
        return cls(1 << (need - 1).bit_length())


@dataclass(frozen=True)
class MatrixField:
    """A 2x2 complex matrix attached to every momentum node of a grid.

    `theta` records the momentum offset baked into the field when it was
    built from a walk symbol; it is metadata only.
    """

    grid: LatticeGrid
    values: np.ndarray = field(repr=False)
    theta: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.grid.size, 2, 2):
            raise ValueError(f"values must have shape ({self.grid.size}, 2, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("matrix field contains non-finite entries")
        object.__setattr__(self, "values", v)


def shift_symbol(grid: LatticeGrid, theta: float = 0.0) -> MatrixField:
    """The shift operator in momentum space: diag(e^{i(p+theta)}, e^{-i(p+theta)})."""
    phase = np.exp(1j * (grid.momenta + theta))
    values = np.zeros((grid.size, 2, 2), dtype=np.complex128)
    values[:, 0, 0] = phase
    values[:, 1, 1] = phase.conj()
    return MatrixField(grid, values, theta=theta)
