"""Walker amplitude fields and the position <-> momentum transforms.

A `WalkState` stores one complex 2-spinor per lattice site (or momentum
node) and carries two tags: which basis its coefficients refer to (the
non-orthogonal alpha basis or the orthonormalized basis derived from it)
and which side of the Fourier transform it currently lives on.  The walk
operator acts identically in both bases, so stepping never touches the
basis tag; the tag only selects the measurement formula.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .core import LatticeGrid, Spinor

__all__ = ["BasisTag", "Representation", "WalkState"]


class BasisTag(enum.Enum):
    ALPHA = "alpha"
    ORTHONORMAL = "orthonormal"


class Representation(enum.Enum):
    POSITION = "position"
    MOMENTUM = "momentum"


def _to_momentum(amps: np.ndarray) -> np.ndarray:
    # psi(p_j) = sum_x exp(i p_j x) psi_x on the shared grid ordering
    m = amps.shape[0]
    a = np.fft.ifftshift(amps, axes=0)
    return np.fft.fftshift(m * np.fft.ifft(a, axis=0), axes=0)


def _to_position(amps: np.ndarray) -> np.ndarray:
    m = amps.shape[0]
    a = np.fft.ifftshift(amps, axes=0)
    return np.fft.fftshift(np.fft.fft(a, axis=0) / m, axes=0)


@dataclass(frozen=True)
class WalkState:
    """Amplitudes of the walker over a periodic lattice, shape (M, 2)."""

    grid: LatticeGrid
    basis: BasisTag
    representation: Representation
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=np.complex128)
        if a.shape != (self.grid.size, 2):
            raise ValueError(f"amplitudes must have shape ({self.grid.size}, 2), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("state contains non-finite amplitudes")
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def localized(
        cls,
        grid: LatticeGrid,
        x: int,
        spinor: Spinor,
        basis: BasisTag = BasisTag.ORTHONORMAL,
    ) -> "WalkState":
        """One-hot state at site x with the given (normalized) coin spinor."""
        amps = np.zeros((grid.size, 2), dtype=np.complex128)
        amps[grid.index_of(x)] = spinor.normalized().as_array()
        return cls(grid, basis, Representation.POSITION, amps)

    def with_amplitudes(self, amplitudes: np.ndarray, **changes) -> "WalkState":
        return replace(self, amplitudes=amplitudes, **changes)

    def norm(self) -> float:
        s = float(np.sum(np.abs(self.amplitudes) ** 2))
        if self.representation is Representation.MOMENTUM:
            s /= self.grid.size
        return np.sqrt(s)

    def normalized(self) -> "WalkState":
        n = self.norm()
        if not n > 0.0:
            raise ValueError("cannot normalize a zero state")
        return self.with_amplitudes(self.amplitudes / n)

    def to_momentum(self) -> "WalkState":
        if self.representation is Representation.MOMENTUM:
            return self
        return self.with_amplitudes(
            _to_momentum(self.amplitudes), representation=Representation.MOMENTUM
        )

    def to_position(self) -> "WalkState":
        if self.representation is Representation.POSITION:
            return self
        return self.with_amplitudes(
            _to_position(self.amplitudes), representation=Representation.POSITION
        )

    def site_probabilities(self) -> np.ndarray:
        """|psi_x|^2 summed over the coin, as coefficients in the current basis."""
        pos = self.to_position()
        return np.sum(np.abs(pos.amplitudes) ** 2, axis=1)

    def boundary_tail_mass(self, fraction: float = 0.05) -> float:
        """Probability weight sitting in the outermost `fraction` of sites."""
        p = self.site_probabilities()
        total = float(p.sum())
        if total == 0.0:
            return 0.0
        edge = max(1, round(self.grid.size * fraction / 2))
        return float((p[:edge].sum() + p[-edge:].sum()) / total)
