"""Non-orthogonality machinery: overlap model, Gram operator, basis maps.

The walker's position states overlap like coherent states on a line,
g(k) = exp(-k^2 / sigma^2), so the Gram matrix Gamma_{xy} = g(y - x) is
symmetric Toeplitz.  On the periodic lattice it is realized with circulant
wrap, which makes its functional calculus exact: any power Gamma^s acts in
momentum space as multiplication by ghat(p)^s, where ghat is the Fourier
series of g.  sigma = 0 is the orthogonal limit and is handled as an exact
special case (g = delta), never as a limit of the Gaussian formula.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .core import LatticeGrid, Spinor
from .errors import IllConditionedWarning, NonPositiveSymbolError
from .state import BasisTag, Representation, WalkState

__all__ = [
    "OverlapModel",
    "GramOperator",
    "overlap",
    "gram_symbol",
    "gram_operator",
    "gram_dense",
    "apply_gram_power",
    "initial_state",
    "transform_initial_state",
]

DEFAULT_TAIL_EPS = 1e-14
DEFAULT_FLOOR_EPS = 1e-12


@dataclass(frozen=True)
class OverlapModel:
    """Overlap profile of neighbouring position states.

    Parameters
    ----------
    sigma : float
        Width of the Gaussian overlap; 0 encodes exactly orthogonal
        positions.  The corresponding phase-space step between adjacent
        coherent states is sqrt(2)/sigma.
    tail_eps : float
        Threshold below which overlaps are truncated to zero; fixes the
        band K of the Gram matrix.
    table : array-like, optional
        Explicit overlap values [g(0), g(1), ..., g(K)] for a custom
        symmetric profile; overrides the Gaussian.  Must start at 1 and be
        non-increasing.
    """

    sigma: float
    tail_eps: float = DEFAULT_TAIL_EPS
    table: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not (self.tail_eps > 0.0):
            raise ValueError("tail_eps must be positive")
        if self.table is not None:
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 1 or t.size == 0:
                raise ValueError("overlap table must be a non-empty 1-D array")
            if abs(t[0] - 1.0) > 1e-12:
                raise ValueError("overlap table must start with g(0) = 1")
            if np.any(np.diff(np.abs(t)) > 1e-12):
                raise ValueError("overlap table must be non-increasing in |k|")
            object.__setattr__(self, "table", t)

    @cached_property
    def band(self) -> int:
        """Smallest K with g(k) < tail_eps for |k| > K."""
        if self.table is not None:
            return int(self.table.size - 1)
        if self.sigma == 0.0:
            return 0
        return int(math.floor(self.sigma * math.sqrt(math.log(1.0 / self.tail_eps)))) + 1

    @property
    def step_alpha(self) -> float:
        """Phase-space distance between adjacent position states."""
        from .errors import SigmaZeroError

        if self.sigma == 0.0:
            raise SigmaZeroError("phase-space step is undefined at sigma = 0")
        return math.sqrt(2.0) / self.sigma

    def g(self, k) -> np.ndarray:
        """Vectorized overlap g(k) between positions k sites apart."""
        k = np.atleast_1d(np.asarray(k))
        if self.table is not None:
            a = np.abs(k)
            out = np.zeros(k.shape, dtype=float)
            inside = a <= self.band
            out[inside] = self.table[a[inside].astype(int)]
        elif self.sigma == 0.0:
            out = np.where(k == 0, 1.0, 0.0)
        else:
            out = np.exp(-(k.astype(float) ** 2) / self.sigma**2)
        return out


def overlap(k: int, model: OverlapModel) -> float:
    """Overlap between position states k sites apart."""
    return float(model.g(k)[0])


def _band_on_grid(model: OverlapModel, grid: LatticeGrid) -> int:
    # keep the band inside half the ring so wrapped distances stay unique
    return min(model.band, grid.size // 2 - 1)


def gram_symbol(model: OverlapModel, grid: LatticeGrid) -> np.ndarray:
    """Fourier series ghat(p_j) = sum_k g(k) exp(i p_j k) of the overlap.

    The sum over the symmetric band is real by construction; values in
    (-1e-12, 0) are clamped to zero, anything more negative raises
    NonPositiveSymbolError.
    """
    kmax = _band_on_grid(model, grid)
    ks = np.arange(1, kmax + 1)
    sym = np.ones(grid.size)
    if kmax > 0:
        sym = sym + 2.0 * (model.g(ks)[None, :] * np.cos(np.outer(grid.momenta, ks))).sum(axis=1)
    low = sym.min()
    if low < -1e-12:
        raise NonPositiveSymbolError(
            f"Gram symbol reaches {low:.3e}; the overlap model is not positive semidefinite"
        )
    return np.clip(sym, 0.0, None)


@dataclass(frozen=True)
class GramOperator:
    """The Gram operator of the position basis on a fixed grid.

    `symbol` holds its momentum multiplier ghat(p_j); `dense` optionally
    holds the materialized M x M matrix (reference backend only).
    """

    model: OverlapModel
    grid: LatticeGrid
    symbol: np.ndarray = field(repr=False)
    dense: np.ndarray | None = field(default=None, repr=False)


def gram_operator(model: OverlapModel, grid: LatticeGrid) -> GramOperator:
    """Gram operator in symbol form (production backend)."""
    return GramOperator(model, grid, gram_symbol(model, grid))


def gram_dense(model: OverlapModel, grid: LatticeGrid, circulant: bool = False) -> GramOperator:
    """Gram operator with a materialized dense matrix.

    With `circulant=True` distances wrap around the ring, which makes the
    dense matrix exactly the one whose eigenvalues are the symbol values on
    the FFT grid; otherwise the matrix is plain Toeplitz over the finite
    window (the infinite-line reference for states away from the boundary).
    """
    m = grid.size
    diff = np.subtract.outer(grid.sites, grid.sites)  # y - x with sign flipped is fine: g even
    if circulant:
        diff = (diff + m // 2) % m - m // 2
    dense = model.g(diff)
    return GramOperator(model, grid, gram_symbol(model, grid), dense=dense)


def apply_gram_power(
    gram: GramOperator,
    exponent: float,
    state: WalkState,
    floor_eps: float = DEFAULT_FLOOR_EPS,
) -> WalkState:
    """Apply Gamma^exponent to a state via the momentum symbol.

    Acts identically on both coin components.  For negative exponents the
    symbol is floored at `floor_eps` to avoid catastrophic amplification of
    numerically-zero momenta (large sigma); if the floor is active an
    IllConditionedWarning is emitted and the floored result returned.

    The basis tag follows the convention that Gamma^{-1/2} carries the
    alpha basis into the orthonormal one and Gamma^{+1/2} undoes it; other
    exponents leave the tag unchanged.
    """
    if state.grid.size != gram.grid.size:
        raise ValueError("state grid does not match Gram grid")
    sym = gram.symbol
    if exponent < 0:
        if sym.min() < floor_eps:
            warnings.warn(
                f"Gram symbol minimum {sym.min():.3e} below floor {floor_eps:.1e}; "
                "negative power regularized",
                IllConditionedWarning,
                stacklevel=2,
            )
        sym = np.maximum(sym, floor_eps)
    factor = sym**exponent

    mom = state.to_momentum()
    new_amps = mom.amplitudes * factor[:, None]

    moves = {
        (BasisTag.ALPHA, -0.5): BasisTag.ORTHONORMAL,
        (BasisTag.ORTHONORMAL, 0.5): BasisTag.ALPHA,
    }
    tag = moves.get((state.basis, exponent), state.basis)

    out = mom.with_amplitudes(new_amps, basis=tag)
    return out.to_position() if state.representation is Representation.POSITION else out


def initial_state(model: OverlapModel, grid: LatticeGrid, coin: Spinor) -> WalkState:
    """Localized walker start, expressed in the orthonormal basis.

    The overlap spreads the nominally point-like start over neighbouring
    sites: the momentum amplitudes are ghat(p) times the coin spinor,
    equivalently Gamma applied to a one-hot state, normalized to 1.
    """
    if coin.norm() <= 0.0:
        raise ValueError("coin spinor must have positive norm")
    sym = gram_symbol(model, grid)
    amps = sym[:, None] * coin.normalized().as_array()[None, :]
    st = WalkState(grid, BasisTag.ORTHONORMAL, Representation.MOMENTUM, amps)
    return st.normalized().to_position()


def transform_initial_state(state: WalkState, gram: GramOperator) -> WalkState:
    """Map alpha-basis coefficients to the orthonormal-basis pipeline state.

    Measurement statistics of the non-orthogonal walk are reproduced by the
    plain orthogonal walk started from Gamma * c (normalized); this applies
    that map and retags the result.
    """
    if state.basis is not BasisTag.ALPHA:
        raise ValueError("transform_initial_state expects an alpha-basis state")
    out = apply_gram_power(gram, 1.0, state)
    out = out.with_amplitudes(out.amplitudes, basis=BasisTag.ORTHONORMAL)
    return out.normalized()
