"""Discrete-time quantum walks with non-orthogonal position states.

The package simulates one-dimensional coined walks whose position states
overlap like coherent states on a line (Gaussian overlap of width sigma),
maps them exactly onto walks in an orthonormal basis, analyzes their band
structure and long-time statistics in momentum space, and drives
experiments such as momentum-shift sweeps and Bloch oscillations.
"""

from .bloch import (
    BlochConfig,
    BlochResult,
    BlochSummary,
    Peak,
    PeakTrack,
    PhaseSpaceMap,
    ProbeSample,
    bloch_schedule,
    husimi_grid,
    occupation_expectation,
    probe_dispersion,
    run_bloch,
    summarize_bloch,
    track_peaks,
)
from .core import (
    CoinOp,
    LatticeGrid,
    MatrixField,
    Spinor,
    coin_experimental,
    coin_hadamard,
    coin_identity,
    coin_rotation,
    momentum_shift,
    shift_symbol,
)
from .errors import (
    BasisMismatchError,
    BoundaryOverflowError,
    ConfigError,
    DegenerateEverywhereError,
    DerivativeMismatchError,
    IllConditionedWarning,
    NoPeaksError,
    NonPositiveSymbolError,
    SigmaZeroError,
    WalkError,
)
from .evolution import (
    ShiftSchedule,
    Trajectory,
    evolve,
    nonorthogonal_distribution,
    nonorthogonal_norm,
    position_distribution,
    step,
)
from .overlap import (
    GramOperator,
    OverlapModel,
    apply_gram_power,
    gram_dense,
    gram_operator,
    gram_symbol,
    initial_state,
    overlap,
    transform_initial_state,
)
from .spectral import (
    AsymptoticDistribution,
    SpectralData,
    asymptotic_distribution,
    characteristic_function,
    coin_density,
    eigensystem,
    group_velocity,
    point_velocities,
    walk_symbol,
)
from .state import BasisTag, Representation, WalkState
from .validate import CheckResult, run_validation

__version__ = "0.1.0"
