"""Momentum-space analysis: band structure, group velocities, asymptotics.

The walk operator acts at each momentum p as the 2x2 unitary
W(p) = S(p + theta) * C.  Its eigendecomposition W(p) = sum_k e^{i w_k(p)} P_k(p)
yields two dispersion branches; their derivatives v_k = dw_k/dp set the
ballistic transport.  The derivative is evaluated analytically through the
eigenvector expectation of sigma_z (differentiating the phase of
e^{i p sigma_z} C) and cross-checked against high-order centered finite
differences of the unwrapped branches.

The long-time position distribution on the scaled axis q = x/t is the
pushforward of the momentum occupation |ghat(p)|^2 * Tr(rho00 P_k(p))
under q = v_k(p).  That measure is mathematically identical to inverting
the characteristic function but free of quadrature ringing; the
characteristic function itself is also provided for consistency checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import CoinOp, LatticeGrid, MatrixField, Spinor, shift_symbol
from .errors import DegenerateEverywhereError, DerivativeMismatchError
from .overlap import OverlapModel, gram_symbol

__all__ = [
    "SpectralData",
    "AsymptoticDistribution",
    "walk_symbol",
    "eigensystem",
    "group_velocity",
    "characteristic_function",
    "asymptotic_distribution",
    "coin_density",
    "point_velocities",
]

DEGENERACY_GAP = 1e-10
DEFAULT_SPECTRAL_SIZE = 4096
DEFAULT_BINS = 401


@dataclass(frozen=True)
class SpectralData:
    """Branch-resolved eigendata of a walk symbol over a momentum grid."""

    grid: LatticeGrid
    theta: float
    omega: np.ndarray = field(repr=False)  # (2, M) continuous eigenphase branches
    projectors: np.ndarray = field(repr=False)  # (2, M, 2, 2)
    velocity: np.ndarray | None = field(default=None, repr=False)  # (2, M)


@dataclass(frozen=True)
class AsymptoticDistribution:
    """Histogram of the long-time scaled position q = x/t in [-1, 1].

    `mean` and `std` are exact sample moments of the underlying pushforward
    measure (not recomputed from bin centers), so binning cannot leak into
    moment checks.
    """

    edges: np.ndarray
    masses: np.ndarray
    mean: float
    std: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def walk_symbol(coin: CoinOp, grid: LatticeGrid, theta: float = 0.0) -> MatrixField:
    """Momentum symbol S(p + theta) * C of one walk step."""
    shift = shift_symbol(grid, theta)
    return MatrixField(grid, shift.values @ coin.matrix, theta=theta)


def _eig2(w: np.ndarray):
    """Closed-form eigendecomposition of a batch of 2x2 matrices.

    Returns eigenvalues (M, 2) and unit eigenvectors (M, 2, 2) with the
    vector for eigenvalue [m, k] in [m, :, k].  Vectors at (near-)degenerate
    nodes are unreliable and must be fixed up by the caller.
    """
    a, b = w[:, 0, 0], w[:, 0, 1]
    c, d = w[:, 1, 0], w[:, 1, 1]
    tr = a + d
    det = a * d - b * c
    sq = np.sqrt(tr * tr - 4.0 * det + 0j)
    lam = np.stack([(tr + sq) / 2.0, (tr - sq) / 2.0], axis=1)

    vecs = np.empty((w.shape[0], 2, 2), dtype=np.complex128)
    use_b = np.abs(b) >= np.abs(c)
    for k in (0, 1):
        vk = np.where(
            use_b[:, None],
            np.stack([b, lam[:, k] - a], axis=1),
            np.stack([lam[:, k] - d, c], axis=1),
        )
        # diagonal matrices: pick the axis vector matching the eigenvalue
        diag = (np.abs(b) + np.abs(c)) < 1e-300
        if np.any(diag):
            first = np.abs(lam[:, k] - a) <= np.abs(lam[:, k] - d)
            axis = np.where(
                first[:, None],
                np.array([[1.0, 0.0]]),
                np.array([[0.0, 1.0]]),
            )
            vk = np.where(diag[:, None], axis, vk)
        vecs[:, :, k] = vk / np.linalg.norm(vk, axis=1, keepdims=True)
    return lam, vecs


def _wrap_pi(x: np.ndarray) -> np.ndarray:
    return (x + np.pi) % (2.0 * np.pi) - np.pi


def eigensystem(field_: MatrixField) -> SpectralData:
    """Diagonalize a matrix field into two continuous branches.

    Branches are ordered by eigenphase at the first non-degenerate node and
    continued across the grid by maximal eigenvector overlap, breaking ties
    toward the smaller phase jump; eigenphases are then unwrapped so each
    branch is continuous.  Nodes with eigenvalue gap below 1e-10 inherit
    their projectors from the previous node.
    """
    w = field_.values
    m = w.shape[0]
    lam, vecs = _eig2(w)
    gap = np.abs(lam[:, 0] - lam[:, 1])
    degenerate = gap < DEGENERACY_GAP
    if np.all(degenerate):
        raise DegenerateEverywhereError(
            "both eigenvalue branches coincide on the whole grid"
        )

    order = np.tile(np.array([0, 1]), (m, 1))
    j0 = int(np.argmin(degenerate))  # first non-degenerate node
    order[j0] = np.argsort(np.angle(lam[j0]))

    def sweep(indices):
        ref_vecs = vecs[j0][:, order[j0]]
        ref_ang = np.angle(lam[j0, order[j0]])
        for j in indices:
            if degenerate[j]:
                continue  # labels irrelevant there; projectors patched below
            ov = np.abs(ref_vecs.conj().T @ vecs[j]) ** 2  # |<ref_k | cur_l>|^2
            straight = ov[0, 0] + ov[1, 1]
            swapped = ov[0, 1] + ov[1, 0]
            if abs(straight - swapped) < 1e-12:
                ang = np.angle(lam[j])
                flip = (
                    np.abs(_wrap_pi(ang[::-1] - ref_ang)).sum()
                    < np.abs(_wrap_pi(ang - ref_ang)).sum()
                )
            else:
                flip = swapped > straight
            order[j] = (1, 0) if flip else (0, 1)
            ref_vecs = vecs[j][:, order[j]]
            ref_ang = np.angle(lam[j, order[j]])

    sweep(range(j0 + 1, m))
    sweep(range(j0 - 1, -1, -1))

    lam_sorted = np.take_along_axis(lam, order, axis=1)
    vecs_sorted = np.stack([vecs[np.arange(m), :, order[:, k]] for k in (0, 1)], axis=0)
    projectors = np.einsum("kmi,kmj->kmij", vecs_sorted, vecs_sorted.conj())

    # band touchings inherit the projectors of the nearest resolved node
    for j in np.nonzero(degenerate)[0]:
        left, right = j - 1, j + 1
        while left >= 0 and degenerate[left]:
            left -= 1
        while right < m and degenerate[right]:
            right += 1
        src = left if left >= 0 else right
        projectors[:, j] = projectors[:, src]

    # unwrap each branch into a continuous phase curve
    omega = np.empty((2, m))
    raw = np.angle(lam_sorted).T
    for k in (0, 1):
        d = _wrap_pi(np.diff(raw[k]))
        omega[k, 0] = raw[k, 0]
        omega[k, 1:] = raw[k, 0] + np.cumsum(d)

    return SpectralData(field_.grid, field_.theta, omega, projectors)


def group_velocity(spec: SpectralData, check_tol: float = 1e-6) -> SpectralData:
    """Fill in v_k(p) = dw_k/dp.

    The stored values come from the eigenvector identity
    v_k = <psi_k| sigma_z |psi_k> (exact for symbols of the form
    e^{i(p+theta) sigma_z} C); a five-point centered difference of the
    unwrapped branches serves as an independent cross-check away from
    degeneracies, raising DerivativeMismatchError past `check_tol`.
    """
    proj = spec.projectors
    v_hf = np.real(proj[:, :, 0, 0] - proj[:, :, 1, 1])

    m = spec.grid.size
    h = 2.0 * np.pi / m
    v_fd = np.empty_like(v_hf)
    for k in (0, 1):
        d = _wrap_pi(np.diff(spec.omega[k], append=spec.omega[k, :1]))
        d_m1 = np.roll(d, 1)
        v_fd[k] = (8.0 * (d + d_m1) - (np.roll(d, -1) + d + d_m1 + np.roll(d, 2))) / (12.0 * h)

    # exclude a few nodes around band touchings from the comparison
    lam_gap = np.abs(np.exp(1j * spec.omega[0]) - np.exp(1j * spec.omega[1]))
    near = lam_gap < 1e-6
    mask = near.copy()
    for shift in (-3, -2, -1, 1, 2, 3):
        mask |= np.roll(near, shift)
    ok = ~mask
    if np.any(ok):
        mismatch = np.abs(v_hf[:, ok] - v_fd[:, ok]).max()
        if mismatch > check_tol:
            raise DerivativeMismatchError(
                f"analytic and finite-difference group velocities differ by {mismatch:.3e}"
            )
    return replace(spec, velocity=v_hf)


def coin_density(rho00) -> np.ndarray:
    """Coerce a coin state (Spinor, mixture of weighted Spinors, or a 2x2
    density matrix) into a normalized 2x2 density matrix."""
    if isinstance(rho00, Spinor):
        return rho00.density_matrix()
    if isinstance(rho00, np.ndarray) and rho00.shape == (2, 2):
        rho = np.asarray(rho00, dtype=np.complex128)
        tr = np.trace(rho).real
        if tr <= 0:
            raise ValueError("density matrix must have positive trace")
        return rho / tr
    try:
        pairs = list(rho00)
    except TypeError:
        raise TypeError(f"cannot interpret {type(rho00).__name__} as a coin state")
    rho = np.zeros((2, 2), dtype=np.complex128)
    total = 0.0
    for wgt, sp in pairs:
        if wgt < 0:
            raise ValueError("mixture weights must be non-negative")
        rho += wgt * sp.density_matrix()
        total += wgt
    if total <= 0:
        raise ValueError("mixture weights must sum to a positive value")
    return rho / total


def _pushforward_samples(spec: SpectralData, model: OverlapModel, rho00):
    """Per-(node, branch) velocity samples and their normalized weights."""
    if spec.velocity is None:
        raise ValueError("group velocities not computed; call group_velocity first")
    rho = coin_density(rho00)
    sym = gram_symbol(model, spec.grid)
    wp = sym**2
    wp = wp / wp.sum()
    branch = np.real(np.einsum("ji,kmij->km", rho, spec.projectors))
    weights = wp[None, :] * np.clip(branch, 0.0, None)
    weights = weights / weights.sum()
    return spec.velocity.ravel(), weights.ravel()


def characteristic_function(spec: SpectralData, model: OverlapModel, rho00, lam):
    """C(lambda) = <e^{i lambda V}> over the momentum occupation, with
    C(0) = 1.  Accepts a scalar or an array of lambda values."""
    v, w = _pushforward_samples(spec, model, rho00)
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    out = (w[None, :] * np.exp(1j * np.outer(lam_arr, v))).sum(axis=1)
    return out if np.ndim(lam) else complex(out[0])


def asymptotic_distribution(
    spec: SpectralData, model: OverlapModel, rho00, bins: int = DEFAULT_BINS
) -> AsymptoticDistribution:
    """Histogram of the long-time scaled position over q in [-1, 1]."""
    v, w = _pushforward_samples(spec, model, rho00)
    if np.abs(v).max() > 1.0 + 1e-12:
        raise ValueError("group velocities exceed the causal bound")
    edges = np.linspace(-1.0, 1.0, bins + 1)
    masses, _ = np.histogram(np.clip(v, -1.0, 1.0), bins=edges, weights=w)
    mean = float((w * v).sum())
    var = float((w * (v - mean) ** 2).sum())
    return AsymptoticDistribution(edges, masses, mean, np.sqrt(max(var, 0.0)))


def point_velocities(coin: CoinOp, theta: float = 0.0) -> np.ndarray:
    """Both branch velocities of the walk symbol at momentum p = 0,
    sorted ascending.  Used to predict wave-packet speeds for a walk run
    with a constant momentum shift theta."""
    phase = np.exp(1j * theta)
    w = np.diag([phase, phase.conj()]) @ coin.matrix
    _, vecs = np.linalg.eig(w)
    v = np.abs(vecs[0]) ** 2 - np.abs(vecs[1]) ** 2
    return np.sort(np.real(v))
