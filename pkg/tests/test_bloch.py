import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nqwalk.bloch import (
    BlochConfig,
    PhaseSpaceMap,
    bloch_schedule,
    husimi_grid,
    occupation_expectation,
    probe_dispersion,
    run_bloch,
    summarize_bloch,
    track_peaks,
)
from nqwalk.core import LatticeGrid, Spinor, coin_experimental, coin_hadamard
from nqwalk.errors import NoPeaksError, SigmaZeroError
from nqwalk.evolution import evolve
from nqwalk.overlap import OverlapModel, gram_operator, initial_state
from nqwalk.state import BasisTag, WalkState

INV_SQRT2 = 1 / np.sqrt(2)


def fig_scenario(**overrides):
    base = dict(delta_theta=np.pi / 10, t_on=20, t_off=65, steps=100, sigma=14.0)
    base.update(overrides)
    return BlochConfig(**base)


@pytest.fixture(scope="module")
def default_run():
    cfg = fig_scenario()
    return cfg, run_bloch(cfg)


# --- schedule ----------------------------------------------------------------


def test_schedule_zero_drive_is_all_zero():
    sch = bloch_schedule(fig_scenario(delta_theta=0.0))
    assert all(sch.value(t) == 0.0 for t in range(1, 101))


def test_schedule_advances_and_wraps():
    cfg = fig_scenario()
    sch = bloch_schedule(cfg)
    assert all(sch.value(t) == 0.0 for t in range(1, 20))
    assert sch.value(20) == pytest.approx(np.pi / 10)
    assert sch.value(21) == pytest.approx(2 * np.pi / 10)
    # one drive period later the accumulated shift repeats
    for t in range(20, 45):
        assert sch.value(t + 20) == pytest.approx(sch.value(t), abs=1e-12)
    # all values live in [0, 2*pi)
    assert all(0 <= sch.value(t) < 2 * np.pi for t in range(1, 101))


def test_schedule_freeze_vs_reset():
    frozen = bloch_schedule(fig_scenario())
    # 45 driven steps of pi/10 accumulate to pi/2 (mod 2 pi)
    assert frozen.value(64) == pytest.approx(np.pi / 2)
    assert frozen.value(65) == pytest.approx(np.pi / 2)
    assert frozen.value(100) == pytest.approx(np.pi / 2)
    reset = bloch_schedule(fig_scenario(freeze=False))
    assert reset.value(65) == 0.0


def test_bloch_config_validation():
    with pytest.raises(ValueError):
        BlochConfig(delta_theta=0.1, t_on=30, t_off=20, steps=100)
    with pytest.raises(ValueError):
        BlochConfig(delta_theta=np.nan, t_on=0, t_off=0, steps=10)


# --- peak tracking -----------------------------------------------------------


def test_track_peaks_one_hot():
    d = np.zeros(64)
    d[32 + 7] = 1.0
    peaks = track_peaks(d)
    assert len(peaks) == 1
    assert peaks[0].position == pytest.approx(7.0)
    assert peaks[0].mass == pytest.approx(1.0)


@given(st.integers(-60, -20), st.integers(20, 60))
@settings(max_examples=20, deadline=None)
def test_track_peaks_two_gaussians(c1, c2):
    x = np.arange(-128, 128)
    d = np.exp(-((x - c1) ** 2) / 18.0) + np.exp(-((x - c2) ** 2) / 18.0)
    d = d / d.sum()
    peaks = track_peaks(d, sites=x)
    assert len(peaks) == 2
    assert peaks[0].position == pytest.approx(c1, abs=0.1)
    assert peaks[1].position == pytest.approx(c2, abs=0.1)


def test_track_peaks_flat_raises():
    with pytest.raises(NoPeaksError):
        track_peaks(np.full(64, 1.0 / 64))


def test_track_peaks_mass_threshold():
    x = np.arange(-64, 64)
    d = np.exp(-((x - 30) ** 2) / 8.0) + 0.02 * np.exp(-((x + 30) ** 2) / 8.0)
    d = d / d.sum()
    peaks = track_peaks(d, min_mass=0.05, sites=x)
    assert len(peaks) == 1 and peaks[0].position == pytest.approx(30, abs=0.1)


# --- phase space and occupation ----------------------------------------------


def test_phase_space_map_spacing():
    pmap = PhaseSpaceMap(4.0)
    alphas = pmap.alpha_of(np.arange(-5, 6))
    np.testing.assert_allclose(np.diff(alphas), np.sqrt(2) / 4, atol=1e-15)
    with pytest.raises(SigmaZeroError):
        PhaseSpaceMap(0.0)


def test_occupation_on_localized_states():
    model = OverlapModel(4.0)
    grid = LatticeGrid(64)
    gram = gram_operator(model, grid)
    pmap = PhaseSpaceMap(4.0)
    origin = WalkState.localized(grid, 0, Spinor.up(), basis=BasisTag.ALPHA)
    assert occupation_expectation(origin, gram, pmap) == pytest.approx(0.0, abs=1e-14)
    for x0 in (3, 7, -11):
        st_ = WalkState.localized(grid, x0, Spinor.up(), basis=BasisTag.ALPHA)
        expected = (x0 * np.sqrt(2) / 4.0) ** 2
        assert occupation_expectation(st_, gram, pmap) == pytest.approx(expected, rel=1e-12)


def test_occupation_requires_alpha_and_sigma():
    grid = LatticeGrid(64)
    gram0 = gram_operator(OverlapModel(0.0), grid)
    alpha = WalkState.localized(grid, 0, Spinor.up(), basis=BasisTag.ALPHA)
    with pytest.raises(SigmaZeroError):
        occupation_expectation(alpha, gram0, PhaseSpaceMap(4.0))
    from nqwalk.errors import BasisMismatchError

    gram = gram_operator(OverlapModel(4.0), grid)
    with pytest.raises(BasisMismatchError):
        occupation_expectation(WalkState.localized(grid, 0, Spinor.up()), gram, PhaseSpaceMap(4.0))


def test_occupation_nonnegative_on_random_states():
    from nqwalk.state import Representation

    rng = np.random.default_rng(9)
    grid = LatticeGrid(64)
    model = OverlapModel(3.0)
    gram = gram_operator(model, grid)
    pmap = PhaseSpaceMap(3.0)
    for _ in range(5):
        amps = rng.standard_normal((64, 2)) + 1j * rng.standard_normal((64, 2))
        st_ = WalkState(grid, BasisTag.ALPHA, Representation.POSITION, amps).normalized()
        assert occupation_expectation(st_, gram, pmap) >= 0.0


# --- the oscillation scenario --------------------------------------------------


def test_bloch_default_scenario_metrics(default_run):
    cfg, result = default_run
    summary = summarize_bloch(result, cfg)
    assert abs(summary.period - 20) <= 1
    assert abs(summary.amplitude - 5) <= 1
    assert abs(summary.drift) < 0.05
    assert 1.3 * 0.75 <= summary.n_min <= 1.3 * 1.25
    assert 2.7 * 0.75 <= summary.n_max <= 2.7 * 1.25


def test_bloch_peaks_parked_after_switch_off(default_run):
    cfg, result = default_run
    right = result.peak_track.positions(-1)
    after = right[cfg.t_off :]
    assert np.nanmax(np.abs(after - after[0])) <= 1.0


def test_bloch_occupation_series_starts_at_vacuum(default_run):
    _, result = default_run
    assert result.occupation[0] == pytest.approx(0.0, abs=1e-12)
    assert np.all(result.occupation >= -1e-12)


def test_bloch_rows_normalized(default_run):
    _, result = default_run
    np.testing.assert_allclose(result.trajectory.distributions.sum(axis=1), 1.0, atol=1e-10)


def test_bloch_zero_drive_matches_plain_walk():
    cfg = fig_scenario(delta_theta=0.0, t_off=50, steps=60)
    result = run_bloch(cfg)
    g = result.trajectory.grid
    s0 = initial_state(OverlapModel(14.0), g, Spinor.up())
    plain = evolve(s0, coin_hadamard(), 60, record_every=1)
    np.testing.assert_allclose(
        result.trajectory.distributions, plain.distributions, atol=1e-12
    )


@pytest.mark.parametrize("n", [8, 10, 20])
def test_bloch_period_scales_with_drive(n):
    # the tracking window is matched to the late-drive packet width, which
    # grows quickly for fast drives
    cfg = fig_scenario(delta_theta=2 * np.pi / n, peak_window=11)
    result = run_bloch(cfg)
    summary = summarize_bloch(result, cfg)
    assert abs(summary.period - n) <= 1
    # the occupation readout oscillates at the same period, ripple-free
    from nqwalk.bloch import _dominant_period

    occ_period = _dominant_period(result.occupation[cfg.t_on : cfg.t_off + 1])
    assert abs(occ_period - n) <= 1


def test_bloch_reset_mode_resumes_transport():
    # resetting the shift to zero after t_off restores a moving band point,
    # so the peaks drift again instead of staying parked
    cfg = fig_scenario(freeze=False)
    summary = summarize_bloch(run_bloch(cfg), cfg)
    assert abs(summary.drift) > 0.3


# --- dispersion probe ----------------------------------------------------------


def test_probe_rotation_coin_pins():
    model = OverlapModel(8.0)
    samples = probe_dispersion(coin_experimental(), model, [0.0, -np.pi / 2], steps=200)
    at_zero, at_shift = samples
    assert max(abs(v) for v in at_zero.measured) < 0.05
    assert sorted(np.round(at_shift.branch, 4)) == [-0.7071, 0.7071]
    assert len(at_shift.measured) == 2
    np.testing.assert_allclose(at_shift.measured, [-INV_SQRT2, INV_SQRT2], atol=0.01)


def test_probe_velocities_within_causal_bound():
    model = OverlapModel(8.0)
    thetas = np.linspace(-np.pi, np.pi, 5)
    for s in probe_dispersion(coin_hadamard(), model, thetas, steps=120):
        assert all(abs(v) <= 1.0 for v in s.measured)
        assert all(abs(v) <= 1.0 + 1e-12 for v in s.branch)


def test_probe_respects_thread_env(monkeypatch):
    from nqwalk.bloch import thread_count

    monkeypatch.setenv("NQWALK_THREADS", "2")
    assert thread_count() == 2
    monkeypatch.setenv("NQWALK_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.delenv("NQWALK_THREADS")
    assert thread_count() >= 1
    model = OverlapModel(8.0)
    monkeypatch.setenv("NQWALK_THREADS", "3")
    samples = probe_dispersion(coin_hadamard(), model, [0.0, 0.5, 1.0], steps=80)
    assert [s.theta for s in samples] == [0.0, 0.5, 1.0]


# --- Husimi rendering ----------------------------------------------------------


def test_husimi_single_position_bump():
    model = OverlapModel(np.sqrt(2))
    pmap = PhaseSpaceMap(np.sqrt(2))
    re_axis = np.linspace(-3, 3, 61)
    im_axis = np.linspace(-2, 2, 41)
    grid0 = husimi_grid(0, model, pmap, re_axis, im_axis)
    assert grid0.shape == (41, 61)
    i0, j0 = 20, 30  # alpha = 0
    assert grid0[i0, j0] == pytest.approx(1.0)
    assert grid0.argmax() == i0 * 61 + j0

    grid1 = husimi_grid(1, model, pmap, re_axis, im_axis)  # step alpha = 1
    assert re_axis[grid1[i0].argmax()] == pytest.approx(1.0)
    assert grid1.max() == pytest.approx(grid0.max())  # translation covariance


def test_husimi_state_weighted_sum():
    model = OverlapModel(2.0)
    pmap = PhaseSpaceMap(2.0)
    grid = LatticeGrid(32)
    st_ = WalkState.localized(grid, 2, Spinor.up(), basis=BasisTag.ALPHA)
    re_axis = np.linspace(-4, 4, 81)
    out = husimi_grid(st_, model, pmap, re_axis, np.array([0.0]))
    alpha2 = 2 * np.sqrt(2) / 2
    assert re_axis[out[0].argmax()] == pytest.approx(alpha2, abs=0.1)
    with pytest.raises(SigmaZeroError):
        husimi_grid(0, OverlapModel(0.0), pmap, re_axis, np.array([0.0]))
