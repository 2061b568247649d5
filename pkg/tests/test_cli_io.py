import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from nqwalk.cli import ExperimentConfig, main, parse_angle, parse_coin, parse_spinor
from nqwalk.errors import ConfigError


@pytest.fixture()
def runner():
    return CliRunner()


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# --- config parsing ----------------------------------------------------------


def test_parse_angle_accepts_pi_expressions():
    assert parse_angle("pi/10") == pytest.approx(np.pi / 10)
    assert parse_angle("-pi/2") == pytest.approx(-np.pi / 2)
    assert parse_angle("0.25") == 0.25
    with pytest.raises(ConfigError):
        parse_angle("import os")
    with pytest.raises(ConfigError):
        parse_angle("")


def test_parse_coin_variants():
    np.testing.assert_allclose(
        parse_coin("rotation:pi/4").matrix, parse_coin("experimental").matrix, atol=1e-12
    )
    parse_coin("hadamard")
    parse_coin("identity")
    with pytest.raises(ConfigError):
        parse_coin("grover")


def test_parse_spinor():
    sp = parse_spinor(("1", "1j"))
    assert sp.plus == 1.0 and sp.minus == 1j
    with pytest.raises(ConfigError):
        parse_spinor(("0", "0"))
    with pytest.raises(ConfigError):
        parse_spinor(("abc", "0"))


def test_experiment_config_round_trip():
    cfg = ExperimentConfig(
        command="walk",
        coin="rotation:0.7",
        sigma=2.5,
        steps=42,
        theta=0.1,
        coin_state=("0.6", "0.8j"),
        grid_size=256,
        output="x.csv",
        format="svg",
        thetas=(0.0, 0.5),
    )
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


# --- walk command ------------------------------------------------------------


def test_walk_orthogonal_hadamard_final_row_peaks(runner, tmp_path):
    out = tmp_path / "walk.csv"
    res = runner.invoke(
        main,
        ["walk", "--coin", "hadamard", "--sigma", "0", "--steps", "150",
         "--record-every", "150", "-o", str(out)],
    )
    assert res.exit_code == 0, res.output
    rows = [r for r in read_csv(out) if r["t"] == "150"]
    xs = np.array([int(r["x"]) for r in rows])
    ps = np.array([float(r["P"]) for r in rows])
    assert ps.sum() == pytest.approx(1.0, abs=1e-10)
    expected = 150 / np.sqrt(2)
    for sign in (+1, -1):
        centre = sign * expected
        window = np.abs(xs - centre) <= 6
        inner = (np.abs(xs - centre) > 12) & (np.abs(xs - centre) <= 45) & (np.abs(xs) < abs(centre))
        # caustic bump clearly dominates the fringes just inside it
        assert ps[window].max() > 1.5 * ps[inner].max()


def test_walk_zero_steps(runner, tmp_path):
    out = tmp_path / "w0.csv"
    res = runner.invoke(main, ["walk", "--steps", "0", "--sigma", "1.5", "-o", str(out)])
    assert res.exit_code == 0
    assert {r["t"] for r in read_csv(out)} == {"0"}


def test_walk_json_format(runner, tmp_path):
    out = tmp_path / "w.json"
    res = runner.invoke(
        main, ["walk", "--steps", "10", "--sigma", "1", "-o", str(out), "--format", "json"]
    )
    assert res.exit_code == 0
    payload = json.loads(out.read_text())
    assert [row["t"] for row in payload["rows"]] == list(range(11))
    assert len(payload["x"]) == len(payload["rows"][0]["P"])


def test_walk_svg_written_alongside_csv(runner, tmp_path):
    out = tmp_path / "w.csv"
    res = runner.invoke(
        main, ["walk", "--steps", "20", "--sigma", "2", "-o", str(out), "--format", "svg"]
    )
    assert res.exit_code == 0
    svg = tmp_path / "w.svg"
    assert out.exists() and svg.exists()
    head = svg.read_text()[:300]
    assert "<?xml" in head or "<svg" in head


def test_walk_deterministic_output(runner, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        res = runner.invoke(
            main, ["walk", "--steps", "25", "--sigma", "1.5", "--theta", "pi/7", "-o", str(out)]
        )
        assert res.exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_walk_config_file_with_flag_override(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"coin": "experimental", "sigma": 8.0, "steps": 40}))
    out = tmp_path / "w.csv"
    res = runner.invoke(
        main, ["walk", "--config", str(cfg), "--steps", "10", "-o", str(out)]
    )
    assert res.exit_code == 0
    assert max(int(r["t"]) for r in read_csv(out)) == 10  # flag wins over file


def test_walk_rejects_bad_config(runner, tmp_path):
    res = runner.invoke(main, ["walk", "--sigma", "-1"])
    assert res.exit_code == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    res = runner.invoke(main, ["walk", "--config", str(cfg)])
    assert res.exit_code == 2
    res = runner.invoke(main, ["walk", "--steps", "10", "--format", "json", "--coin", "bogus"])
    assert res.exit_code == 2


def test_walk_boundary_overflow_exit_code(runner, tmp_path):
    out = tmp_path / "w.csv"
    res = runner.invoke(
        main, ["walk", "--steps", "200", "--grid-size", "64", "-o", str(out)]
    )
    assert res.exit_code == 3


# --- dispersion command ------------------------------------------------------


def test_dispersion_hadamard_pins(runner, tmp_path):
    out = tmp_path / "d.csv"
    res = runner.invoke(main, ["dispersion", "--coin", "hadamard", "-o", str(out)])
    assert res.exit_code == 0
    rows = read_csv(out)
    assert len(rows) == 4096
    at_zero = min(rows, key=lambda r: abs(float(r["p"])))
    vs = sorted((float(at_zero["v1"]), float(at_zero["v2"])))
    np.testing.assert_allclose(vs, [-1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-6)


def test_dispersion_experimental_pin(runner, tmp_path):
    out = tmp_path / "d.csv"
    res = runner.invoke(main, ["dispersion", "--coin", "experimental", "-o", str(out)])
    assert res.exit_code == 0
    at_zero = min(read_csv(out), key=lambda r: abs(float(r["p"])))
    assert abs(float(at_zero["v1"])) < 1e-6 and abs(float(at_zero["v2"])) < 1e-6


def test_dispersion_identity_coin_linear(runner, tmp_path):
    out = tmp_path / "d.csv"
    res = runner.invoke(
        main, ["dispersion", "--coin", "identity", "--grid-size", "256", "-o", str(out)]
    )
    assert res.exit_code == 0
    rows = read_csv(out)
    p = np.array([float(r["p"]) for r in rows])
    w1 = np.array([float(r["omega1"]) for r in rows])
    w2 = np.array([float(r["omega2"]) for r in rows])

    def wrap(x):
        return (x + np.pi) % (2 * np.pi) - np.pi

    err_a = max(np.abs(wrap(w1 - p)).max(), np.abs(wrap(w2 + p)).max())
    err_b = max(np.abs(wrap(w1 + p)).max(), np.abs(wrap(w2 - p)).max())
    assert min(err_a, err_b) < 1e-10


# --- asymptotic command ------------------------------------------------------


def test_asymptotic_csv_masses(runner, tmp_path):
    out = tmp_path / "a.csv"
    res = runner.invoke(
        main, ["asymptotic", "--coin", "hadamard", "--sigma", "4", "-o", str(out)]
    )
    assert res.exit_code == 0
    rows = read_csv(out)
    assert len(rows) == 401
    mass = np.array([float(r["mass"]) for r in rows])
    mid = np.array([(float(r["q_lo"]) + float(r["q_hi"])) / 2 for r in rows])
    assert mass.sum() == pytest.approx(1.0, abs=1e-10)
    assert abs(abs(mid[mass.argmax()]) - 1 / np.sqrt(2)) < 0.02


# --- bloch command -----------------------------------------------------------


def test_bloch_default_scenario_csv(runner, tmp_path):
    out = tmp_path / "b.csv"
    res = runner.invoke(main, ["bloch", "-o", str(out), "--format", "svg"])
    assert res.exit_code == 0
    rows = read_csv(out)
    assert len(rows) == 101
    n = np.array([float(r["N_expect"]) for r in rows])
    assert n[0] == pytest.approx(0.0, abs=1e-12)
    drive = n[20:66]
    assert 0.975 <= drive.min() <= 1.625
    assert 2.025 <= drive.max() <= 3.375
    assert (tmp_path / "b.svg").exists()


# --- probe command -----------------------------------------------------------


def test_probe_csv_schema_and_errors(runner, tmp_path):
    out = tmp_path / "p.csv"
    res = runner.invoke(
        main,
        ["probe", "--sweep-points", "3", "--steps", "80", "--sigma", "8", "-o", str(out)],
    )
    assert res.exit_code == 0
    rows = read_csv(out)
    assert set(rows[0]) == {"theta", "v_measured", "v_theory", "error"}
    for r in rows:
        assert abs(float(r["v_measured"]) - float(r["v_theory"])) == pytest.approx(
            float(r["error"]), abs=1e-12
        )


def test_probe_explicit_theta_list(runner, tmp_path):
    out = tmp_path / "p.csv"
    res = runner.invoke(
        main, ["probe", "--thetas", "0,-pi/2", "--steps", "80", "-o", str(out)]
    )
    assert res.exit_code == 0
    thetas = {round(float(r["theta"]), 6) for r in read_csv(out)}
    assert thetas == {0.0, round(-np.pi / 2, 6)}


# --- validate command ----------------------------------------------------------


def test_validate_passes(runner):
    res = runner.invoke(main, ["validate"])
    assert res.exit_code == 0, res.output
    assert "all 9 checks passed" in res.output
    assert res.output.count("[PASS]") == 9


# --- husimi serialization ------------------------------------------------------


def test_husimi_csv_axes(tmp_path):
    from nqwalk.bloch import PhaseSpaceMap, husimi_grid
    from nqwalk.io import write_husimi_csv
    from nqwalk.overlap import OverlapModel

    re_axis = np.linspace(-2, 2, 5)
    im_axis = np.linspace(-1, 1, 3)
    grid = husimi_grid(0, OverlapModel(2.0), PhaseSpaceMap(2.0), re_axis, im_axis)
    path = tmp_path / "h.csv"
    write_husimi_csv(grid, re_axis, im_axis, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0].startswith("im\\re,")
    assert len(lines) == 4  # header + one row per im value
    header_vals = [float(v) for v in lines[0].split(",")[1:]]
    np.testing.assert_allclose(header_vals, re_axis)
    row0 = [float(v) for v in lines[1].split(",")]
    assert row0[0] == -1.0
    np.testing.assert_allclose(row0[1:], grid[0], rtol=1e-12)
