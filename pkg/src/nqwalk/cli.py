"""Command-line surface: reproducible experiment runs with CSV/JSON output
and optional SVG figures rendered next to the numeric files.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical guard trip (probability mass hit the lattice boundary).
The environment variable NQWALK_THREADS caps internal parallelism
(0 or unset selects auto).
"""

from __future__ import annotations

import dataclasses
import functools
import json
import math
import re
import sys
from pathlib import Path

import click
import numpy as np

from . import io as nio
from . import plotting
from .bloch import BlochConfig, probe_dispersion, run_bloch
from .core import (
    LatticeGrid,
    Spinor,
    coin_experimental,
    coin_hadamard,
    coin_identity,
    coin_rotation,
)
from .errors import BoundaryOverflowError, ConfigError, WalkError
from .evolution import ShiftSchedule, evolve
from .overlap import OverlapModel, initial_state
from .spectral import asymptotic_distribution, eigensystem, group_velocity, walk_symbol
from .validate import run_validation

_ANGLE_RE = re.compile(r"^[0-9pi+\-*/(). ]*$")


def parse_angle(text: str) -> float:
    """Parse an angle in radians; accepts literals like 'pi/10' or '-pi/2'."""
    s = str(text).strip()
    if not s:
        raise ConfigError("empty angle")
    if not _ANGLE_RE.match(s) or "**" in s:
        raise ConfigError(f"cannot parse angle {text!r}")
    try:
        return float(eval(s.replace("pi", repr(math.pi)), {"__builtins__": {}}, {}))
    except Exception as exc:
        raise ConfigError(f"cannot parse angle {text!r}: {exc}") from None


def parse_coin(name: str):
    s = str(name).strip().lower()
    if s == "experimental":
        return coin_experimental()
    if s == "hadamard":
        return coin_hadamard()
    if s == "identity":
        return coin_identity()
    if s.startswith("rotation:"):
        return coin_rotation(parse_angle(s.split(":", 1)[1]))
    raise ConfigError(
        f"unknown coin {name!r}; use experimental, hadamard, identity or rotation:<angle>"
    )


def parse_spinor(pair) -> Spinor:
    try:
        plus, minus = (complex(str(v).replace(" ", "")) for v in pair)
    except ValueError as exc:
        raise ConfigError(f"cannot parse coin state {pair!r}: {exc}") from None
    sp = Spinor(plus, minus)
    if sp.norm() <= 0:
        raise ConfigError("coin state must have positive norm")
    return sp


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Resolved parameter record of one CLI invocation."""

    command: str
    coin: str = "hadamard"
    sigma: float = 0.0
    steps: int = 100
    theta: float = 0.0
    delta_theta: float = 0.0
    t_on: int = 0
    t_off: int = 0
    coin_state: tuple[str, str] = ("1", "0")
    grid_size: int | None = None
    record_every: int = 1
    bins: int = 401
    sweep_points: int = 17
    thetas: tuple[float, ...] | None = None
    freeze: bool = True
    seed: int = 7
    output: str = ""
    format: str = "csv"

    def to_json(self) -> str:
        d = dataclasses.asdict(self)
        d["coin_state"] = list(d["coin_state"])
        d["thetas"] = list(d["thetas"]) if d["thetas"] is not None else None
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        d = json.loads(text)
        if "coin_state" in d and d["coin_state"] is not None:
            d["coin_state"] = tuple(d["coin_state"])
        if "thetas" in d and d["thetas"] is not None:
            d["thetas"] = tuple(d["thetas"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad config file: {exc}") from None


def _resolve(command: str, config_path, defaults: dict, flags: dict) -> ExperimentConfig:
    """Merge hard defaults, config-file values and explicit flags (flags win)."""
    merged = dict(defaults)
    if config_path:
        try:
            file_cfg = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
        unknown = set(file_cfg) - {f.name for f in dataclasses.fields(ExperimentConfig)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    merged.update({k: v for k, v in flags.items() if v is not None})
    merged["command"] = command
    if "coin_state" in merged and merged["coin_state"] is not None:
        merged["coin_state"] = tuple(str(v) for v in merged["coin_state"])
    if isinstance(merged.get("thetas"), str):
        merged["thetas"] = tuple(parse_angle(v) for v in merged["thetas"].split(","))
    elif merged.get("thetas") is not None:
        merged["thetas"] = tuple(float(v) for v in merged["thetas"])
    try:
        cfg = ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: ExperimentConfig) -> None:
    if cfg.sigma < 0 or not math.isfinite(cfg.sigma):
        raise ConfigError(f"sigma must be >= 0, got {cfg.sigma}")
    if cfg.steps < 0:
        raise ConfigError(f"steps must be >= 0, got {cfg.steps}")
    if cfg.record_every < 1:
        raise ConfigError("record-every must be >= 1")
    if cfg.bins < 2:
        raise ConfigError("bins must be >= 2")
    if cfg.format not in ("csv", "json", "svg"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    if cfg.format == "json" and cfg.command != "walk":
        raise ConfigError("json output is only available for the walk command")
    if cfg.grid_size is not None and (cfg.grid_size < 4 or cfg.grid_size % 2):
        raise ConfigError("grid-size must be an even integer >= 4")
    if cfg.command == "bloch" and not (0 <= cfg.t_on <= cfg.t_off <= cfg.steps):
        raise ConfigError("need 0 <= t_on <= t_off <= steps")
    if cfg.command == "probe" and cfg.sweep_points < 1:
        raise ConfigError("sweep-points must be >= 1")
    parse_coin(cfg.coin)
    parse_spinor(cfg.coin_state)


def _walk_grid(cfg: ExperimentConfig) -> LatticeGrid:
    if cfg.grid_size:
        return LatticeGrid(cfg.grid_size)
    return LatticeGrid.for_walk(cfg.steps, cfg.sigma)


def _figure_path(output: str) -> Path:
    return Path(output).with_suffix(".svg")


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except BoundaryOverflowError as exc:
            click.echo(f"numerical guard: {exc}", err=True)
            sys.exit(3)
        except WalkError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="JSON file with config values; flags override it.")(fn)
    fn = click.option("--output", "-o", default=None, help="Output file path.")(fn)
    fn = click.option("--format", "format", type=click.Choice(["csv", "json", "svg"]),
                      default=None, help="csv (default), json, or svg (figure next to the CSV).")(fn)
    return fn


@click.group()
def main():
    """Simulator for one-dimensional quantum walks whose position states
    overlap like coherent states (Gaussian overlaps of width sigma)."""


@main.command("walk")
@click.option("--coin", default=None, help="experimental | hadamard | identity | rotation:<angle>")
@click.option("--sigma", type=float, default=None, help="Overlap width (0 = orthogonal).")
@click.option("--steps", type=int, default=None)
@click.option("--theta", default=None, help="Constant momentum shift per step (radians).")
@click.option("--coin-state", nargs=2, default=None, help="Two complex amplitudes, e.g. 1 0.")
@click.option("--grid-size", type=int, default=None)
@click.option("--record-every", type=int, default=None)
@_common_options
@_guarded
def cmd_walk(coin, sigma, steps, theta, coin_state, grid_size, record_every, config_path, output, format):
    """Run a walk and write the recorded position distributions."""
    cfg = _resolve(
        "walk",
        config_path,
        {"coin": "hadamard", "sigma": 0.0, "steps": 100, "output": "walk.csv"},
        {
            "coin": coin,
            "sigma": sigma,
            "steps": steps,
            "theta": parse_angle(theta) if theta is not None else None,
            "coin_state": coin_state,
            "grid_size": grid_size,
            "record_every": record_every,
            "output": output,
            "format": format,
        },
    )
    grid = _walk_grid(cfg)
    model = OverlapModel(cfg.sigma)
    state0 = initial_state(model, grid, parse_spinor(cfg.coin_state))
    traj = evolve(
        state0,
        parse_coin(cfg.coin),
        cfg.steps,
        ShiftSchedule.constant(cfg.theta),
        record_every=cfg.record_every,
    )
    if cfg.format == "json":
        nio.write_trajectory_json(traj, cfg.output)
    else:
        nio.write_trajectory_csv(traj, cfg.output)
        if cfg.format == "svg":
            plotting.save_figure(plotting.trajectory_figure(traj), _figure_path(cfg.output))
    click.echo(f"wrote {cfg.output}", err=True)


@main.command("dispersion")
@click.option("--coin", default=None)
@click.option("--theta", default=None, help="Momentum offset folded into the walk symbol.")
@click.option("--grid-size", type=int, default=None)
@_common_options
@_guarded
def cmd_dispersion(coin, theta, grid_size, config_path, output, format):
    """Write the dispersion branches and group velocities over momentum."""
    cfg = _resolve(
        "dispersion",
        config_path,
        {"coin": "hadamard", "grid_size": 4096, "output": "dispersion.csv"},
        {
            "coin": coin,
            "theta": parse_angle(theta) if theta is not None else None,
            "grid_size": grid_size,
            "output": output,
            "format": format,
        },
    )
    spec = group_velocity(
        eigensystem(walk_symbol(parse_coin(cfg.coin), LatticeGrid(cfg.grid_size), cfg.theta))
    )
    nio.write_dispersion_csv(spec, cfg.output)
    if cfg.format == "svg":
        plotting.save_figure(plotting.dispersion_figure(spec), _figure_path(cfg.output))
    click.echo(f"wrote {cfg.output}", err=True)


@main.command("asymptotic")
@click.option("--coin", default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--theta", default=None)
@click.option("--bins", type=int, default=None)
@click.option("--coin-state", nargs=2, default=None)
@click.option("--grid-size", type=int, default=None)
@_common_options
@_guarded
def cmd_asymptotic(coin, sigma, theta, bins, coin_state, grid_size, config_path, output, format):
    """Write the long-time scaled position distribution P(q), q = x/t."""
    cfg = _resolve(
        "asymptotic",
        config_path,
        {"coin": "hadamard", "sigma": 4.0, "grid_size": 4096, "output": "asymptotic.csv"},
        {
            "coin": coin,
            "sigma": sigma,
            "theta": parse_angle(theta) if theta is not None else None,
            "bins": bins,
            "coin_state": coin_state,
            "grid_size": grid_size,
            "output": output,
            "format": format,
        },
    )
    spec = group_velocity(
        eigensystem(walk_symbol(parse_coin(cfg.coin), LatticeGrid(cfg.grid_size), cfg.theta))
    )
    dist = asymptotic_distribution(
        spec, OverlapModel(cfg.sigma), parse_spinor(cfg.coin_state), bins=cfg.bins
    )
    nio.write_asymptotic_csv(dist, cfg.output)
    if cfg.format == "svg":
        plotting.save_figure(plotting.asymptotic_figure(dist), _figure_path(cfg.output))
    click.echo(f"wrote {cfg.output}", err=True)


@main.command("bloch")
@click.option("--coin", default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--steps", type=int, default=None)
@click.option("--delta-theta", default=None, help="Momentum-shift increment per driven step.")
@click.option("--t-on", type=int, default=None)
@click.option("--t-off", type=int, default=None)
@click.option("--freeze/--no-freeze", "freeze", default=None,
              help="Freeze the accumulated shift after t-off (default) or reset it to zero.")
@click.option("--coin-state", nargs=2, default=None)
@click.option("--grid-size", type=int, default=None)
@_common_options
@_guarded
def cmd_bloch(coin, sigma, steps, delta_theta, t_on, t_off, freeze, coin_state, grid_size,
              config_path, output, format):
    """Drive the walk through its band to produce position oscillations."""
    cfg = _resolve(
        "bloch",
        config_path,
        {
            "coin": "hadamard",
            "sigma": 14.0,
            "steps": 100,
            "delta_theta": math.pi / 10,
            "t_on": 20,
            "t_off": 65,
            "output": "bloch.csv",
        },
        {
            "coin": coin,
            "sigma": sigma,
            "steps": steps,
            "delta_theta": parse_angle(delta_theta) if delta_theta is not None else None,
            "t_on": t_on,
            "t_off": t_off,
            "freeze": freeze,
            "coin_state": coin_state,
            "grid_size": grid_size,
            "output": output,
            "format": format,
        },
    )
    bcfg = BlochConfig(
        delta_theta=cfg.delta_theta,
        t_on=cfg.t_on,
        t_off=cfg.t_off,
        steps=cfg.steps,
        sigma=cfg.sigma,
        coin=parse_coin(cfg.coin),
        coin_state=parse_spinor(cfg.coin_state),
        freeze=cfg.freeze,
        grid_size=cfg.grid_size,
    )
    result = run_bloch(bcfg)
    nio.write_bloch_csv(result, cfg.output)
    if cfg.format == "svg":
        plotting.save_figure(plotting.bloch_figure(result), _figure_path(cfg.output))
    click.echo(f"wrote {cfg.output}", err=True)


@main.command("probe")
@click.option("--coin", default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--steps", type=int, default=None)
@click.option("--sweep-points", type=int, default=None,
              help="Number of evenly spaced shifts over [-pi, pi].")
@click.option("--thetas", default=None, help="Comma-separated explicit shift list (radians).")
@_common_options
@_guarded
def cmd_probe(coin, sigma, steps, sweep_points, thetas, config_path, output, format):
    """Sweep the momentum shift and compare measured against predicted
    peak velocities."""
    cfg = _resolve(
        "probe",
        config_path,
        {"coin": "hadamard", "sigma": 8.0, "steps": 200, "output": "probe.csv"},
        {
            "coin": coin,
            "sigma": sigma,
            "steps": steps,
            "sweep_points": sweep_points,
            "thetas": thetas,
            "output": output,
            "format": format,
        },
    )
    sweep = (
        cfg.thetas
        if cfg.thetas is not None
        else tuple(np.linspace(-math.pi, math.pi, cfg.sweep_points))
    )
    samples = probe_dispersion(
        parse_coin(cfg.coin), OverlapModel(cfg.sigma), sweep, steps=cfg.steps
    )
    nio.write_probe_csv(samples, cfg.output)
    if cfg.format == "svg":
        plotting.save_figure(plotting.probe_figure(samples), _figure_path(cfg.output))
    click.echo(f"wrote {cfg.output}", err=True)


@main.command("validate")
@click.option("--seed", type=int, default=7, show_default=True)
@_guarded
def cmd_validate(seed):
    """Run the property and oracle suite; non-zero exit on any failure."""
    results = run_validation(seed=seed)
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        click.echo(f"[{status}] {r.name:<{width}}  {r.detail}")
        failed += 0 if r.passed else 1
    if failed:
        click.echo(f"{failed} of {len(results)} checks failed", err=True)
        sys.exit(1)
    click.echo(f"all {len(results)} checks passed")


if __name__ == "__main__":
    main()
