"""Run configuration: an INI file with a handful of sections.

Grammar (every key optional, defaults shown)::

    [reaction]
    kind = logistic            # logistic | sine | polynomial
    coefficients = 0, 1, -1    # f(u) = sum c_k u^k, only for kind = polynomial

    [run]
    delta = 0.1                # one value or a comma-separated list
    eta =                      # auxiliary weight rate; default eta_*(0)/4
    output_dir = out
    seed = 0

    [grid]
    x_min = -40
    x_max = 60
    n = 2001
    order = 2                  # finite-difference order, 2 or 4

    [front]
    step = 0.02                # continuation increment in delta

    [evans]
    radius = 0.2
    n_radii = 5
    threshold = 1e-3

    [scan]
    r_ball = 0.04

    [sim]
    x_min = -50
    x_max = 400
    n = 9001
    dt = 0.05
    t_end = 150
    window = 10, 150
    preset = steep             # steep | gaussian
    speed_tol = 0.02
    log_tol = 0.15
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EFKPPError, ParameterError
from .operators import MAX_H, Grid
from .reaction import ReactionTerm, logistic, polynomial, sine, validate


class ConfigError(EFKPPError):
    """Malformed or inadmissible configuration; the message names the key."""


@dataclass
class SimConfig:
    grid: Grid
    dt: float = 0.05
    t_end: float = 150.0
    window: tuple = (10.0, 150.0)
    preset: str = "steep"
    speed_tol: float = 0.02
    log_tol: float = 0.15


@dataclass
class RunConfig:
    reaction: ReactionTerm
    deltas: list
    grid: Grid
    eta: float | None = None
    output_dir: Path = Path("out")
    seed: int = 0
    front_step: float = 0.02
    gamma_radius: float = 0.2
    gamma_n_radii: int = 5
    threshold: float = 1e-3
    r_ball: float = 0.04
    sim: SimConfig = field(default_factory=lambda: SimConfig(Grid(-50.0, 400.0, 9001)))


def _floats(text: str, key: str) -> list:
    try:
        return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from exc


def _get(cp, section, key, conv, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key).strip()
    if raw == "":
        return default
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def _grid(cp, section, defaults) -> Grid:
    x_min = _get(cp, section, "x_min", float, defaults[0])
    x_max = _get(cp, section, "x_max", float, defaults[1])
    n = _get(cp, section, "n", int, defaults[2])
    order = _get(cp, section, "order", int, defaults[3])
    try:
        g = Grid(x_min, x_max, n, order)
    except ParameterError as exc:
        raise ConfigError(f"[{section}] x_min/x_max/n/order: {exc}") from exc
    if g.h > MAX_H:
        raise ConfigError(f"[{section}] n: spacing {g.h:.3g} exceeds {MAX_H}")
    return g


def _reaction(cp) -> ReactionTerm:
    kind = _get(cp, "reaction", "kind", str, "logistic").lower()
    if kind == "logistic":
        r = logistic()
    elif kind == "sine":
        r = sine()
    elif kind == "polynomial":
        if not cp.has_option("reaction", "coefficients"):
            raise ConfigError("[reaction] coefficients: required for kind = polynomial")
        r = polynomial(_floats(cp.get("reaction", "coefficients"), "[reaction] coefficients"))
    else:
        raise ConfigError(f"[reaction] kind: unknown reaction {kind!r}")
    problems = validate(r)
    if problems:
        raise ConfigError("[reaction] " + "; ".join(problems))
    return r


KNOWN = {
    "reaction": {"kind", "coefficients"},
    "run": {"delta", "eta", "output_dir", "seed"},
    "grid": {"x_min", "x_max", "n", "order"},
    "front": {"step"},
    "evans": {"radius", "n_radii", "threshold"},
    "scan": {"r_ball"},
    "sim": {"x_min", "x_max", "n", "order", "dt", "t_end", "window", "preset", "speed_tol", "log_tol"},
}


def parse(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    for section in cp.sections():
        if section not in KNOWN:
            raise ConfigError(f"[{section}]: unknown section")
        for key in cp.options(section):
            if key not in KNOWN[section]:
                raise ConfigError(f"[{section}] {key}: unknown key")

    reaction = _reaction(cp)
    deltas = _floats(cp.get("run", "delta", fallback="0.1"), "[run] delta")
    if not deltas:
        raise ConfigError("[run] delta: empty list")
    eta = _get(cp, "run", "eta", float, None)
    if eta is not None and eta <= 0:
        raise ConfigError("[run] eta: must be positive")
    out = Path(_get(cp, "run", "output_dir", str, "out"))
    grid = _grid(cp, "grid", (-40.0, 60.0, 2001, 2))

    sim_grid = _grid(cp, "sim", (-50.0, 400.0, 9001, 2))
    window = tuple(_floats(cp.get("sim", "window", fallback="10, 150"), "[sim] window"))
    if len(window) != 2 or window[0] <= 0 or window[1] <= window[0]:
        raise ConfigError("[sim] window: need two increasing positive times")
    sim = SimConfig(
        grid=sim_grid,
        dt=_get(cp, "sim", "dt", float, 0.05),
        t_end=_get(cp, "sim", "t_end", float, 150.0),
        window=window,
        preset=_get(cp, "sim", "preset", str, "steep"),
        speed_tol=_get(cp, "sim", "speed_tol", float, 0.02),
        log_tol=_get(cp, "sim", "log_tol", float, 0.15),
    )
    if sim.dt <= 0 or sim.t_end <= 0:
        raise ConfigError("[sim] dt/t_end: must be positive")
    if sim.preset not in ("steep", "gaussian"):
        raise ConfigError(f"[sim] preset: unknown preset {sim.preset!r}")

    cfg = RunConfig(
        reaction=reaction,
        deltas=deltas,
        grid=grid,
        eta=eta,
        output_dir=out,
        seed=_get(cp, "run", "seed", int, 0),
        front_step=_get(cp, "front", "step", float, 0.02),
        gamma_radius=_get(cp, "evans", "radius", float, 0.2),
        gamma_n_radii=_get(cp, "evans", "n_radii", int, 5),
        threshold=_get(cp, "evans", "threshold", float, 1e-3),
        r_ball=_get(cp, "scan", "r_ball", float, 0.04),
        sim=sim,
    )
    if not 0 < cfg.gamma_radius <= 0.3:
        raise ConfigError("[evans] radius: must lie in (0, 0.3]")
    if cfg.gamma_n_radii < 1:
        raise ConfigError("[evans] n_radii: must be positive")
    if cfg.front_step <= 0:
        raise ConfigError("[front] step: must be positive")
    return cfg


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse(text)
