"""Run configuration: a small line-oriented ``key = value`` format.

A config file is UTF-8 text, one assignment per line; ``#`` starts a
comment and blank lines are ignored.  Setting ``scenario`` loads a named
preset first; explicit keys in the file override the preset, and CLI
flags override both.  The full key table with defaults and ranges lives
in docs/config-schema.md.

With no keys at all the config is a valid flat-bottom still-water run
with the documented defaults (g = 1, cfl = 0.5, L = 20, n = 512, T = 1).
"""

from dataclasses import dataclass, field

import math

from .errors import ConfigError
from .grid import Grid
from .scenarios import (PRESET_PARAMS, SCENARIO_NAMES, Scenario,
                        make_bathymetry, make_initial)

__all__ = ["RunConfig", "parse_config", "build_run"]

FORMULATIONS = ("eulerian", "lagrangian", "twin")

_STRING_KEYS = {"scenario", "bathymetry.family", "initial.family",
                "run.formulation"}
_INT_KEYS = {"grid.n", "run.seed", "bathymetry.k", "initial.mode"}
_BOOL_KEYS = {"run.guard_band", "initial.launch"}
_FIXED_KEYS = {"scenario", "grid.L", "grid.n", "physics.g", "run.cfl",
               "run.T", "run.cadence", "run.formulation", "run.seed",
               "run.sigma", "run.guard_band"}

# required / optional parameter names per family
_BATHY_FAMILIES = {
    "flat": (frozenset(), frozenset()),
    "sinusoidal": (frozenset({"k", "amp"}), frozenset()),
    "gaussian-bump": (frozenset({"center", "width", "height"}), frozenset()),
}
_INITIAL_FAMILIES = {
    "rest": (frozenset(), frozenset()),
    "surface-hump": (frozenset({"center", "width", "amp"}),
                     frozenset({"launch"})),
    "solitary": (frozenset({"a", "x0"}), frozenset()),
    "velocity-dipole": (frozenset({"center", "width", "amp"}), frozenset()),
    "folded-map": (frozenset({"amp"}), frozenset({"mode"})),
}


@dataclass(frozen=True)
class RunConfig:
    scenario: str = None          # preset name, or None for a custom run
    L: float = 20.0
    n: int = 512
    bathy_family: str = "flat"
    bathy_params: dict = field(default_factory=dict)
    init_family: str = "rest"
    init_params: dict = field(default_factory=dict)
    grav: float = 1.0
    cfl: float = 0.5
    T: float = 1.0
    cadence: float = 0.25
    formulation: str = "eulerian"
    seed: int = 0
    sigma: float = 1.0            # H^sigma diagnostic norm order
    guard_band: bool = False


def _known_key(key: str) -> bool:
    if key in _FIXED_KEYS:
        return True
    for ns in ("bathymetry.", "initial."):
        if key.startswith(ns) and key[len(ns):].isidentifier():
            return True
    return False


def _parse_value(key: str, text: str, problems: list):
    if key in _STRING_KEYS:
        return text
    if key in _BOOL_KEYS:
        low = text.lower()
        if low in ("true", "false"):
            return low == "true"
        problems.append(f"{key}: expected true or false, got '{text}'")
        return None
    if key in _INT_KEYS:
        try:
            return int(text, 10)
        except ValueError:
            problems.append(f"{key}: expected an integer, got '{text}'")
            return None
    try:
        value = float(text)
    except ValueError:
        problems.append(f"{key}: expected a number, got '{text}'")
        return None
    if not math.isfinite(value):
        problems.append(f"{key}: value must be finite, got '{text}'")
        return None
    return value


def _read_lines(text: str, problems: list) -> dict:
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', "
                            f"got '{line}'")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            problems.append(f"line {lineno}: empty key or value")
            continue
        if not _known_key(key):
            problems.append(f"{key}: unknown key")
            continue
        if key in seen:
            problems.append(f"{key}: assigned twice "
                            f"(lines {seen[key][1]} and {lineno})")
            continue
        seen[key] = (value, lineno)
    return {k: v for k, (v, _) in seen.items()}


def _check_family(values: dict, namespace: str, table: dict, problems: list):
    family = values.get(namespace + ".family")
    if family not in table:
        problems.append(f"{namespace}.family: unknown family '{family}' "
                        f"(choose from {', '.join(sorted(table))})")
        return {}
    required, optional = table[family]
    params = {}
    given = {k.split(".", 1)[1] for k in values
             if k.startswith(namespace + ".")} - {"family"}
    for name in sorted(given - required - optional):
        problems.append(f"{namespace}.{name}: not a parameter of "
                        f"family '{family}'")
    for name in sorted(required - given):
        problems.append(f"{namespace}.{name}: required by family '{family}'")
    for name in given & (required | optional):
        params[name] = values[f"{namespace}.{name}"]
    return params


def _check_range(values: dict, key: str, lo, hi, problems: list,
                 *, lo_open=False):
    v = values[key]
    ok = (lo < v if lo_open else lo <= v) and v <= hi
    if not ok:
        left = "(" if lo_open else "["
        problems.append(f"{key}: {v:g} outside {left}{lo:g}, {hi:g}]")
    return ok


def parse_config(text: str, overrides: dict = None) -> RunConfig:
    """Parse and validate config text, returning a RunConfig.

    ``overrides`` maps config keys to raw value strings (the CLI flags);
    they win over both the file and any scenario preset.  All violations
    are collected and raised together in one ConfigError.
    """
    problems = []
    raw = _read_lines(text, problems)
    for key, value in (overrides or {}).items():
        if not _known_key(key):
            problems.append(f"{key}: unknown key")
        else:
            raw[key] = value

    typed = {}
    for key, value in raw.items():
        parsed = _parse_value(key, value, problems)
        if parsed is not None:
            typed[key] = parsed

    scenario = typed.pop("scenario", None)
    if scenario is not None and scenario not in SCENARIO_NAMES:
        problems.append(f"scenario: unknown scenario '{scenario}' "
                        f"(choose from {', '.join(SCENARIO_NAMES)})")
        scenario = None
    base = dict(PRESET_PARAMS[scenario]) if scenario else {}
    # an explicit family switch discards the preset's family parameters
    for ns in ("bathymetry", "initial"):
        key = ns + ".family"
        if key in typed and typed[key] != base.get(key):
            base = {k: v for k, v in base.items()
                    if not k.startswith(ns + ".")}
    values = {**base, **typed}

    defaults = {"grid.L": 20.0, "grid.n": 512, "bathymetry.family": "flat",
                "initial.family": "rest", "physics.g": 1.0, "run.cfl": 0.5,
                "run.T": 1.0, "run.formulation": "eulerian", "run.seed": 0,
                "run.sigma": 1.0, "run.guard_band": False}
    for key, default in defaults.items():
        values.setdefault(key, default)
    values.setdefault("run.cadence", values["run.T"] / 4.0)

    # keys that failed to parse sit at their defaults here; they already
    # carry a violation of their own, so the checks below still run and
    # the caller sees every problem at once
    _check_range(values, "grid.L", 1.0, 1e6, problems)
    n = values["grid.n"]
    if not (16 <= n <= 65536 and n & (n - 1) == 0):
        problems.append(f"grid.n: {n} is not a power of two in [16, 65536]")
    _check_range(values, "physics.g", 0.0, 1e3, problems, lo_open=True)
    _check_range(values, "run.cfl", 0.0, 1.0, problems, lo_open=True)
    _check_range(values, "run.T", 0.0, 1e4, problems, lo_open=True)
    if _check_range(values, "run.cadence", 0.0, 1e4, problems, lo_open=True):
        if values["run.cadence"] > values["run.T"]:
            problems.append(f"run.cadence: {values['run.cadence']:g} exceeds "
                            f"run.T = {values['run.T']:g}")
    _check_range(values, "run.sigma", 0.0, 3.0, problems)
    if not 0 <= values["run.seed"] < 2 ** 64:
        problems.append(f"run.seed: {values['run.seed']} is not a u64")
    if values["run.formulation"] not in FORMULATIONS:
        problems.append(f"run.formulation: '{values['run.formulation']}' "
                        f"(choose from {', '.join(FORMULATIONS)})")

    bathy_params = _check_family(values, "bathymetry", _BATHY_FAMILIES,
                                 problems)
    init_params = _check_family(values, "initial", _INITIAL_FAMILIES,
                                problems)

    bfam = values["bathymetry.family"]
    ifam = values["initial.family"]
    if bfam == "gaussian-bump" and "height" in bathy_params:
        if not bathy_params["height"] < 1.0:
            problems.append(
                f"bathymetry.height: {bathy_params['height']:g} >= "
                f"still-water depth 1; the water column would pinch off "
                f"(the initial depth must stay positive everywhere)")
    if ifam == "solitary" and bfam != "flat":
        problems.append("initial.family: solitary data requires "
                        "bathymetry.family = flat")
    if ifam == "folded-map" and values["run.formulation"] != "lagrangian":
        problems.append("initial.family: folded-map starts from a flow-map "
                        "displacement and requires run.formulation = "
                        "lagrangian")

    if problems:
        raise ConfigError(problems)
    return RunConfig(scenario=scenario, L=values["grid.L"], n=n,
                     bathy_family=bfam, bathy_params=bathy_params,
                     init_family=ifam, init_params=init_params,
                     grav=values["physics.g"], cfl=values["run.cfl"],
                     T=values["run.T"], cadence=values["run.cadence"],
                     formulation=values["run.formulation"],
                     seed=values["run.seed"], sigma=values["run.sigma"],
                     guard_band=values["run.guard_band"])


def build_run(cfg: RunConfig) -> Scenario:
    """Construct the grid, bathymetry, and initial fields for a config.

    Raises ConfigError if the constructed depth is not positive or the
    initial data fails the edge-decay gate.
    """
    grid = Grid(cfg.L, cfg.n)
    bathy = make_bathymetry(cfg.bathy_family, cfg.bathy_params, cfg.L)
    initial = make_initial(cfg.init_family, cfg.init_params, grid, bathy,
                           grav=cfg.grav)
    return Scenario(cfg.scenario or "custom", grid, bathy, initial,
                    grav=cfg.grav, cfl=cfg.cfl, T=cfg.T,
                    cadence=cfg.cadence, formulation=cfg.formulation)
