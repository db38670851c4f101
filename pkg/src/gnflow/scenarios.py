"""Built-in scenario families: bathymetries, initial data, presets.

All shipped scenarios keep the interesting part of the data well inside
the periodic domain.  Initial data must satisfy the edge-decay gate: the
surface elevation h + xi - swl and the velocity stay below 1e-12 in the
outer 10% bands, so periodic truncation of the whole-line problem is
inert at t = 0.  (Waves are free to reach the edges later; experiment
drivers that need a clean torus watch for that separately.)
"""

from dataclasses import dataclass

import numpy as np

from . import bathymetry
from .bathymetry import Bathymetry
from .errors import ConfigError
from .grid import Field, Grid

__all__ = ["Scenario", "SCENARIO_NAMES", "build_scenario", "make_bathymetry",
           "make_initial", "solitary_profile", "check_edge_decay",
           "InitialData"]

SCENARIO_NAMES = ("lake-at-rest", "gaussian-bump-splash", "solitary-flat",
                  "shoaling-over-bump")


@dataclass(frozen=True)
class InitialData:
    h0: Field
    u0: Field
    # flow-map displacement for probes that start off the identity map;
    # None means start from id (the normal case)
    disp0: Field = None


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: Grid
    bathy: Bathymetry
    initial: InitialData
    grav: float
    cfl: float
    T: float
    cadence: float
    formulation: str = "eulerian"

    @property
    def h0(self) -> Field:
        return self.initial.h0

    @property
    def u0(self) -> Field:
        return self.initial.u0


def _wrapped_gauss(x, L, center, width):
    # images on neighboring periods keep the profile exactly periodic
    out = np.zeros_like(x)
    for m in (-1, 0, 1):
        out += np.exp(-0.5 * ((x - center + m * L) / width) ** 2)
    return out


def solitary_profile(x, a: float, h_inf: float = 1.0, grav: float = 1.0,
                     x0: float = 0.0):
    """Classic flat-bottom traveling wave of the dispersive system.

        h = h_inf + a sech^2(kappa (x - x0)),  u = c (1 - h_inf/h),
        c = sqrt(g (h_inf + a)),  kappa = sqrt(3a) / (2 h_inf sqrt(h_inf + a))

    Returns (h, u, c, kappa).  a = 0 degenerates to still water.
    """
    c = np.sqrt(grav * (h_inf + a))
    if a == 0.0:
        x = np.asarray(x, dtype=float)
        return np.full_like(x, h_inf), np.zeros_like(x), float(c), 0.0
    kappa = np.sqrt(3.0 * a) / (2.0 * h_inf * np.sqrt(h_inf + a))
    h = h_inf + a / np.cosh(kappa * (np.asarray(x, dtype=float) - x0)) ** 2
    u = c * (1.0 - h_inf / h)
    return h, u, float(c), float(kappa)


def check_edge_decay(grid: Grid, eta_values, u_values, *,
                     band_frac: float = 0.1, tol: float = 1e-12):
    """Initial-data gate: elevation and velocity must vanish (to tol) in
    the outer bands, else periodic truncation is already visible at t=0."""
    nb = max(1, int(band_frac * grid.n))
    band = np.concatenate([np.arange(nb), np.arange(grid.n - nb, grid.n)])
    problems = []
    worst_eta = float(np.max(np.abs(np.asarray(eta_values)[band])))
    worst_u = float(np.max(np.abs(np.asarray(u_values)[band])))
    if not worst_eta <= tol:
        problems.append(f"initial surface elevation reaches {worst_eta:.2e} "
                        f"in the outer {band_frac:.0%} bands (limit {tol:g})")
    if not worst_u <= tol:
        problems.append(f"initial velocity reaches {worst_u:.2e} "
                        f"in the outer {band_frac:.0%} bands (limit {tol:g})")
    if problems:
        raise ConfigError(problems)


def make_bathymetry(family: str, params: dict, L: float) -> Bathymetry:
    if family == "flat":
        return bathymetry.flat()
    if family == "sinusoidal":
        return bathymetry.sinusoidal(L, int(params.get("k", 1)),
                                     float(params.get("amp", 0.05)))
    if family == "gaussian-bump":
        return bathymetry.gaussian_bump(L, float(params["center"]),
                                        float(params["width"]),
                                        float(params["height"]))
    raise ConfigError([f"unknown bathymetry family '{family}' "
                       f"(flat | sinusoidal | gaussian-bump)"])


def make_initial(family: str, params: dict, grid: Grid, bathy: Bathymetry,
                 swl: float = 1.0, grav: float = 1.0, *,
                 check_decay: bool = True) -> InitialData:
    """Construct (h0, u0) for a named initial-data family.

    Families: rest | surface-hump(center, width, amp[, launch]) |
    solitary(a, x0) | velocity-dipole(center, width, amp) |
    folded-map(amp[, mode]).
    """
    x = grid.x
    rest_depth = swl - bathy.xi(x)
    disp0 = None
    if family == "rest":
        h0, u0 = rest_depth, np.zeros(grid.n)
    elif family == "surface-hump":
        hump = float(params["amp"]) * _wrapped_gauss(
            x, grid.L, float(params["center"]), float(params["width"]))
        h0 = rest_depth + hump
        if params.get("launch"):
            # rightward simple-wave relation against the local rest depth
            u0 = 2.0 * (np.sqrt(grav * h0) - np.sqrt(grav * rest_depth))
        else:
            u0 = np.zeros(grid.n)
    elif family == "solitary":
        if bathy.amplitude != 0.0:
            raise ConfigError(["solitary initial data requires flat bathymetry"])
        h0, u0, _, _ = solitary_profile(x, float(params["a"]), swl, grav,
                                        float(params["x0"]))
    elif family == "velocity-dipole":
        h0 = rest_depth
        c, w = float(params["center"]), float(params["width"])
        u0 = float(params["amp"]) * (x - c) * np.exp(-0.5 * ((x - c) / w) ** 2)
    elif family == "folded-map":
        # flow-map probe: displacement steep enough to fold when amp > 1
        k = 2.0 * np.pi * int(params.get("mode", 1)) / grid.L
        disp0 = (float(params["amp"]) / k) * np.sin(k * x)
        h0, u0 = rest_depth, np.zeros(grid.n)
    else:
        raise ConfigError([f"unknown initial-data family '{family}' (rest | "
                           f"surface-hump | solitary | velocity-dipole | "
                           f"folded-map)"])

    if not np.min(h0) > 0.0:
        raise ConfigError([f"constructed initial depth is not positive "
                           f"(min h0 = {np.min(h0):.3e}); the still-water "
                           f"depth must exceed the bathymetry everywhere"])
    if check_decay and family != "folded-map":
        check_edge_decay(grid, h0 + bathy.xi(x) - swl, u0)
    return InitialData(Field(grid, h0), Field(grid, u0),
                       None if disp0 is None else Field(grid, disp0))


# wave speed of the shipped solitary preset (a = 0.2, h_inf = 1, g = 1)
_C_SOLITARY = float(np.sqrt(1.2))

# Preset values keyed by config-file keys, so the config layer can use a
# preset as a defaults overlay.  This table is the single source for the
# shipped scenario parameters.
PRESET_PARAMS = {
    "lake-at-rest": {
        "grid.L": 20.0, "grid.n": 512,
        "bathymetry.family": "sinusoidal",
        "bathymetry.k": 1, "bathymetry.amp": 0.05,
        "initial.family": "rest",
        "run.T": 1.0, "run.cadence": 0.25,
    },
    "gaussian-bump-splash": {
        "grid.L": 20.0, "grid.n": 512,
        "bathymetry.family": "gaussian-bump",
        "bathymetry.center": 12.0, "bathymetry.width": 1.0,
        "bathymetry.height": 0.2,
        "initial.family": "surface-hump",
        "initial.center": 10.0, "initial.width": 0.8, "initial.amp": 0.1,
        "run.T": 1.0, "run.cadence": 0.25,
    },
    "solitary-flat": {
        "grid.L": 100.0, "grid.n": 1024,
        "bathymetry.family": "flat",
        "initial.family": "solitary",
        "initial.a": 0.2, "initial.x0": 50.0,
        "run.T": 0.5 * 100.0 / _C_SOLITARY,
        "run.cadence": 0.125 * 100.0 / _C_SOLITARY,
    },
    "shoaling-over-bump": {
        "grid.L": 30.0, "grid.n": 512,
        "bathymetry.family": "gaussian-bump",
        "bathymetry.center": 16.0, "bathymetry.width": 1.2,
        "bathymetry.height": 0.25,
        "initial.family": "surface-hump",
        "initial.center": 8.0, "initial.width": 0.65, "initial.amp": 0.08,
        "initial.launch": True,
        "run.T": 2.0, "run.cadence": 0.5,
    },
}


def _split_params(params: dict, namespace: str) -> dict:
    head = namespace + "."
    return {k[len(head):]: v for k, v in params.items()
            if k.startswith(head) and k != head + "family"}


def build_scenario(name: str, *, n: int = None) -> Scenario:
    """One of the shipped presets, optionally at a different resolution."""
    if name not in PRESET_PARAMS:
        raise ConfigError([f"unknown scenario '{name}' "
                           f"(choose from {', '.join(SCENARIO_NAMES)})"])
    p = dict(PRESET_PARAMS[name])
    if n is not None:
        p["grid.n"] = int(n)
    L = p["grid.L"]
    grid = Grid(L, p["grid.n"])
    bat = make_bathymetry(p["bathymetry.family"], _split_params(p, "bathymetry"), L)
    init = make_initial(p["initial.family"], _split_params(p, "initial"),
                        grid, bat)
    return Scenario(name, grid, bat, init, grav=1.0, cfl=0.5,
                    T=p["run.T"], cadence=p["run.cadence"])
