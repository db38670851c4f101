"""Eulerian formulation: mass equation plus the nonlocal velocity equation.

    h_t + (h u)_x = 0
    u_t + u u_x = -A[h, xi]^{-1} P(h, u, xi)

with the forcing grouped as six terms (kept verbatim in this grouping; the
equivalence tests rely on the same grouping in Lagrangian coordinates):

    P = g h h_x + (h^2 u^2 xi_xx / 2)_x + (2 h^3 u_x^2 / 3)_x
        + g h xi_x + h u^2 xi_x xi_xx + h^2 xi_x u_x^2

xi_x, xi_xx come from the exact bathymetry evaluators; every other
derivative is the 4th-order grid stencil.  Time stepping is classical RK4
with a shallow-water CFL heuristic on dt (the operator inversion only
weakens high-wavenumber phase speeds, so the hyperbolic bound binds).
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import deriv4
from .bathymetry import Bathymetry
from .errors import DepthPositivityLost, GnflowError, NotPositiveDefinite
from .grid import Field, Grid, require_same_grid
from .operator import assemble_A_arrays, load_vector

__all__ = ["EulerianState", "StepControl", "eval_P", "eulerian_rhs",
           "step_rk4", "cfl_dt", "run_eulerian"]


@dataclass(frozen=True)
class StepControl:
    """CFL number and hard time-step cap."""

    cfl: float = 0.5
    dt_max: float = np.inf

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must be in (0, 1], got {self.cfl}")
        if not self.dt_max > 0.0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")


@dataclass(frozen=True, eq=False)
class EulerianState:
    """Depth and velocity at one instant.  Depth must be positive."""

    t: float
    h: Field
    u: Field

    def __post_init__(self):
        require_same_grid(self.h, self.u)
        if not np.min(self.h.values) > 0.0:
            raise ValueError(
                f"initial depth must be positive, min h = {np.min(self.h.values):.3e}")

    @property
    def grid(self) -> Grid:
        return self.h.grid


def six_term_forcing(depth, vel, d_depth, d_vel, outer_d, xi_x, xi_xx, grav):
    """The six forcing terms, shared by both formulations.

    ``outer_d`` applies the outer derivative; the Lagrangian caller passes
    the conjugated derivative and composed bathymetry samples, and at the
    identity map both callers run the identical arithmetic.
    """
    d2 = depth * depth
    v2 = vel * vel
    dv2 = d_vel * d_vel
    return (depth * d_depth * grav
            + outer_d(0.5 * d2 * v2 * xi_xx)
            + outer_d((2.0 / 3.0) * d2 * depth * dv2)
            + depth * xi_x * grav
            + depth * v2 * xi_x * xi_xx
            + d2 * xi_x * dv2)


class _Workspace:
    """Per-run cache of bathymetry samples on the fixed Eulerian grid."""

    def __init__(self, grid: Grid, bathy: Bathymetry, grav: float):
        self.grid = grid
        self.grav = float(grav)
        self.xi_x = bathy.xi_x(grid.x)
        self.xi_xx = bathy.xi_xx(grid.x)
        self.xi_x_mid = bathy.xi_x(grid.x + 0.5 * grid.dx)


def _eval_P_arrays(hv, uv, ws: _Workspace):
    dx = ws.grid.dx
    return six_term_forcing(hv, uv, deriv4(hv, dx), deriv4(uv, dx),
                            lambda a: deriv4(a, dx), ws.xi_x, ws.xi_xx, ws.grav)


def _rhs_arrays(hv, uv, ws: _Workspace):
    g = ws.grid
    dh = -deriv4(hv * uv, g.dx)
    p = _eval_P_arrays(hv, uv, ws)
    mat = assemble_A_arrays(g, hv, ws.xi_x_mid)
    du = -uv * deriv4(uv, g.dx) - mat.solve(load_vector(g, p))
    return dh, du


def eval_P(h: Field, bathy: Bathymetry, u: Field, grav: float = 1.0) -> Field:
    """Forcing P at the nodes.  At rest over any bottom (u = 0,
    h + xi = const) the two gravity terms cancel to the truncation error
    of the depth derivative, O(dx^4)."""
    g = require_same_grid(h, u)
    ws = _Workspace(g, bathy, grav)
    return Field(g, _eval_P_arrays(h.values, u.values, ws))


def eulerian_rhs(state: EulerianState, bathy: Bathymetry,
                 grav: float = 1.0):
    """Time derivative (dh, du) of the semi-discrete system."""
    ws = _Workspace(state.grid, bathy, grav)
    dh, du = _rhs_arrays(state.h.values, state.u.values, ws)
    return Field(state.grid, dh), Field(state.grid, du)


def mass_excess(state: EulerianState, swl: float = 1.0) -> float:
    """The conserved functional: integral of h minus still-water level."""
    return float(state.grid.dx * np.sum(state.h.values - swl))


def energy_diagnostic(state: EulerianState, bathy: Bathymetry,
                      grav: float = 1.0, swl: float = 1.0) -> float:
    """Quadratic energy reading: integral of kinetic plus surface terms.
    (A diagnostic, not an exact invariant of the dispersive system.)"""
    g = state.grid
    eta = state.h.values + bathy.xi(g.x) - swl
    dens = 0.5 * state.h.values * state.u.values ** 2 + 0.5 * grav * eta ** 2
    return float(g.dx * np.sum(dens))


def cfl_dt(state: EulerianState, grav: float = 1.0,
           control: StepControl = StepControl()) -> float:
    """dt = min(dt_max, cfl * dx / max(|u| + sqrt(g h)))."""
    speed = np.max(np.abs(state.u.values) + np.sqrt(grav * state.h.values))
    return float(min(control.dt_max, control.cfl * state.grid.dx / speed))


def _rk4_arrays(hv, uv, dt, ws: _Workspace):
    try:
        k1h, k1u = _rhs_arrays(hv, uv, ws)
        k2h, k2u = _rhs_arrays(hv + 0.5 * dt * k1h, uv + 0.5 * dt * k1u, ws)
        k3h, k3u = _rhs_arrays(hv + 0.5 * dt * k2h, uv + 0.5 * dt * k2u, ws)
        k4h, k4u = _rhs_arrays(hv + dt * k3h, uv + dt * k3u, ws)
    except NotPositiveDefinite as exc:
        # a stage left the admissible depth region
        raise DepthPositivityLost(f"depth positivity lost inside an RK stage: {exc}")
    hn = hv + (dt / 6.0) * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
    un = uv + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    return hn, un


def step_rk4(state: EulerianState, bathy: Bathymetry, dt: float,
             grav: float = 1.0) -> EulerianState:
    """One classical RK4 step.  Raises DepthPositivityLost if the updated
    (or any stage) depth stops being positive; the check is NaN-aware."""
    ws = _Workspace(state.grid, bathy, grav)
    hn, un = _rk4_arrays(state.h.values, state.u.values, dt, ws)
    min_h = np.min(hn)
    if not min_h > 0.0:
        raise DepthPositivityLost(
            f"min depth {min_h:.3e} at t = {state.t + dt:.6g}")
    return EulerianState(state.t + dt, Field(state.grid, hn),
                         Field(state.grid, un))


def run_eulerian(state: EulerianState, bathy: Bathymetry, grav: float,
                 T: float, control: StepControl = StepControl(), *,
                 fixed_dt: float = None, observe_at=None, observer=None,
                 max_steps: int = 2_000_000) -> EulerianState:
    """March to time T, landing exactly on each requested observation time.

    ``observer(state)`` fires at every time in ``observe_at`` (all must lie
    in (t0, T]), or once at T when no times are given.  ``fixed_dt``
    replaces the CFL rule for convergence studies.
    """
    observed = set(observe_at or [])
    bad = [t for t in observed if not state.t < t <= T]
    if bad:
        raise ValueError(f"observation times outside (t0, T]: {sorted(bad)}")
    targets = sorted(observed | {T})
    ws = _Workspace(state.grid, bathy, grav)
    steps = 0
    for target in targets:
        while state.t < target:
            dt = fixed_dt if fixed_dt is not None else cfl_dt(state, grav, control)
            land = state.t + dt >= target - 1e-12 * max(1.0, abs(target))
            if land:
                dt = target - state.t
            hn, un = _rk4_arrays(state.h.values, state.u.values, dt, ws)
            min_h = np.min(hn)
            if not min_h > 0.0:
                raise DepthPositivityLost(
                    f"min depth {min_h:.3e} at t = {state.t + dt:.6g}")
            t_new = target if land else state.t + dt
            state = EulerianState(t_new, Field(state.grid, hn),
                                  Field(state.grid, un))
            steps += 1
            if steps > max_steps:
                raise GnflowError(f"step budget exceeded ({max_steps})")
        if observer is not None and (not observed or target in observed):
            observer(state)
    return state
