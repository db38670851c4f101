"""Lagrangian formulation: the flow map as a second-order ODE.

The unknown is the periodic displacement disp = phi - id of the particle
map phi together with its velocity vel = phi_t, evolving by

    phi_tt = F(phi, phi_t) = -(conjugated A)^{-1} (conjugated P),

so the per-step elliptic solve happens in label coordinates and no map
inversion enters the time loop.  Conjugation replaces every x-derivative
by D(.)/phi_x, the transported depth is h0/phi_x, and the bathymetry
derivatives are evaluated exactly at the mapped points phi(x_j).

Pulling the weak form of the operator back through y = phi(x) gives the
label-coordinate weights

    w0 = h0 (1 + (xi_x o phi)^2),
    w1 = -(h0/phi_x)^2 (xi_x o phi) / 2,
    w2 = h0^3 / (3 phi_x^4),

with the load vector picking up the Jacobian phi_x.  At phi = id every
formula above degenerates to the Eulerian one through the same code path
(the divisions are by exactly 1.0), which the tests pin down bitwise.
Only even powers of phi_x enter w1 and w2, so the assembled matrix stays
SPD even for a folded map; losing the diffeomorphism property is caught
by the explicit min phi_x check, not by the factorization.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import deriv4
from .bathymetry import Bathymetry
from .errors import DiffeoLost, GnflowError, GridMismatch, NonMonotoneMap
from .eulerian import EulerianState, StepControl, six_term_forcing
from .grid import Field, Grid, compose, invert_map, require_same_grid
from .operator import SpdTridiagonal, assemble_from_weights, _midpoint, \
    load_vector

__all__ = ["LagrangianState", "InitialDepth", "conj_deriv",
           "lagrangian_depth", "assemble_A_conjugated", "eval_P_conjugated",
           "eval_F", "step_rk4_lagrangian", "cfl_dt_lagrangian",
           "to_eulerian", "from_eulerian", "run_lagrangian"]


@dataclass(frozen=True)
class InitialDepth:
    """Depth profile captured at t = 0; constant along the trajectory."""

    h0: Field

    def __post_init__(self):
        if not np.min(self.h0.values) > 0.0:
            raise ValueError(
                f"initial depth must be positive, min h0 = "
                f"{np.min(self.h0.values):.3e}")


@dataclass(frozen=True, eq=False)
class LagrangianState:
    """Flow-map displacement (phi - id, periodic) and map velocity."""

    t: float
    disp: Field
    vel: Field

    def __post_init__(self):
        require_same_grid(self.disp, self.vel)

    @property
    def grid(self) -> Grid:
        return self.disp.grid

    def phi(self) -> np.ndarray:
        return self.grid.x + self.disp.values

    def phi_x(self) -> np.ndarray:
        """Map derivative at the nodes; raises if the map is not a
        diffeomorphism (NaN-aware)."""
        px = 1.0 + deriv4(self.disp.values, self.grid.dx)
        if not np.min(px) > 0.0:
            raise NonMonotoneMap(
                f"flow map is not increasing, min phi_x = {np.min(px):.3e}")
        return px


def from_eulerian(state: EulerianState):
    """Identity-map Lagrangian state plus captured depth at the same time."""
    zero = Field(state.grid, np.zeros(state.grid.n))
    return (LagrangianState(state.t, zero, state.u),
            InitialDepth(state.h))


def conj_deriv(state: LagrangianState, f: Field) -> Field:
    """Conjugated derivative D(f)/phi_x: the label-coordinate form of
    d/dx applied to f o phi^{-1}."""
    g = require_same_grid(state.disp, f)
    return Field(g, deriv4(f.values, g.dx) / state.phi_x())


def lagrangian_depth(state: LagrangianState, h0: InitialDepth) -> Field:
    """Transported depth h o phi = h0/phi_x (volume of a label cell)."""
    g = require_same_grid(state.disp, h0.h0)
    return Field(g, h0.h0.values / state.phi_x())


class _Workspace:
    """Per-run constants: labels grid, initial depth samples, bathymetry."""

    def __init__(self, grid: Grid, h0: InitialDepth, bathy: Bathymetry,
                 grav: float):
        if not grid.compatible(h0.h0.grid):
            raise GridMismatch(f"h0 lives on {h0.h0.grid}, expected {grid}")
        self.grid = grid
        self.grav = float(grav)
        self.bathy = bathy
        self.h0 = h0.h0.values
        self.h0_mid = _midpoint(self.h0)
        self.xmid = grid.x + 0.5 * grid.dx


def _phi_x_nodes(q: np.ndarray, dx: float) -> np.ndarray:
    return 1.0 + deriv4(q, dx)


def _conjugated_matrix(q: np.ndarray, ws: _Workspace) -> SpdTridiagonal:
    # P1-consistent map derivative on each element: exact slope of the
    # piecewise-linear interpolant, which keeps the element-by-element
    # coercivity identity intact
    dq = np.roll(q, -1) - q
    phixm = 1.0 + dq / ws.grid.dx
    phim = ws.xmid + 0.5 * (q + np.roll(q, -1))
    a = ws.bathy.xi_x(phim)
    hm = ws.h0_mid / phixm
    w0 = ws.h0_mid * (1.0 + a * a)
    w1 = -0.5 * hm * hm * a
    w2 = (ws.h0_mid ** 3 / 3.0) / phixm ** 4
    return assemble_from_weights(ws.grid, w0, w1, w2)


def _conjugated_forcing(q, v, phix, ws: _Workspace):
    dx = ws.grid.dx
    phi = ws.grid.x + q
    depth = ws.h0 / phix
    cd = lambda arr: deriv4(arr, dx) / phix
    return six_term_forcing(depth, v, cd(depth), cd(v), cd,
                            ws.bathy.xi_x(phi), ws.bathy.xi_xx(phi), ws.grav)


def _accel_arrays(q, v, ws: _Workspace) -> np.ndarray:
    phix = _phi_x_nodes(q, ws.grid.dx)
    if not np.min(phix) > 0.0:
        raise NonMonotoneMap(
            f"flow map is not increasing, min phi_x = {np.min(phix):.3e}")
    p = _conjugated_forcing(q, v, phix, ws)
    mat = _conjugated_matrix(q, ws)
    return -mat.solve(load_vector(ws.grid, p * phix))


def assemble_A_conjugated(state: LagrangianState, h0: InitialDepth,
                          bathy: Bathymetry) -> SpdTridiagonal:
    """Pulled-back operator matrix on the label grid."""
    ws = _Workspace(state.grid, h0, bathy, 1.0)
    state.phi_x()
    return _conjugated_matrix(state.disp.values, ws)


def conjugated_load(state: LagrangianState, r_values) -> np.ndarray:
    """Load vector for a label-coordinate right side, carrying the
    Jacobian weight phi_x."""
    return load_vector(state.grid,
                       np.asarray(r_values, dtype=float) * state.phi_x())


def eval_P_conjugated(state: LagrangianState, v: Field, h0: InitialDepth,
                      bathy: Bathymetry, grav: float = 1.0) -> Field:
    """The six forcing terms in label coordinates (no map inversion)."""
    g = require_same_grid(state.disp, v)
    ws = _Workspace(g, h0, bathy, grav)
    phix = state.phi_x()
    return Field(g, _conjugated_forcing(state.disp.values, v.values,
                                        phix, ws))


def eval_F(state: LagrangianState, h0: InitialDepth, bathy: Bathymetry,
           grav: float = 1.0) -> Field:
    """Map acceleration: minus the conjugated solve of the conjugated
    forcing.  At phi = id this is exactly -solve_A(h0, xi, P)."""
    ws = _Workspace(state.grid, h0, bathy, grav)
    return Field(state.grid,
                 _accel_arrays(state.disp.values, state.vel.values, ws))


def mass_excess(state: LagrangianState, h0: InitialDepth,
                swl: float = 1.0) -> float:
    """Label-coordinate form of the conserved mass functional:
    int (h - swl) dy = int (h0 - swl phi_x) dx."""
    return float(state.grid.dx
                 * np.sum(h0.h0.values - swl * state.phi_x()))


def energy_diagnostic(state: LagrangianState, h0: InitialDepth,
                      bathy: Bathymetry, grav: float = 1.0,
                      swl: float = 1.0) -> float:
    """Energy reading pulled back to labels (Jacobian-weighted), so it can
    be evaluated without inverting the map."""
    g = state.grid
    phix = state.phi_x()
    depth = h0.h0.values / phix
    eta = depth + bathy.xi(state.phi()) - swl
    dens = 0.5 * depth * state.vel.values ** 2 + 0.5 * grav * eta ** 2
    return float(g.dx * np.sum(dens * phix))


def cfl_dt_lagrangian(state: LagrangianState, h0: InitialDepth,
                      grav: float = 1.0,
                      control: StepControl = StepControl()) -> float:
    """Transported CFL rule: the label-space signal speed under the map
    is (|v| + sqrt(g h0/phi_x))/phi_x pointwise."""
    phix = state.phi_x()
    speed = np.max((np.abs(state.vel.values)
                    + np.sqrt(grav * h0.h0.values / phix)) / phix)
    return float(min(control.dt_max, control.cfl * state.grid.dx / speed))


def _rk4_arrays(q, v, dt, ws: _Workspace):
    try:
        a1 = _accel_arrays(q, v, ws)
        v2 = v + 0.5 * dt * a1
        a2 = _accel_arrays(q + 0.5 * dt * v, v2, ws)
        v3 = v + 0.5 * dt * a2
        a3 = _accel_arrays(q + 0.5 * dt * v2, v3, ws)
        v4 = v + dt * a3
        a4 = _accel_arrays(q + dt * v3, v4, ws)
    except NonMonotoneMap as exc:
        raise DiffeoLost(f"flow map folded inside an RK stage: {exc}")
    qn = q + (dt / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
    vn = v + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return qn, vn


def step_rk4_lagrangian(state: LagrangianState, dt: float, h0: InitialDepth,
                        bathy: Bathymetry, grav: float = 1.0) -> LagrangianState:
    """One classical RK4 step of (disp, vel).  Raises DiffeoLost when the
    map stops being a diffeomorphism, before or after the step."""
    ws = _Workspace(state.grid, h0, bathy, grav)
    qn, vn = _step_arrays(state, dt, ws)
    return LagrangianState(state.t + dt, Field(state.grid, qn),
                           Field(state.grid, vn))


def _step_arrays(state: LagrangianState, dt, ws: _Workspace):
    qn, vn = _rk4_arrays(state.disp.values, state.vel.values, dt, ws)
    px = 1.0 + deriv4(qn, ws.grid.dx)
    if not np.min(px) > 0.0:
        raise DiffeoLost(
            f"min phi_x = {np.min(px):.3e} at t = {state.t + dt:.6g}")
    return qn, vn


def to_eulerian(state: LagrangianState, h0: InitialDepth) -> EulerianState:
    """Push the trajectory forward: invert the map once, then compose the
    transported depth and the map velocity with the inverse."""
    g = state.grid
    phix = state.phi_x()
    psi = invert_map(Field(g, state.phi()))
    h = compose(Field(g, h0.h0.values / phix), psi)
    u = compose(state.vel, psi)
    return EulerianState(state.t, h, u)


def run_lagrangian(state: LagrangianState, h0: InitialDepth,
                   bathy: Bathymetry, grav: float, T: float,
                   control: StepControl = StepControl(), *, fixed_dt=None,
                   observe_at=None, observer=None, step_monitor=None,
                   max_steps: int = 2_000_000) -> LagrangianState:
    """March the flow-map ODE to time T, mirroring the Eulerian runner.

    ``step_monitor(state)`` fires after every accepted step (used to track
    min phi_x across the whole run); ``observer(state)`` fires at the
    requested landing times, or once at T when none are given.
    """
    observed = set(observe_at or [])
    bad = [t for t in observed if not state.t < t <= T]
    if bad:
        raise ValueError(f"observation times outside (t0, T]: {sorted(bad)}")
    targets = sorted(observed | {T})
    ws = _Workspace(state.grid, h0, bathy, grav)
    steps = 0
    for target in targets:
        while state.t < target:
            try:
                dt = fixed_dt if fixed_dt is not None else \
                    cfl_dt_lagrangian(state, h0, grav, control)
            except NonMonotoneMap as exc:
                # stepping from a non-diffeomorphism is a trajectory-level
                # failure, not a mere operand error
                raise DiffeoLost(str(exc)) from exc
            land = state.t + dt >= target - 1e-12 * max(1.0, abs(target))
            if land:
                dt = target - state.t
            qn, vn = _step_arrays(state, dt, ws)
            t_new = target if land else state.t + dt
            state = LagrangianState(t_new, Field(state.grid, qn),
                                    Field(state.grid, vn))
            steps += 1
            if step_monitor is not None:
                step_monitor(state)
            if steps > max_steps:
                raise GnflowError(f"step budget exceeded ({max_steps})")
        if observer is not None and (not observed or target in observed):
            observer(state)
    return state
