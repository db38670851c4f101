"""Verification harness: formulation equivalence, continuous dependence,
solitary-wave benchmark, and convergence tables.

Every routine here is deterministic given its arguments (perturbation
directions are seeded), and every threshold asserted is a chosen
acceptance target for this implementation, not an external constant.
"""

from dataclasses import dataclass

import numpy as np

from .bathymetry import Bathymetry, flat, fourier
from .errors import GnflowError, HorizonExceeded
from .eulerian import (EulerianState, StepControl, cfl_dt, eval_P,
                       run_eulerian)
from .grid import Field, Grid, deriv, sobolev_norm
from .lagrangian import (InitialDepth, LagrangianState, from_eulerian,
                         run_lagrangian, to_eulerian)
from .operator import band_limited, solve_A

__all__ = ["TwinRunReport", "DependenceReport", "SolitaryResidual",
           "SolitaryPropagation", "ConvergenceTable", "twin_run",
           "dependence_study", "solitary_wave_residual", "solitary_gate",
           "solitary_propagation", "convergence_table"]


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(xs, dtype=float)),
                            np.log(np.asarray(ys, dtype=float)), 1)[0])


def l2_pair_distance(a: EulerianState, b: EulerianState) -> float:
    """L2 distance of the (h, u) pair on a shared grid."""
    dh = Field(a.grid, a.h.values - b.h.values)
    du = Field(a.grid, a.u.values - b.u.values)
    return float(np.hypot(sobolev_norm(dh, 0.0), sobolev_norm(du, 0.0)))


def _edge_band_guard(state: EulerianState, bathy: Bathymetry,
                     swl: float = 1.0, tol: float = 1e-7, rel: float = 0.01):
    """Raise HorizonExceeded once the wave reaches the outer 10% bands;
    past that point the periodic run no longer represents the open-water
    problem the comparison is about.

    The nonlocal velocity solve deposits exponentially small tails
    everywhere instantly, so band content below a fixed quiet floor, or
    small relative to the interior amplitude, does not count as arrival.
    """
    g = state.grid
    nb = max(1, g.n // 10)
    band = np.concatenate([np.arange(nb), np.arange(g.n - nb, g.n)])
    eta = state.h.values + bathy.xi(g.x) - swl
    band_max = max(np.max(np.abs(eta[band])),
                   np.max(np.abs(state.u.values[band])))
    full_max = max(np.max(np.abs(eta)), np.max(np.abs(state.u.values)))
    if band_max > tol and band_max > rel * full_max:
        raise HorizonExceeded(
            f"wave reached the domain-edge guard band at t = {state.t:.6g} "
            f"(band max {band_max:.2e}, interior max {full_max:.2e})")


# ------------------------------------------------------------ twin runs


@dataclass(frozen=True)
class TwinRunReport:
    """Eulerian/Lagrangian agreement under refinement."""

    resolutions: tuple
    times: tuple
    per_time_gaps: tuple      # one tuple of L2 gaps per resolution
    gaps: tuple               # max over checkpoint times, per resolution
    pair_orders: tuple        # log2 gap ratios between consecutive n
    fitted_order: float

    def __post_init__(self):
        if list(self.resolutions) != sorted(set(self.resolutions)):
            raise ValueError("resolutions must be strictly increasing")
        if any(g < 0 for g in self.gaps):
            raise ValueError("gaps must be nonnegative")


def _twin_at_resolution(n, h0_fn, u0_fn, bathy, grav, T, times, L, cfl,
                        swl, guard):
    grid = Grid(L, n)
    h = grid.field(h0_fn)
    u = grid.field(u0_fn)
    e0 = EulerianState(0.0, h, u)
    dt = cfl_dt(e0, grav, StepControl(cfl=cfl))

    eul_states = {}
    run_eulerian(e0, bathy, grav, T, fixed_dt=dt, observe_at=times,
                 observer=lambda s: eul_states.__setitem__(s.t, s))
    lag0, hcap = from_eulerian(e0)
    lag_states = {}
    run_lagrangian(lag0, hcap, bathy, grav, T, fixed_dt=dt, observe_at=times,
                   observer=lambda s: lag_states.__setitem__(s.t, s))

    gaps = []
    for t in times:
        view = to_eulerian(lag_states[t], hcap)
        if guard:
            _edge_band_guard(eul_states[t], bathy, swl)
            _edge_band_guard(view, bathy, swl)
        gaps.append(l2_pair_distance(eul_states[t], view))
    return tuple(gaps)


def twin_run(h0, u0, bathy: Bathymetry, grav: float, T: float,
             resolutions, *, L: float, cfl: float = 0.45,
             checkpoints: int = 4, swl: float = 1.0, guard: bool = True,
             require_convergent: bool = True) -> TwinRunReport:
    """Evolve the same datum with both formulations at each resolution and
    measure the L2 gap of (h, u) at checkpoint times.

    The two marches share the same fixed dt per resolution, so the gap
    isolates the formulation difference.  Unless the gaps sit at the
    agreement floor already, the fitted order must be >= 2.
    """
    resolutions = tuple(int(n) for n in resolutions)
    times = tuple((k + 1) * T / checkpoints
                  for k in range(checkpoints - 1)) + (float(T),)
    per_time = []
    for n in resolutions:
        per_time.append(_twin_at_resolution(
            n, h0, u0, bathy, grav, T, times, L, cfl, swl, guard))
    gaps = tuple(max(row) for row in per_time)
    pair_orders = tuple(
        float(np.log2(a / b)) if b > 0 else np.inf
        for a, b in zip(gaps[:-1], gaps[1:]))
    floor = max(gaps) <= 1e-9
    fitted = 0.0 if floor else fit_loglog_slope(
        [L / n for n in resolutions], gaps)
    if require_convergent and not floor and fitted < 2.0:
        raise GnflowError(
            f"twin gap not converging at second order (fitted {fitted:.2f}; "
            f"gaps {[f'{g:.3e}' for g in gaps]})")
    return TwinRunReport(resolutions, times, tuple(per_time), gaps,
                         pair_orders, fitted)


# ------------------------------------------------- continuous dependence


@dataclass(frozen=True)
class DependenceReport:
    """Solution distance against data perturbation size, one direction."""

    direction: str
    epsilons: tuple           # strictly decreasing ladder
    distances: tuple          # sup over checkpoint times, H^sigma x H^(sigma+1)
    slope: float              # fitted log-log slope

    def __post_init__(self):
        eps = list(self.epsilons)
        if eps != sorted(eps, reverse=True) or len(set(eps)) != len(eps):
            raise ValueError("epsilon ladder must be strictly decreasing")
        if not np.isfinite(self.slope):
            raise ValueError("slope must be finite")


def _perturbation_directions(grid: Grid, L: float, seed: int):
    """Fixed band-limited unit-sup directions for h0, u0, and xi."""
    rng = np.random.default_rng(seed)
    d_h = band_limited(grid, rng, modes=8, amp=1.0)
    d_u = band_limited(grid, rng, modes=8, amp=1.0)
    ca, sa = rng.standard_normal(8), rng.standard_normal(8)
    raw = fourier(L, ca, sa)
    probe = Grid(L, 4096)
    peak = np.max(np.abs(raw.xi(probe.x)))
    d_xi = raw.scaled(1.0 / peak)
    return d_h, d_u, d_xi


def dependence_study(h0, u0, bathy: Bathymetry, grav: float, T: float,
                     eps_ladder, sigma: float = 1.0, *, direction: str,
                     L: float, n: int = 256, cfl: float = 0.45,
                     seed: int = 0, checkpoints: int = 4) -> DependenceReport:
    """Distance between base and perturbed trajectories as the data
    perturbation shrinks, in one direction: 'h0', 'u0', 'xi', or 'joint'.

    All runs share one fixed dt so time discretization is common-mode;
    the discrete system depends smoothly on its data, so the measured
    distances track epsilon down to round-off.
    """
    if direction not in ("h0", "u0", "xi", "joint"):
        raise ValueError(f"unknown perturbation direction '{direction}'")
    grid = Grid(L, n)
    d_h, d_u, d_xi = _perturbation_directions(grid, L, seed)
    base_h, base_u = grid.field(h0), grid.field(u0)
    dt = cfl_dt(EulerianState(0.0, base_h, base_u), grav,
                StepControl(cfl=cfl))
    times = tuple((k + 1) * T / checkpoints
                  for k in range(checkpoints - 1)) + (float(T),)

    def trajectory(h_vals, u_vals, bat):
        out = {}
        run_eulerian(EulerianState(0.0, Field(grid, h_vals),
                                   Field(grid, u_vals)),
                     bat, grav, T, fixed_dt=dt, observe_at=times,
                     observer=lambda s: out.__setitem__(s.t, s))
        return out

    base = trajectory(base_h.values, base_u.values, bathy)
    distances = []
    for eps in eps_ladder:
        hv, uv, bat = base_h.values.copy(), base_u.values.copy(), bathy
        if direction in ("h0", "joint"):
            hv = hv + eps * d_h
        if direction in ("u0", "joint"):
            uv = uv + eps * d_u
        if direction in ("xi", "joint"):
            bat = bathy + d_xi.scaled(eps)
        pert = trajectory(hv, uv, bat)
        dist = max(
            np.hypot(
                sobolev_norm(Field(grid, pert[t].h.values - base[t].h.values),
                             sigma),
                sobolev_norm(Field(grid, pert[t].u.values - base[t].u.values),
                             sigma + 1.0))
            for t in times)
        distances.append(float(dist))
    slope = fit_loglog_slope(eps_ladder, distances)
    return DependenceReport(direction, tuple(float(e) for e in eps_ladder),
                            tuple(distances), slope)


# ------------------------------------------------- solitary-wave gate


@dataclass(frozen=True)
class SolitaryResidual:
    n: int
    dx: float
    mass_residual: float      # sup |c D(h) - D(h u)|
    velocity_residual: float  # sup |c D(u) - u D(u) - A^{-1} P|
    max_residual: float


@dataclass(frozen=True)
class SolitaryPropagation:
    n: int
    dx: float
    T: float
    expected_peak: float
    measured_peak: float
    peak_error: float
    shape_l2_error: float


def solitary_wave_residual(a: float, h_inf: float, grav: float,
                           grid: Grid) -> SolitaryResidual:
    """Residual of the sech^2 traveling-wave ansatz in the semi-discrete
    flat-bottom system, evaluated in the co-moving frame."""
    from .scenarios import solitary_profile
    hv, uv, c, _ = solitary_profile(grid.x, a, h_inf, grav, 0.5 * grid.L)
    h, u = Field(grid, hv), Field(grid, uv)
    bat = flat()
    r_mass = c * deriv(h).values - deriv(Field(grid, hv * uv)).values
    accel = solve_A(h, bat, eval_P(h, bat, u, grav)).values
    r_vel = c * deriv(u).values - uv * deriv(u).values - accel
    rm = float(np.max(np.abs(r_mass)))
    rv = float(np.max(np.abs(r_vel)))
    return SolitaryResidual(grid.n, grid.dx, rm, rv, max(rm, rv))


def solitary_gate(a: float, h_inf: float, grav: float, L: float,
                  resolutions) -> tuple:
    """Residual gate: the ansatz must decay at second order under
    refinement before any propagation benchmark may use it as a
    reference.  Returns (reports, pair_orders, passed).

    The residual is exactly second order with a same-sign dx^4
    correction, so observed orders approach 2 from below (1.98, 1.99,
    ...); the gate accepts >= 1.9, which still rejects a wrong profile
    outright (those land at order <= 1 with O(1) residuals)."""
    reports = [solitary_wave_residual(a, h_inf, grav, Grid(L, n))
               for n in resolutions]
    res = [r.max_residual for r in reports]
    orders = tuple(float(np.log2(c / f)) for c, f in zip(res[:-1], res[1:]))
    passed = bool(all(o >= 1.9 for o in orders))
    return reports, orders, passed


def solitary_propagation(a: float, h_inf: float, grav: float, L: float,
                         n: int, T: float = None,
                         cfl: float = 0.5) -> SolitaryPropagation:
    """Propagate the wave for half a domain crossing (by default) and
    measure peak position error and phase-aligned L2 shape error."""
    from .scenarios import solitary_profile
    grid = Grid(L, n)
    x0 = 0.5 * L
    hv, uv, c, kappa = solitary_profile(grid.x, a, h_inf, grav, x0)
    if T is None:
        T = 0.5 * L / c
    out = run_eulerian(EulerianState(0.0, Field(grid, hv), Field(grid, uv)),
                       flat(), grav, T, StepControl(cfl=cfl))

    hn = out.h.values
    j = int(np.argmax(hn))
    left, mid, right = hn[j - 1], hn[j], hn[(j + 1) % grid.n]
    # parabolic vertex through the three nodes around the max
    denom = left - 2.0 * mid + right
    offset = 0.0 if denom == 0.0 else 0.5 * (left - right) / denom
    measured = (grid.x[j] + offset * grid.dx) % L
    expected = (x0 + c * T) % L
    diff = abs(measured - expected)
    peak_err = min(diff, L - diff)

    dist = (grid.x - measured + 0.5 * L) % L - 0.5 * L
    href = h_inf + a / np.cosh(kappa * dist) ** 2
    shape = float(np.sqrt(grid.dx * np.sum((hn - href) ** 2)))
    return SolitaryPropagation(n, grid.dx, float(T), float(expected),
                               float(measured), float(peak_err), shape)


# ------------------------------------------------- convergence tables


@dataclass(frozen=True)
class ConvergenceTable:
    """Self-convergence of both solvers, in space and in time."""

    spatial_resolutions: tuple
    spatial_errors_eulerian: tuple    # n vs 2n, restricted to shared nodes
    spatial_errors_lagrangian: tuple
    spatial_orders_eulerian: tuple
    spatial_orders_lagrangian: tuple
    temporal_n: int
    dts: tuple
    temporal_errors_eulerian: tuple   # dt vs dt/2
    temporal_errors_lagrangian: tuple
    temporal_orders_eulerian: tuple
    temporal_orders_lagrangian: tuple

    def rows(self):
        """Machine-readable rows: (kind, parameter, err_eul, err_lag)."""
        out = []
        for i, n in enumerate(self.spatial_resolutions[:-1]):
            out.append(("spatial", float(n), self.spatial_errors_eulerian[i],
                        self.spatial_errors_lagrangian[i]))
        for i, dt in enumerate(self.dts[:-1]):
            out.append(("temporal", float(dt),
                        self.temporal_errors_eulerian[i],
                        self.temporal_errors_lagrangian[i]))
        return out


def _final_states(h0, u0, bathy, grav, T, grid, dt):
    e = run_eulerian(EulerianState(0.0, grid.field(h0), grid.field(u0)),
                     bathy, grav, T, fixed_dt=dt)
    lag0, hcap = from_eulerian(
        EulerianState(0.0, grid.field(h0), grid.field(u0)))
    l = to_eulerian(run_lagrangian(lag0, hcap, bathy, grav, T, fixed_dt=dt),
                    hcap)
    return e, l


def _l2_on_coarse(coarse_vals, fine_vals, dx):
    return float(np.sqrt(dx * np.sum((coarse_vals - fine_vals[::2]) ** 2)))


def convergence_table(h0, u0, bathy: Bathymetry, grav: float, T: float,
                      resolutions, *, L: float, cfl: float = 0.45,
                      temporal_dts=None) -> ConvergenceTable:
    """Richardson-style self-convergence: nested-grid differences at fixed
    final time for the spatial order, dt halvings at the coarsest grid for
    the temporal order.  Grids are nested node-for-node (dyadic n), so the
    restriction is exact subsampling."""
    resolutions = tuple(int(n) for n in resolutions)
    runs = {}
    for n in resolutions:
        grid = Grid(L, n)
        dt = cfl_dt(EulerianState(0.0, grid.field(h0), grid.field(u0)),
                    grav, StepControl(cfl=cfl))
        runs[n] = _final_states(h0, u0, bathy, grav, T, grid, dt)
    sp_e, sp_l = [], []
    for n, n2 in zip(resolutions[:-1], resolutions[1:]):
        if n2 != 2 * n:
            raise ValueError("resolutions must double")
        dx = L / n
        (e1, l1), (e2, l2) = runs[n], runs[n2]
        sp_e.append(np.hypot(_l2_on_coarse(e1.h.values, e2.h.values, dx),
                             _l2_on_coarse(e1.u.values, e2.u.values, dx)))
        sp_l.append(np.hypot(_l2_on_coarse(l1.h.values, l2.h.values, dx),
                             _l2_on_coarse(l1.u.values, l2.u.values, dx)))
    ord_e = tuple(float(np.log2(a / b)) for a, b in zip(sp_e[:-1], sp_e[1:]))
    ord_l = tuple(float(np.log2(a / b)) for a, b in zip(sp_l[:-1], sp_l[1:]))

    n0 = resolutions[0]
    grid = Grid(L, n0)
    if temporal_dts is None:
        base = cfl_dt(EulerianState(0.0, grid.field(h0), grid.field(u0)),
                      grav, StepControl(cfl=cfl))
        # snap to a clean divisor of T, then halve
        base = T / max(1, int(np.ceil(T / base)))
        temporal_dts = tuple(base / 2 ** k for k in range(4))
    finals = [_final_states(h0, u0, bathy, grav, T, grid, dt)
              for dt in temporal_dts]
    te, tl = [], []
    for (e1, l1), (e2, l2) in zip(finals[:-1], finals[1:]):
        te.append(float(np.max(np.abs(e1.h.values - e2.h.values))
                        + np.max(np.abs(e1.u.values - e2.u.values))))
        tl.append(float(np.max(np.abs(l1.h.values - l2.h.values))
                        + np.max(np.abs(l1.u.values - l2.u.values))))
    tord_e = tuple(float(np.log2(a / b)) for a, b in zip(te[:-1], te[1:]))
    tord_l = tuple(float(np.log2(a / b)) for a, b in zip(tl[:-1], tl[1:]))
    return ConvergenceTable(resolutions, tuple(sp_e), tuple(sp_l),
                            ord_e, ord_l, n0, tuple(temporal_dts),
                            tuple(te), tuple(tl), tord_e, tord_l)
