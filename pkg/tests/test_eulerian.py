import numpy as np
import pytest
import sympy as sp

from gnflow import bathymetry
from gnflow._kernels import deriv4
from gnflow.errors import DepthPositivityLost, GridMismatch
from gnflow.eulerian import (EulerianState, StepControl, cfl_dt, eval_P,
                             eulerian_rhs, run_eulerian, step_rk4)
from gnflow.grid import Field, Grid
from gnflow.operator import assemble_from_weights, load_vector


def make_state(grid, h_fn, u_fn, t=0.0):
    return EulerianState(t, grid.field(h_fn), grid.field(u_fn))


# ---------------------------------------------------------------- forcing


def test_eval_P_flat_rest_is_zero():
    g = Grid(10.0, 128)
    p = eval_P(g.field(lambda x: np.full_like(x, 1.3)), bathymetry.flat(),
               g.field(np.zeros_like), grav=9.81)
    assert np.all(p.values == 0.0)


def test_eval_P_lake_at_rest_truncation_order():
    # u = 0, h + xi = 1: P reduces to g h (xi_x - D xi), pure stencil error
    bat = bathymetry.sinusoidal(20.0, 1, 0.05)
    errs = []
    for n in (64, 128, 256):
        g = Grid(20.0, n)
        h = g.field(lambda x: 1.0 - bat.xi(x))
        p = eval_P(h, bat, g.field(np.zeros_like), grav=9.81)
        errs.append(np.max(np.abs(p.values)))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 3.5) and np.all(orders < 4.5)
    assert errs[-1] < 1e-8


def sympy_P_oracle():
    """Closed-form forcing for h = 1 + sin(x)/10, u = sin(2x) + cos(x)/3,
    xi = 0.05 cos(x) + 0.02 sin(2x) on [0, 2 pi)."""
    x = sp.symbols("x")
    grav = sp.Rational(981, 100)
    h = 1 + sp.sin(x) / 10
    u = sp.sin(2 * x) + sp.cos(x) / 3
    xi = sp.cos(x) * sp.Rational(5, 100) + sp.sin(2 * x) * sp.Rational(2, 100)
    xix, xixx = sp.diff(xi, x), sp.diff(xi, x, 2)
    ux = sp.diff(u, x)
    P = (grav * h * sp.diff(h, x)
         + sp.diff(h**2 * u**2 * xixx / 2, x)
         + sp.diff(sp.Rational(2, 3) * h**3 * ux**2, x)
         + grav * h * xix
         + h * u**2 * xix * xixx
         + h**2 * xix * ux**2)
    return (sp.lambdify(x, h, "numpy"), sp.lambdify(x, u, "numpy"),
            sp.lambdify(x, P, "numpy"))


def test_eval_P_matches_sympy_oracle():
    h_fn, u_fn, p_fn = sympy_P_oracle()
    bat = bathymetry.fourier(2.0 * np.pi, [0.05, 0.0], [0.0, 0.02])
    errs = []
    for n in (64, 128, 256, 512):
        g = Grid(2.0 * np.pi, n)
        p = eval_P(g.field(h_fn), bat, g.field(u_fn), grav=9.81)
        errs.append(np.max(np.abs(p.values - p_fn(g.x))))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 3.5) and np.all(orders < 4.5)
    assert errs[-1] < 1e-5


# ---------------------------------------------------------------- rhs


def flat_rhs_oracle(state, grav):
    """Independent straight-line coding of the flat-bottom system."""
    g = state.grid
    hv, uv = state.h.values, state.u.values
    dh = -deriv4(hv * uv, g.dx)
    ux = deriv4(uv, g.dx)
    p = grav * hv * deriv4(hv, g.dx) + deriv4((2.0 / 3.0) * hv**3 * ux**2, g.dx)
    hm = 0.5 * (hv + np.roll(hv, -1))
    mat = assemble_from_weights(g, hm, np.zeros_like(hm), hm**3 / 3.0)
    du = -uv * ux - mat.solve(load_vector(g, p))
    return dh, du


def test_rhs_flat_bottom_matches_independent_oracle():
    g = Grid(15.0, 256)
    state = make_state(g, lambda x: 1.0 + 0.2 * np.cos(2 * np.pi * x / 15.0),
                       lambda x: 0.1 * np.sin(4 * np.pi * x / 15.0))
    dh, du = eulerian_rhs(state, bathymetry.flat(), grav=9.81)
    oh, ou = flat_rhs_oracle(state, 9.81)
    assert np.max(np.abs(dh.values - oh)) <= 1e-14
    assert np.max(np.abs(du.values - ou)) <= 1e-14


def test_rhs_parity():
    # even h, xi and odd u about x = 0 give even dh and odd du
    L, n = 12.0, 128
    g = Grid(L, n)
    bat = bathymetry.fourier(L, [0.0, 0.03], [0.0, 0.0])
    state = make_state(g, lambda x: 1.0 + 0.1 * np.cos(2 * np.pi * x / L),
                       lambda x: 0.2 * np.sin(2 * np.pi * x / L))
    dh, du = eulerian_rhs(state, bat, grav=1.0)

    def reflect(a):
        return np.roll(a[::-1], 1)

    assert np.max(np.abs(dh.values - reflect(dh.values))) < 1e-12
    assert np.max(np.abs(du.values + reflect(du.values))) < 1e-12


def test_rhs_mass_term_sums_to_zero():
    rng = np.random.default_rng(7)
    g = Grid(20.0, 256)
    hv = 1.0 + 0.3 * np.cos(2 * np.pi * g.x / 20.0 + rng.uniform(0, 2 * np.pi))
    uv = 0.4 * np.sin(6 * np.pi * g.x / 20.0)
    state = EulerianState(0.0, Field(g, hv), Field(g, uv))
    dh, _ = eulerian_rhs(state, bathymetry.flat(), grav=1.0)
    assert abs(np.sum(dh.values)) <= 1e-13 * np.max(np.abs(dh.values)) * g.n


# ---------------------------------------------------------------- stepping


def test_lake_at_rest_stays_at_rest():
    L = 20.0
    bat = bathymetry.sinusoidal(L, 1, 0.05)
    g = Grid(L, 256)
    state = make_state(g, lambda x: 1.0 - bat.xi(x), np.zeros_like)
    out = run_eulerian(state, bat, 9.81, T=0.2)
    eta = out.h.values + bat.xi(g.x) - 1.0
    assert np.max(np.abs(out.u.values)) <= 1e-9
    assert np.max(np.abs(eta)) <= 1e-9


def test_mass_is_conserved():
    L = 20.0
    g = Grid(L, 256)
    bat = bathymetry.gaussian_bump(L, 12.0, 1.0, 0.2)
    state = make_state(
        g, lambda x: 1.0 + 0.1 * np.exp(-0.5 * ((x - 10.0) / 0.8) ** 2),
        np.zeros_like)
    m0 = np.sum(state.h.values) * g.dx
    out = run_eulerian(state, bat, 9.81, T=1.0)
    m1 = np.sum(out.h.values) * g.dx
    assert abs(m1 - m0) <= 1e-12 * m0


def test_reversibility_improves_at_fourth_order():
    # forward then velocity-reversed backward marching reconstructs the
    # initial data with O(dt^4) defect (the semi-discrete flow is reversible)
    L, n, T = 10.0, 64, 0.4
    g = Grid(L, n)
    bat = bathymetry.sinusoidal(L, 1, 0.03)
    state0 = make_state(g, lambda x: 1.0 + 0.05 * np.cos(2 * np.pi * x / L),
                        lambda x: 0.05 * np.sin(2 * np.pi * x / L))
    defects = []
    for dt in (0.02, 0.01):
        fwd = run_eulerian(state0, bat, 9.81, T=T, fixed_dt=dt)
        back = EulerianState(0.0, fwd.h, Field(g, -fwd.u.values))
        rec = run_eulerian(back, bat, 9.81, T=T, fixed_dt=dt)
        defects.append(np.max(np.abs(rec.h.values - state0.h.values))
                       + np.max(np.abs(rec.u.values + state0.u.values)))
    assert defects[0] < 1e-6
    assert defects[0] / defects[1] > 8.0


def test_rk4_temporal_order():
    L, n, T = 10.0, 64, 0.5
    g = Grid(L, n)
    bat = bathymetry.sinusoidal(L, 2, 0.04)
    state0 = make_state(g, lambda x: 1.0 + 0.08 * np.sin(2 * np.pi * x / L),
                        lambda x: 0.06 * np.cos(2 * np.pi * x / L))
    sols = [run_eulerian(state0, bat, 9.81, T=T, fixed_dt=dt)
            for dt in (0.02, 0.01, 0.005, 0.0025)]
    errs = [np.max(np.abs(a.u.values - b.u.values))
            + np.max(np.abs(a.h.values - b.h.values))
            for a, b in zip(sols[:-1], sols[1:])]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 3.5) and np.all(orders < 4.5)


def test_single_step_matches_run():
    g = Grid(10.0, 64)
    bat = bathymetry.sinusoidal(10.0, 1, 0.02)
    state = make_state(g, lambda x: 1.0 + 0.05 * np.sin(2 * np.pi * x / 10.0),
                       np.zeros_like)
    a = step_rk4(state, bat, 0.01, grav=9.81)
    b = run_eulerian(state, bat, 9.81, T=0.01, fixed_dt=0.01)
    assert np.array_equal(a.h.values, b.h.values)
    assert np.array_equal(a.u.values, b.u.values)


def test_observer_lands_on_requested_times():
    g = Grid(10.0, 64)
    bat = bathymetry.flat()
    state = make_state(g, lambda x: np.full_like(x, 1.0), np.zeros_like)
    seen = []
    run_eulerian(state, bat, 9.81, T=0.5, observe_at=[0.125, 0.25, 0.5],
                 observer=lambda s: seen.append(s.t))
    assert seen == [0.125, 0.25, 0.5]
    with pytest.raises(ValueError):
        run_eulerian(state, bat, 9.81, T=0.5, observe_at=[0.7])


def test_depth_collapse_raises():
    # diverging velocity dipole drains the midpoint
    L, n = 20.0, 128
    g = Grid(L, n)
    state = make_state(g, lambda x: np.full_like(x, 1.0),
                       lambda x: 12.0 * (x - 10.0) * np.exp(-0.5 * (x - 10.0) ** 2))
    with pytest.raises(DepthPositivityLost):
        run_eulerian(state, bathymetry.flat(), 9.81, T=2.0)


# ---------------------------------------------------------------- plumbing


def test_cfl_dt_values():
    g = Grid(16.0, 64)
    state = make_state(g, lambda x: np.full_like(x, 1.0), np.zeros_like)
    dt = cfl_dt(state, grav=1.0, control=StepControl(cfl=0.5))
    assert dt == pytest.approx(0.5 * g.dx)
    assert cfl_dt(state, 1.0, StepControl(cfl=0.5, dt_max=1e-3)) == 1e-3


def test_step_control_validation():
    with pytest.raises(ValueError):
        StepControl(cfl=0.0)
    with pytest.raises(ValueError):
        StepControl(cfl=1.5)
    with pytest.raises(ValueError):
        StepControl(dt_max=0.0)


def test_state_validation():
    g = Grid(10.0, 64)
    with pytest.raises(ValueError):
        EulerianState(0.0, g.field(lambda x: x - 5.0), g.field(np.zeros_like))
    with pytest.raises(GridMismatch):
        EulerianState(0.0, g.field(lambda x: np.ones_like(x)),
                      Grid(10.0, 128).field(np.zeros_like))
