import numpy as np
import pytest

from gnflow import bathymetry
from gnflow.errors import DiffeoLost, NonMonotoneMap
from gnflow.eulerian import (EulerianState, StepControl, cfl_dt, eval_P,
                             run_eulerian)
from gnflow.grid import Field, Grid, compose, deriv, integrate, invert_map
from gnflow.lagrangian import (InitialDepth, LagrangianState,
                               assemble_A_conjugated, cfl_dt_lagrangian,
                               conj_deriv, conjugated_load, eval_F,
                               eval_P_conjugated, from_eulerian,
                               lagrangian_depth, run_lagrangian,
                               step_rk4_lagrangian, to_eulerian)
from gnflow.operator import assemble_A, load_vector, solve_A


def identity_state(grid, u=None, t=0.0):
    zero = Field(grid, np.zeros(grid.n))
    vel = zero if u is None else u
    return LagrangianState(t, zero, vel)


def wavy_map(grid, alpha=0.4, theta=0.7):
    # disp with phi_x = 1 + alpha cos(2 pi x/L + theta), diffeo for alpha < 1
    k = 2.0 * np.pi / grid.L
    disp = (alpha / k) * np.sin(k * grid.x + theta)
    return LagrangianState(0.0, Field(grid, disp),
                           Field(grid, np.zeros(grid.n)))


# -------------------------------------------------- identity degeneracies


def test_conj_deriv_identity_map_is_plain_deriv():
    g = Grid(10.0, 128)
    f = g.field(lambda x: np.sin(2 * np.pi * x / 10.0))
    state = identity_state(g)
    assert np.array_equal(conj_deriv(state, f).values, deriv(f).values)


def test_conj_deriv_of_the_map_itself_is_one():
    # D(phi)/phi_x = 1; phi = id + disp is not periodic, so feed the
    # periodic part and add the conjugated identity contribution 1/phi_x
    g = Grid(10.0, 256)
    state = wavy_map(g, alpha=0.5)
    ones = conj_deriv(state, state.disp).values + 1.0 / state.phi_x()
    assert np.max(np.abs(ones - 1.0)) <= 1e-12


def test_lagrangian_depth_identity_and_shift():
    g = Grid(10.0, 128)
    h0 = InitialDepth(g.field(lambda x: 1.0 + 0.2 * np.cos(2 * np.pi * x / 10.0)))
    assert np.array_equal(lagrangian_depth(identity_state(g), h0).values,
                          h0.h0.values)
    shift = LagrangianState(0.0, Field(g, np.full(g.n, 2.5)),
                            Field(g, np.zeros(g.n)))
    assert np.array_equal(lagrangian_depth(shift, h0).values, h0.h0.values)


def test_assemble_conjugated_identity_matches_eulerian():
    g = Grid(10.0, 128)
    bat = bathymetry.sinusoidal(10.0, 1, 0.05)
    h0 = InitialDepth(g.field(lambda x: 1.0 + 0.1 * np.sin(2 * np.pi * x / 10.0)))
    lag = assemble_A_conjugated(identity_state(g), h0, bat)
    eul = assemble_A(h0.h0, bat)
    assert np.array_equal(lag.diag, eul.diag)
    assert np.array_equal(lag.offdiag, eul.offdiag)


def test_assemble_conjugated_pure_shift_flat():
    g = Grid(10.0, 128)
    h0 = InitialDepth(g.field(lambda x: 1.0 + 0.1 * np.cos(2 * np.pi * x / 10.0)))
    shift = LagrangianState(0.0, Field(g, np.full(g.n, 1.25)),
                            Field(g, np.zeros(g.n)))
    lag = assemble_A_conjugated(shift, h0, bathymetry.flat())
    eul = assemble_A(h0.h0, bathymetry.flat())
    assert np.array_equal(lag.diag, eul.diag)
    assert np.array_equal(lag.offdiag, eul.offdiag)


def test_eval_P_conjugated_identity_degenerates_exactly():
    g = Grid(12.0, 256)
    bat = bathymetry.fourier(12.0, [0.04, 0.0], [0.0, 0.02])
    h0 = InitialDepth(g.field(lambda x: 1.0 + 0.15 * np.sin(2 * np.pi * x / 12.0)))
    u = g.field(lambda x: 0.3 * np.cos(4 * np.pi * x / 12.0))
    state = identity_state(g, u)
    lagr = eval_P_conjugated(state, u, h0, bat, grav=9.81)
    eul = eval_P(h0.h0, bat, u, grav=9.81)
    assert np.array_equal(lagr.values, eul.values)


def test_eval_F_identity_is_minus_eulerian_solve():
    g = Grid(12.0, 256)
    bat = bathymetry.sinusoidal(12.0, 2, 0.03)
    h0 = InitialDepth(g.field(lambda x: 1.0 + 0.1 * np.cos(2 * np.pi * x / 12.0)))
    u = g.field(lambda x: 0.2 * np.sin(2 * np.pi * x / 12.0))
    f = eval_F(identity_state(g, u), h0, bat, grav=9.81)
    ref = solve_A(h0.h0, bat, eval_P(h0.h0, bat, u, grav=9.81))
    assert np.max(np.abs(f.values + ref.values)) <= 1e-12


def test_cfl_identity_matches_eulerian():
    g = Grid(10.0, 128)
    h0 = InitialDepth(g.field(lambda x: 1.0 + 0.2 * np.sin(2 * np.pi * x / 10.0)))
    u = g.field(lambda x: 0.3 * np.cos(2 * np.pi * x / 10.0))
    lag = cfl_dt_lagrangian(identity_state(g, u), h0, 9.81, StepControl())
    eul = cfl_dt(EulerianState(0.0, h0.h0, u), 9.81, StepControl())
    assert lag == eul


# -------------------------------------------------- conjugation oracles


def conjugation_gap(n, alpha=0.4):
    """conj_deriv vs the explicit compose/invert construction."""
    L = 10.0
    g = Grid(L, n)
    state = wavy_map(g, alpha=alpha, theta=1.1)
    f = g.field(lambda x: np.sin(4 * np.pi * x / L) + 0.3 * np.cos(2 * np.pi * x / L))
    direct = conj_deriv(state, f)
    psi = invert_map(Field(g, state.phi()))
    pushed = compose(f, psi)          # f o phi^{-1} on the fixed grid
    back = compose(deriv(pushed), Field(g, state.phi()))
    return float(np.max(np.abs(direct.values - back.values)))


def test_conjugation_identity_order():
    errs = np.array([conjugation_gap(n) for n in (128, 256, 512)])
    orders = np.log2(errs[:-1] / errs[1:])
    assert np.all(orders >= 2.5)
    assert errs[-1] < 1e-5


def solve_pushforward_gap(n, seed):
    """Conjugated solve vs Eulerian solve of the pushed-forward problem."""
    rng = np.random.default_rng(seed)
    L = 10.0
    g = Grid(L, n)
    k = 2.0 * np.pi / L
    alpha = rng.uniform(0.2, 0.5)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    state = LagrangianState(
        0.0, Field(g, (alpha / k) * np.sin(k * g.x + theta)),
        Field(g, np.zeros(g.n)))
    bat = bathymetry.fourier(L, rng.uniform(-0.04, 0.04, 2),
                             rng.uniform(-0.04, 0.04, 2))
    h0 = InitialDepth(g.field(
        lambda x: 1.0 + 0.2 * np.sin(k * x + rng.uniform(0, 2 * np.pi))))

    def r(y):
        return np.cos(2 * k * y) + 0.5 * np.sin(k * y)

    phi = state.phi()
    x_lag = assemble_A_conjugated(state, h0, bat).solve(
        conjugated_load(state, r(phi)))

    psi = invert_map(Field(g, phi))
    h_eul = compose(lagrangian_depth(state, h0), psi)
    y_sol = solve_A(h_eul, bat, g.field(r))
    pulled = compose(y_sol, Field(g, phi))
    return float(np.max(np.abs(x_lag - pulled.values)))


def test_operator_conjugation_pushforward():
    for seed in (0, 1, 2):
        coarse = solve_pushforward_gap(256, seed)
        fine = solve_pushforward_gap(512, seed)
        assert coarse / fine >= 3.0
        assert fine < 1e-4


def test_eval_P_conjugated_pushforward_oracle():
    L = 10.0
    k = 2.0 * np.pi / L
    bat = bathymetry.fourier(L, [0.03, 0.0], [0.0, 0.02])

    def gap(n):
        g = Grid(L, n)
        state = wavy_map(g, alpha=0.35, theta=0.4)
        v = g.field(lambda x: 0.25 * np.sin(k * x) + 0.1 * np.cos(2 * k * x))
        h0 = InitialDepth(g.field(lambda x: 1.0 + 0.15 * np.cos(k * x)))
        lagr = eval_P_conjugated(state, v, h0, bat, grav=9.81)
        psi = invert_map(Field(g, state.phi()))
        h_eul = compose(lagrangian_depth(state, h0), psi)
        u_eul = compose(v, psi)
        pulled = compose(eval_P(h_eul, bat, u_eul, grav=9.81),
                         Field(g, state.phi()))
        return float(np.max(np.abs(lagr.values - pulled.values)))

    coarse, fine = gap(256), gap(512)
    assert coarse / fine >= 3.0
    assert fine < 2e-3


def test_mass_change_of_variables():
    # int (h - 1) dy pushed forward equals int (h0 - phi_x) dx + L - L
    L = 10.0
    for n, tol_scale in ((256, 1.0), (512, 0.125)):
        g = Grid(L, n)
        state = wavy_map(g, alpha=0.45, theta=2.0)
        h0 = InitialDepth(g.field(
            lambda x: 1.0 + 0.2 * np.sin(2 * np.pi * x / L)))
        psi = invert_map(Field(g, state.phi()))
        h_eul = compose(lagrangian_depth(state, h0), psi)
        lhs = integrate(Field(g, h_eul.values - 1.0))
        rhs = integrate(Field(g, h0.h0.values - state.phi_x()))
        assert abs(lhs - rhs) < 2e-4 * tol_scale  # O(dx^3)


# -------------------------------------------------- dynamics


def test_lake_at_rest_is_fixed_point():
    L = 20.0
    bat = bathymetry.sinusoidal(L, 1, 0.05)
    g = Grid(L, 512)
    h0 = InitialDepth(g.field(lambda x: 1.0 - bat.xi(x)))
    state = identity_state(g)
    f = eval_F(state, h0, bat, grav=1.0)
    assert np.max(np.abs(f.values)) <= 1e-10
    stepped = step_rk4_lagrangian(state, 0.01, h0, bat, grav=1.0)
    assert np.max(np.abs(stepped.disp.values)) <= 1e-12
    assert np.max(np.abs(stepped.vel.values)) <= 1e-12


def test_still_water_over_bump_is_not_steady():
    # h0 = 1 with xi != 0 is NOT lake-at-rest; the map must accelerate
    g = Grid(20.0, 256)
    bat = bathymetry.gaussian_bump(20.0, 10.0, 1.0, 0.2)
    h0 = InitialDepth(g.field(lambda x: np.ones_like(x)))
    f = eval_F(identity_state(g), h0, bat, grav=1.0)
    assert np.max(np.abs(f.values)) > 1e-3


def test_rk4_temporal_order_lagrangian():
    L, n, T = 10.0, 64, 0.5
    g = Grid(L, n)
    bat = bathymetry.sinusoidal(L, 2, 0.04)
    h0 = InitialDepth(g.field(lambda x: 1.0 + 0.08 * np.sin(2 * np.pi * x / L)))
    u0 = g.field(lambda x: 0.06 * np.cos(2 * np.pi * x / L))
    state0 = identity_state(g, u0)
    sols = [run_lagrangian(state0, h0, bat, 9.81, T=T, fixed_dt=dt)
            for dt in (0.02, 0.01, 0.005, 0.0025)]
    errs = [np.max(np.abs(a.disp.values - b.disp.values))
            + np.max(np.abs(a.vel.values - b.vel.values))
            for a, b in zip(sols[:-1], sols[1:])]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 3.5) and np.all(orders < 4.5)


def test_lagrangian_mass_invariant_over_run():
    L, n = 20.0, 128
    g = Grid(L, n)
    bat = bathymetry.gaussian_bump(L, 12.0, 1.0, 0.15)
    h0 = InitialDepth(g.field(
        lambda x: 1.0 + 0.1 * np.exp(-0.5 * ((x - 10.0) / 0.8) ** 2)))
    state = identity_state(g)
    m0 = integrate(Field(g, h0.h0.values - 1.0))
    mins = []
    out = run_lagrangian(state, h0, bat, 9.81, T=0.5,
                         step_monitor=lambda s: mins.append(np.min(s.phi_x())))
    m1 = integrate(Field(g, h0.h0.values - out.phi_x()))
    assert abs(m1 - m0) <= 1e-10
    assert min(mins) > 0.0


def test_to_eulerian_initial_state_round_trip():
    g = Grid(10.0, 128)
    h = g.field(lambda x: 1.0 + 0.2 * np.cos(2 * np.pi * x / 10.0))
    u = g.field(lambda x: 0.1 * np.sin(2 * np.pi * x / 10.0))
    lag, h0 = from_eulerian(EulerianState(0.0, h, u))
    back = to_eulerian(lag, h0)
    assert np.max(np.abs(back.h.values - h.values)) <= 1e-9
    assert np.max(np.abs(back.u.values - u.values)) <= 1e-9


def test_to_eulerian_pure_shift_uniform():
    g = Grid(10.0, 128)
    h0 = InitialDepth(g.field(lambda x: np.ones_like(x)))
    state = LagrangianState(0.0, Field(g, np.full(g.n, 3.7)),
                            Field(g, np.full(g.n, 0.4)))
    out = to_eulerian(state, h0)
    assert np.max(np.abs(out.h.values - 1.0)) <= 1e-12
    assert np.max(np.abs(out.u.values - 0.4)) <= 1e-12


def test_twin_short_run_agreement():
    # same datum, both formulations, shared dt: Eulerian view must agree
    # to discretization accuracy after a short evolution
    L, n, T = 20.0, 256, 0.25
    g = Grid(L, n)
    bat = bathymetry.flat()
    h = g.field(lambda x: 1.0 + 0.05 * np.exp(-0.5 * ((x - 10.0) / 1.2) ** 2))
    u = g.field(np.zeros_like)
    eul = run_eulerian(EulerianState(0.0, h, u), bat, 1.0, T=T, fixed_dt=0.01)
    lag0, h0 = from_eulerian(EulerianState(0.0, h, u))
    lag = run_lagrangian(lag0, h0, bat, 1.0, T=T, fixed_dt=0.01)
    view = to_eulerian(lag, h0)
    assert np.max(np.abs(view.h.values - eul.h.values)) < 5e-4
    assert np.max(np.abs(view.u.values - eul.u.values)) < 5e-4


# -------------------------------------------------- failure modes


def test_initial_depth_rejects_nonpositive():
    g = Grid(10.0, 64)
    with pytest.raises(ValueError):
        InitialDepth(g.field(lambda x: x - 5.0))


def test_folded_map_operations_raise():
    g = Grid(10.0, 128)
    k = 2.0 * np.pi / 10.0
    folded = LagrangianState(0.0, Field(g, (1.5 / k) * np.sin(k * g.x)),
                             Field(g, np.zeros(g.n)))
    f = g.field(lambda x: np.sin(k * x))
    with pytest.raises(NonMonotoneMap):
        conj_deriv(folded, f)
    with pytest.raises(NonMonotoneMap):
        folded.phi_x()


def test_folded_initial_map_step_raises_diffeo_lost():
    g = Grid(10.0, 128)
    k = 2.0 * np.pi / 10.0
    folded = LagrangianState(0.0, Field(g, (1.5 / k) * np.sin(k * g.x)),
                             Field(g, np.zeros(g.n)))
    h0 = InitialDepth(g.field(lambda x: np.ones_like(x)))
    with pytest.raises(DiffeoLost):
        step_rk4_lagrangian(folded, 1e-3, h0, bathymetry.flat(), grav=1.0)
