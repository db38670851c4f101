import numpy as np
import pytest

from gnflow import bathymetry
from gnflow.errors import ConfigError
from gnflow.grid import Field, Grid, map_derivative
from gnflow.scenarios import (SCENARIO_NAMES, build_scenario,
                              check_edge_decay, make_bathymetry,
                              make_initial, solitary_profile)


def test_all_presets_build_and_pass_gates():
    for name in SCENARIO_NAMES:
        s = build_scenario(name)
        assert s.name == name
        assert np.min(s.h0.values) > 0.0
        assert s.T > 0 and s.cadence > 0 and s.grav > 0


def test_resolution_override():
    s = build_scenario("lake-at-rest", n=256)
    assert s.grid.n == 256


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        build_scenario("tsunami")


def test_solitary_profile_properties():
    g = Grid(100.0, 1024)
    h, u, c, kappa = solitary_profile(g.x, 0.2, 1.0, 1.0, 50.0)
    assert h.max() == pytest.approx(1.2, abs=1e-6)
    assert np.argmax(h) == np.argmin(np.abs(g.x - 50.0))
    assert c == pytest.approx(np.sqrt(1.2))
    # wave moves right, so fluid at the crest moves right too
    assert u[np.argmax(h)] > 0
    h0, u0, c0, _ = solitary_profile(g.x, 0.0, 1.0, 1.0, 50.0)
    assert np.all(h0 == 1.0) and np.all(u0 == 0.0)


def test_edge_decay_gate_rejects_edge_hump():
    g = Grid(20.0, 256)
    eta = np.exp(-0.5 * (g.x - 1.0) ** 2)  # sits inside the left band
    with pytest.raises(ConfigError):
        check_edge_decay(g, eta, np.zeros(g.n))
    check_edge_decay(g, np.zeros(g.n), np.zeros(g.n))  # clean data passes


def test_make_bathymetry_families():
    flat = make_bathymetry("flat", {}, 20.0)
    assert flat.amplitude == 0.0
    sin = make_bathymetry("sinusoidal", {"k": 2, "amp": 0.1}, 20.0)
    assert sin.xi(5.0) == pytest.approx(0.1 * np.sin(2 * np.pi * 2 * 5.0 / 20.0))
    with pytest.raises(ConfigError):
        make_bathymetry("staircase", {}, 20.0)


def test_make_initial_rejects_bad_combinations():
    g = Grid(20.0, 256)
    bump = make_bathymetry("gaussian-bump",
                           {"center": 10.0, "width": 1.0, "height": 0.2}, 20.0)
    with pytest.raises(ConfigError):
        make_initial("solitary", {"a": 0.2, "x0": 10.0}, g, bump)
    with pytest.raises(ConfigError):
        make_initial("mystery", {}, g, bump)
    tall = make_bathymetry("gaussian-bump",
                           {"center": 10.0, "width": 1.0, "height": 1.2}, 20.0)
    with pytest.raises(ConfigError) as exc:
        make_initial("rest", {}, g, tall)
    assert "depth" in str(exc.value)


def test_folded_map_family_actually_folds():
    g = Grid(20.0, 256)
    init = make_initial("folded-map", {"amp": 1.5}, g, bathymetry.flat())
    assert init.disp0 is not None
    phi = Field(g, g.x + init.disp0.values)
    assert np.min(map_derivative(phi)) < 0.0


def test_launch_velocity_matches_simple_wave():
    g = Grid(30.0, 512)
    bat = bathymetry.flat()
    init = make_initial("surface-hump",
                        {"center": 8.0, "width": 0.65, "amp": 0.08,
                         "launch": True}, g, bat, grav=2.0)
    rest = 1.0
    expect = 2.0 * (np.sqrt(2.0 * init.h0.values) - np.sqrt(2.0 * rest))
    assert np.allclose(init.u0.values, expect, atol=1e-14)
