import math

import numpy as np
import pytest

from conftest import preset_run
from elapsedtime import (CFLViolationError, DensityVector, StepHazard, build_grid,
                         discretize_initial, itm_init, itm_run, itm_step, linear_run)
from elapsedtime.config import PRESETS, load_preset
from elapsedtime.hazards import Constant, ExpDecay
from elapsedtime.itm import upwind_update
from elapsedtime.profiles import bump, exp_equilibrium, plateau_exp
from elapsedtime.scenarios import _with_grid, build, simulate

ITM_PRESETS = sorted(k for k in PRESETS if k.endswith("-itm") or "-itm-" in k)


def test_upwind_unit_courant_is_exact_shift():
    v = np.array([0.0, 1.0, 2.0, 3.0])
    new, out = upwind_update(v, 5.0, np.zeros(4), 0.1, 0.1)
    assert np.array_equal(new, [5.0, 0.0, 1.0, 2.0])
    assert out == pytest.approx(0.3)


def test_pure_transport_preserves_mass_and_shifts():
    model = StepHazard(Constant(0.0), 0.0)
    g = build_grid(0.02, 0.02, 6.0, 2.0)
    n0 = discretize_initial(bump(1.0, 0.5), g)
    tr = itm_run(n0, model, g)
    assert np.all(tr.N == 0.0)
    assert tr.mass_drift <= 1e-13
    shift = int(round(2.0 / 0.02))
    assert np.allclose(tr.final_density.values[shift:], n0.values[:-shift], atol=1e-15)


def test_zero_density_gives_zero_flux():
    model = StepHazard(ExpDecay(9.0), 0.5)
    g = build_grid(0.02, 0.0196, 2.0, 1.0)
    tr = itm_run(DensityVector(np.zeros(g.n_cells), g.ds), model, g)
    assert np.all(tr.N == 0.0)


def test_cfl_is_enforced_before_stepping():
    model = StepHazard(ExpDecay(9.0), 0.5)
    g = build_grid(0.02, 0.05, 40.0, 1.0)
    with pytest.raises(CFLViolationError):
        itm_run(discretize_initial(plateau_exp(), g), model, g)


def test_example1_initial_flux_unique_and_invertible():
    b = build(load_preset("example1-itm"))
    st = itm_init(b.n0, b.model, b.grid)
    assert st.n_roots == 1
    assert st.psi >= 1.0
    nxt = itm_step(st, b.model, b.grid)
    assert nxt.m == 1 and nxt.density.mass == pytest.approx(b.n0.mass, rel=1e-13)


def test_example3_branches_start_apart():
    starts = [float(preset_run(f"example3-itm{s}")[1].N[0]) for s in ("", "-2", "-3")]
    assert starts[0] < starts[1] < starts[2]
    assert min(np.diff(starts)) > 0.2


def test_constant_rate_equilibrium_is_stationary():
    p0 = 1.5
    model = StepHazard(Constant(p0), 0.0)
    T = 2.0
    errs = []
    for ds in (0.04, 0.02):
        dt = 1.0 / (1.0 / ds + p0)
        g = build_grid(ds, dt, 30.0, T)
        n0 = discretize_initial(exp_equilibrium(p0), g)
        tr = itm_run(n0, model, g)
        assert np.allclose(tr.N, p0, atol=1e-10)
        errs.append(g.ds * np.abs(tr.final_density.values - n0.values).sum())
    assert errs[1] < 0.6 * errs[0]


def test_example1_settles_at_equilibrium():
    _, tr = preset_run("example1-itm")
    assert abs(tr.value_at("N", 10.0) - 0.1800) <= 1e-2
    tail = tr.N[tr.t >= 5.0]
    assert np.ptp(tail) < 1e-3


@pytest.mark.parametrize("name", ITM_PRESETS)
def test_density_bounded_by_data_or_inflow(name):
    # the entrywise bound that does hold: inflow enters at the current flux
    b, tr = preset_run(name)
    assert tr.density_min >= -1e-14
    assert tr.density_max <= max(b.n0.sup, float(np.nanmax(tr.N))) + 1e-12
    assert np.nanmax(tr.N) <= tr.meta["p_sup"] * tr.meta["mass0"] * (1 + 1e-12)


@pytest.mark.parametrize("name", ITM_PRESETS)
def test_mass_conserved(name):
    _, tr = preset_run(name)
    assert tr.mass_drift <= 1e-10


def test_example2_periodic_jumps():
    b, tr = preset_run("example2-itm")
    gaps = np.diff(tr.jump_times[tr.jump_times > 10.0])
    assert gaps.size >= 6
    # two jumps per period of roughly one time unit
    assert np.mean(gaps[::2] + gaps[1::2][:gaps[::2].size]) == pytest.approx(1.0, abs=0.05)


def test_strict_psi_window_on_fine_grid():
    """Every jump is preceded, within 0.2 time units, by psi below 0.25."""
    cfg = _with_grid(load_preset("example2-itm"), ds=0.005, dt_factor=0.9, T=10.0)
    b = build(cfg)
    tr = simulate(b)
    k = math.ceil(0.2 / b.grid.dt)
    jumps = np.flatnonzero(tr.jump)
    assert jumps.size >= 15
    worst = max(float(np.min(tr.psi[max(0, m - k):m + 1])) for m in jumps)
    assert worst < 0.25


def test_linear_run_matches_oracle_profile():
    from elapsedtime.oracles import characteristics_profile
    model = StepHazard(Constant(1.0), 0.0)
    g = build_grid(0.01, 1.0 / 101, 40.0, 1.0)
    prof = plateau_exp()
    n0 = discretize_initial(prof, g)
    tr = linear_run(n0, model, g, lambda t: 0.5)
    exact = characteristics_profile(prof, lambda t: 0.5, lambda s, N: 1.0, 1.0, g.centers)
    assert g.ds * np.abs(tr.final_density.values - exact).sum() < 0.02
