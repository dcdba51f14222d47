import math

import numpy as np
import pytest

from elapsedtime import (CFLViolationError, DensityVector, DomainTruncationError,
                         InvalidParameterError, UnboundedHazardError, build_grid, cfl_dt_ddm,
                         cfl_dt_itm, discretize_initial, suggest_s_max, total_mass,
                         total_variation)
from elapsedtime.grid import cell_averages
from elapsedtime.profiles import indicator, make_profile, plateau_exp, smooth_compatible


def test_time_step_divides_horizon():
    g = build_grid(0.02, 0.0196, 10.0, 30.0)
    assert g.M * g.dt == pytest.approx(30.0, rel=1e-14)
    assert g.dt <= 0.0196
    assert g.n_cells == 500
    assert g.centers[0] == pytest.approx(0.01)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_grid_rejects_bad_spacing(bad):
    with pytest.raises(InvalidParameterError):
        build_grid(bad, 0.01, 1.0, 1.0)


def test_itm_cfl_bound():
    assert cfl_dt_itm(0.02, 1.0) == pytest.approx(1 / 51)
    assert cfl_dt_itm(0.02, 0.0) == pytest.approx(0.02)
    with pytest.raises(UnboundedHazardError):
        cfl_dt_itm(0.02, math.inf)


def test_ddm_cfl_is_zero_for_unbounded_derivative():
    assert cfl_dt_ddm(0.02, 1.0, math.inf, 10.0, 1.0) == 0.0
    # without coupling the transport bound remains
    assert cfl_dt_ddm(0.02, 1.0, 0.0, 10.0, 1.0) == pytest.approx(1 / 51)
    assert cfl_dt_ddm(0.02, 1.0, 9.0, 1000.0, 1.5) < 1 / 51


def test_cfl_error_carries_numbers():
    err = CFLViolationError(1.0, 1 / 51)
    assert err.dt == 1.0 and err.bound == pytest.approx(1 / 51)


def test_mass_and_total_variation():
    n = DensityVector(np.array([1.0, 3.0, 2.0]), 0.5)
    assert total_mass(n) == pytest.approx(3.0)
    # |n1 - N| + |3 - 1| + |2 - 3| + |2 - 0|
    assert total_variation(n, 0.0) == pytest.approx(1 + 2 + 1 + 2)
    assert total_variation(DensityVector(np.array([]), 0.1), 0.7) == pytest.approx(0.7)


def test_negative_density_rejected():
    with pytest.raises(InvalidParameterError):
        DensityVector(np.array([1.0, -1e-3]), 0.1)


def test_cell_averages_are_exact_for_piecewise_linear():
    edges = np.linspace(0.0, 2.0, 11)
    avg = cell_averages(lambda s: np.where(s < 1.0, s, 2.0 - s), edges, breakpoints=(1.0,))
    mid = 0.5 * (edges[:-1] + edges[1:])
    assert np.allclose(avg, np.where(mid < 1.0, mid, 2.0 - mid), atol=1e-14)


@pytest.mark.parametrize("profile", [plateau_exp(), indicator(0.2, 0.9, 2.0),
                                     smooth_compatible(), make_profile("shifted-exp", onset=0.5)])
def test_discretized_mass_matches_closed_form(profile):
    g = build_grid(0.02, 0.01, suggest_s_max(profile.support, 0.02, 0.01, 1.0), 1.0)
    n = discretize_initial(profile, g)
    assert n.mass == pytest.approx(profile.mass, rel=1e-9)
    assert n.sup <= profile.sup + 1e-14


def test_truncated_domain_is_an_error():
    g = build_grid(0.02, 0.01, 2.0, 1.0)
    with pytest.raises(DomainTruncationError):
        discretize_initial(plateau_exp(), g)


def test_suggested_domain_exceeds_transport_reach():
    s = suggest_s_max(5.0, 0.02, 0.0196, 30.0)
    assert s >= 5.0 + 30.0
    # with a tiny Courant number numerical diffusion is wider than a few cells
    wide = suggest_s_max(1.0, 1.0, 1e-4, 3.0)
    assert wide > 1.0 + 3.0 + 2.0
