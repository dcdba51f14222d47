import math

import numpy as np
import pytest

from elapsedtime import InvalidParameterError, SolverError, select_branch, solve_activity_ddm
from elapsedtime.fixedpoint import (RootReport, branch_lost, default_jump_threshold,
                                    newton_bisect, roots_of_flux, scan_roots)
from elapsedtime.hazards import BoundFlux


def test_newton_bisect_with_and_without_derivative():
    f = lambda x: x ** 3 - 2.0
    r1 = newton_bisect(f, 0.0, 2.0, df=lambda x: 3 * x * x)
    r2 = newton_bisect(f, 0.0, 2.0)
    assert r1 == pytest.approx(2 ** (1 / 3), abs=1e-12)
    assert r2 == pytest.approx(2 ** (1 / 3), abs=1e-12)
    with pytest.raises(InvalidParameterError):
        newton_bisect(f, 2.0, 3.0)


def test_scan_finds_all_simple_roots():
    g = lambda x: (x - 0.1) * (x - 0.5) * (x - 0.9)
    roots, tangent = scan_roots(g, 0.0, 1.0)
    assert np.allclose(roots, [0.1, 0.5, 0.9], atol=1e-12)
    assert not tangent.any()


def test_scan_recovers_pair_inside_one_cell():
    # two roots 1e-4 apart never straddle a sampled sign change
    g = lambda x: (x - 0.503) * (x - 0.5031)
    roots, _ = scan_roots(g, 0.0, 1.0, brackets=50)
    assert roots.size == 2
    assert np.allclose(roots, [0.503, 0.5031], atol=1e-10)


def test_scan_flags_tangency():
    roots, tangent = scan_roots(lambda x: (x - 0.3) ** 2, 0.0, 1.0, brackets=64)
    assert roots.size == 1 and tangent[0]
    assert roots[0] == pytest.approx(0.3, abs=1e-4)


def _report(values):
    r = np.asarray(values, dtype=float)
    return RootReport(r, np.ones_like(r), np.zeros(r.size, dtype=bool))


@pytest.mark.parametrize("policy,index,expected", [
    ("nearest-previous", None, 0.4), ("lowest", None, 0.1), ("highest", None, 0.9),
    ("fixed-index", 2, 0.4)])
def test_branch_policies(policy, index, expected):
    assert select_branch(_report([0.1, 0.4, 0.9]), 0.45, policy, index) == expected


def test_branch_policy_errors():
    with pytest.raises(InvalidParameterError):
        select_branch(_report([0.1]), 0.0, "fixed-index", 2)
    with pytest.raises(InvalidParameterError):
        select_branch(_report([0.1]), 0.0, "random")
    with pytest.raises(SolverError):
        select_branch(_report([]), 0.0)


def test_threshold_jump_flag():
    rep = _report([0.1, 0.9])
    select_branch(rep, 0.85, jump_threshold=0.1)
    assert not rep.jump_event
    select_branch(rep, 0.45, jump_threshold=0.1)
    assert rep.jump_event
    assert default_jump_threshold(0.01, 2.0, 1.5) == pytest.approx(0.3)


def test_branch_lost_detects_fold():
    # root near 0.2 vanished; the path to 0.8 crosses a maximum of g
    g = lambda x: np.asarray(x) * 0 + (np.asarray(x) - 0.5) ** 2 - 0.09
    assert branch_lost(g, 0.35, 0.8)
    mono = lambda x: np.asarray(x) - 0.8
    assert not branch_lost(mono, 0.75, 0.8)


class _Linear(BoundFlux):
    def __init__(self, a, b):
        self.a, self.b = a, b
        self.has_deriv = True

    def __call__(self, N):
        return self.a * np.asarray(N, dtype=float) + self.b

    def deriv(self, N):
        return np.full(np.shape(N), self.a)


def test_roots_of_flux_linear():
    rep = roots_of_flux(_Linear(0.5, 0.2), upper=2.0)
    assert len(rep) == 1
    assert rep.value == pytest.approx(0.4)
    assert rep.psi == pytest.approx(0.5)


def test_activity_solve_and_blowup_signal():
    f = _Linear(0.5, 1.0)
    X = solve_activity_ddm(f, 1.0, 0.1, 0.5, upper=10.0)
    assert X == pytest.approx(0.25 * X + 0.5 + 0.1)
    # X = 2 F(X) + H has its root beyond the cap
    assert solve_activity_ddm(_Linear(0.4, 1.0), 1.0, 0.0, 2.0, upper=3.0) is None
    assert math.isclose(solve_activity_ddm(f, 0.0, 0.3, 1.0, 10.0), 0.3)
