"""Acceptance criteria, one test each.

Every test records a single pass/fail line (printed in the pytest terminal
summary).  Running this file directly prints the same lines without pytest.
"""

import math
import sys
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

sys.path.insert(0, str(Path(__file__).resolve().parent))
from conftest import preset_run  # noqa: E402

from elapsedtime import (discrete_flux_map, find_all_roots, root_scan_oracle,  # noqa: E402
                         stationary_density, stationary_flux_roots)
from elapsedtime.config import PRESETS, load_preset, parse_config  # noqa: E402
from elapsedtime.oracles import BLOWUP_TIME, bisect_bracket, blowup_activity  # noqa: E402
from elapsedtime.scenarios import _with_grid, build, convergence_study, simulate  # noqa: E402
from elapsedtime.trajectory import bv_bound, bv_constants  # noqa: E402


def _ex1_exponential(lam, mode, dt, T):
    """Example 1 hazard and data with an exponential kernel."""
    text = (PRESETS["example1-ddm"]
            .replace("kind = gaussian", "kind = exponential")
            .replace("d = 0.5\n", "")
            .replace("lambda = 0.001", f"lambda = {lam}")
            .replace("mode = exact-limit", f"mode = {mode}"))
    return _with_grid(parse_config(text, f"ex1-exp-{lam}-{mode}"), dt=dt, T=T)


def _run(cfg):
    b = build(cfg)
    return b, simulate(b)


# --------------------------------------------------------------------------

def check_1():
    got = {}
    for name, target in (("example1-itm", 0.1800), ("example2-itm", 0.8186)):
        model = build(load_preset(name)).model
        got[name] = (stationary_flux_roots(model, method="closed"), target)
    ok = all(len(r) == 1 and abs(r[0] - t) <= 5e-4 for r, t in got.values())
    detail = ", ".join(f"{k}: {r} (ref {t})" for k, (r, t) in got.items())
    return ok, detail


def check_2():
    _, tr = preset_run("example1-itm")
    return tr.mass_drift <= 1e-8, f"relative mass drift {tr.mass_drift:.3e} (<= 1e-8)"


def check_3():
    bad = {}
    for name in sorted(PRESETS):
        _, tr = preset_run(name)
        v = tr.bound_violations()
        if v:
            bad[name] = ", ".join(f"{k}={val:.4g}" for k, val in v)
    detail = ("all presets within bounds" if not bad else
              "violations: " + "; ".join(f"{k} [{v}]" for k, v in bad.items()))
    return not bad, detail


def check_4():
    b, tr = preset_run("example1-itm")
    (N_star,) = stationary_flux_roots(b.model)
    err = abs(float(tr.value_at("N", 10.0)) - N_star)
    stat = stationary_density(b.model, N_star, b.grid)
    l1 = b.grid.ds * float(np.abs(tr.snapshots[30.0].values - stat.values).sum())
    ok = err <= 1e-2 and l1 <= 5e-2
    return ok, f"|N(10) - N*| = {err:.2e} (<= 1e-2), L1(n(30), n*) = {l1:.2e} (<= 5e-2)"


def check_5():
    rows = convergence_study(load_preset("linear-unit"), 3)
    orders = [r[3] for r in rows[1:]]
    ok = [r[0] for r in rows] == [0.04, 0.02, 0.01] and all(0.8 <= q <= 1.2 for q in orders)
    errs = ", ".join(f"ds={r[0]:g}: {r[2]:.3e}" for r in rows)
    return ok, f"{errs}; orders {[round(q, 3) for q in orders]} (in [0.8, 1.2])"


def check_6():
    b = build(load_preset("example3-itm"))
    n0, model = b.n0, b.model
    report = find_all_roots(n0, model)
    g = lambda N: N - float(np.atleast_1d(discrete_flux_map(n0, model, N))[0])
    upper = model.p_sup() * n0.mass
    brackets = root_scan_oracle(g, 0.0, upper, resolution=10_000)
    oracle = np.array([bisect_bracket(g, a, c) for a, c in brackets])
    ok = len(report) == 3 and oracle.size == 3 and \
        float(np.max(np.abs(report.roots - oracle))) <= 1e-6
    return ok, (f"{len(report)} roots {np.round(report.roots, 6).tolist()}, oracle "
                f"{np.round(oracle, 6).tolist()}")


def check_7():
    b, tr = preset_run("example2-itm")
    k = math.ceil(0.2 / b.grid.dt)
    jumps = np.flatnonzero(tr.jump)
    misplaced = []
    for m in jumps:
        lo, hi = max(0, m - k), min(tr.psi.size, m + k + 1)
        where = lo + int(np.argmin(tr.psi[lo:hi]))
        if where > m:
            misplaced.append(round(float(tr.t[m]), 3))
    min_psi = float(np.nanmin(tr.psi))
    ok = jumps.size >= 2 and min_psi < 0.25 and not misplaced
    return ok, (f"{jumps.size} jumps, min psi {min_psi:.3f}, jumps whose local psi minimum "
                f"lies after the jump: {misplaced or 'none'}")


def check_8():
    diffs = []
    for dt in (0.01, 0.005):
        _, conv = _run(_ex1_exponential(0.1, "convolution", dt, 5.0))
        _, ode = _run(_ex1_exponential(0.1, "ode", dt, 5.0))
        diffs.append(float(np.max(np.abs(conv.X - ode.X))))
    ratio = diffs[0] / diffs[1]
    return 1.6 <= ratio <= 2.4, (f"max|X_conv - X_ode| = {diffs[0]:.3e} (dt 0.01), "
                                 f"{diffs[1]:.3e} (dt 0.005), ratio {ratio:.3f}")


def check_9():
    dt = 0.005
    _, itm = _run(_with_grid(load_preset("example1-itm"), T=10.0, dt=dt))
    dist = []
    for lam in (0.1, 0.01):
        _, tr = _run(_ex1_exponential(lam, "ode", dt, 10.0))
        sel = (tr.t >= 1.0) & (tr.t <= 10.0)
        dist.append(float(np.max(np.abs(tr.X[sel] - itm.N[sel]))))
    return dist[1] < dist[0], (f"sup|X - N_itm| on [1, 10]: lambda 0.1 -> {dist[0]:.3e}, "
                               f"lambda 0.01 -> {dist[1]:.3e}")


def check_10():
    b, tr = preset_run("example1-ddm")
    d = 0.5
    t = tr.t[(tr.t >= 15.0) & (tr.t <= 20.0)]
    lag = float(np.max(np.abs(tr.value_at("X", t) - tr.value_at("N", t - d))))
    late = tr.t >= 10.0
    peaks, _ = find_peaks(tr.N[late], prominence=0.05)
    period = float(np.mean(np.diff(tr.t[late][peaks]))) if peaks.size > 1 else math.nan
    ok = lag <= 5e-2 and abs(period - 2 * d) <= 0.15 * 2 * d
    return ok, f"sup|X(t) - N(t - d)| = {lag:.2e} (<= 5e-2), period of N {period:.4f} (2d = 1)"


def check_11():
    _, tr = preset_run("blowup-ddm")
    early = tr.t <= 2.0
    err = max(abs(x - blowup_activity(t)) for t, x in zip(tr.t[early], tr.X[early]))
    event = tr.blowup
    ok = err <= 1e-2 and event is not None and 2.3 <= event.t <= 2.6
    when = f"{event.t:.4f}" if event else "none"
    return ok, (f"max error on [0, 2] {err:.2e} (<= 1e-2), blow-up event at t = {when} "
                f"(oracle {BLOWUP_TIME:.4f})")


def check_12():
    b, tr = preset_run("example1-itm")
    C1, C2 = bv_constants(b.model.norms(), b.n0.mass, b.n0.sup)
    bound = np.array([bv_bound(t, tr.tv[0], C1, C2) for t in tr.t])
    over = np.flatnonzero(tr.tv > bound * (1 + 1e-12))
    return over.size == 0, (f"C1 = {C1:.4g}, C2 = {C2:.4g}, max TV/bound {np.max(tr.tv / bound):.4f}, "
                            f"{over.size} steps over")


def check_13():
    _, itm = preset_run("example4-itm")
    late = itm.jump_times[itm.jump_times >= itm.t[-1] / 2]
    gaps = np.diff(itm.jump_times)[-3:]
    itm_periodic = late.size >= 2 and gaps.size == 3 and np.ptp(gaps) <= 0.1 * gaps.mean()
    itm_psi = float(np.nanmin(itm.psi))

    b, ddm = preset_run("example4-ddm")
    J = b.cfg.kernel["J"]
    sel = (ddm.t >= 10.0) & (ddm.t <= 14.0)
    track = float(np.max(np.abs(ddm.X[sel] / J - ddm.N[sel])))
    tail = ddm.t >= 7.0
    peaks, _ = find_peaks(ddm.N[tail], prominence=0.05)
    pg = np.diff(ddm.t[tail][peaks])
    ddm_periodic = pg.size >= 2 and np.ptp(pg) <= 0.1 * pg.mean()
    ok = (itm_periodic and itm_psi < 0.25 and not ddm.jump.any() and ddm_periodic
          and track <= 0.1)
    return ok, (f"ITM: {itm.jump.sum()} jumps, late gaps {np.round(gaps, 3).tolist()}, "
                f"min psi {itm_psi:.3f}; DDM: {int(ddm.jump.sum())} jumps, peak gaps "
                f"{np.round(pg, 3).tolist()}, sup|X/J - N| on [10, 14] = {track:.3e}")


CHECKS = {k: globals()[f"check_{k}"] for k in range(1, 14)}


def _assert(number, criterion):
    passed, detail = CHECKS[number]()
    criterion(number, passed, detail)
    assert passed, detail


def test_criterion_01_steady_states(criterion):
    _assert(1, criterion)


def test_criterion_02_mass_conservation(criterion):
    _assert(2, criterion)


def test_criterion_03_a_priori_bounds_on_every_preset(criterion):
    _assert(3, criterion)


def test_criterion_04_convergence_to_equilibrium(criterion):
    _assert(4, criterion)


def test_criterion_05_first_order_linear(criterion):
    _assert(5, criterion)


def test_criterion_06_three_roots(criterion):
    _assert(6, criterion)


def test_criterion_07_invertibility_and_jumps(criterion):
    _assert(7, criterion)


def test_criterion_08_convolution_vs_ode(criterion):
    _assert(8, criterion)


def test_criterion_09_delta_limit_trend(criterion):
    _assert(9, criterion)


def test_criterion_10_lagged_synchronization(criterion):
    _assert(10, criterion)


def test_criterion_11_blowup(criterion):
    _assert(11, criterion)


def test_criterion_12_tv_bound(criterion):
    _assert(12, criterion)


def test_criterion_13_variable_refractory(criterion):
    _assert(13, criterion)


if __name__ == "__main__":
    failed = 0
    for number, check in CHECKS.items():
        passed, detail = check()
        failed += not passed
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}", flush=True)
    sys.exit(1 if failed else 0)
