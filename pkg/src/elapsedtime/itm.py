"""Explicit upwind scheme for the instantaneous transmission model.

Each step transports the density one upwind update with the rates frozen at
the current flux, then re-solves the flux equation N = F(N) on the new
density and follows a root branch.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import CFLViolationError, SolverError
from .fixedpoint import (SCAN_BRACKETS, branch_lost, psi_from_flux,
                         roots_of_flux, select_branch)
from .grid import DensityVector, cfl_dt_itm, total_variation
from .trajectory import BOUND_SLACK, Event, Trajectory

CFL_SLACK = 1e-12


def upwind_update(values, inflow, rates, dt, ds):
    """n_j - dt/ds (n_j - n_{j-1}) - dt p_j n_j with n_0 := inflow.

    Returns (new values, mass that left through the right end).
    """
    a = dt / ds
    upstream = np.empty_like(values)
    upstream[0] = inflow
    upstream[1:] = values[:-1]
    new = values - a * (values - upstream) - dt * rates * values
    return new, dt * values[-1]


def activity_cap(model, grid):
    """Effective activity cap: the user cap, lowered for unbounded hazards
    to the largest activity the time step can still resolve (CFL)."""
    if model.bounded:
        return None
    cap = model.activity_cap
    return min(cap, model.cap_for_step(grid.ds, grid.dt))


def check_cfl(grid, p_sup, bound=None):
    bound = cfl_dt_itm(grid.ds, p_sup) if bound is None else bound
    if grid.dt > bound * (1 + CFL_SLACK):
        raise CFLViolationError(grid.dt, bound)
    return bound


@dataclass(frozen=True)
class ItmState:
    m: int
    t: float
    density: DensityVector
    N: float
    psi: float
    n_roots: int = 1
    jump: bool = False
    outflow: float = 0.0


class _Context:
    """Per-run constants (grid, norms, branch options)."""

    def __init__(self, model, grid, mass0, policy="nearest-previous", index=None,
                 jump_threshold=None, flux_solve="exact", brackets=SCAN_BRACKETS):
        self.model = model
        self.grid = grid
        self.centers = grid.centers
        self.cap = activity_cap(model, grid)
        self.p_sup = model.p_sup(self.cap)
        self.mass0 = mass0
        self.upper = self.p_sup * mass0
        self.policy = policy
        self.index = index
        self.flux_solve = flux_solve
        self.brackets = brackets
        # branch loss is always checked; a displacement threshold is opt-in
        self.jump_threshold = math.inf if jump_threshold is None else jump_threshold


def itm_init(n0: DensityVector, model, grid, branch_policy="nearest-previous",
             index=None, ctx=None):
    """Initial flux from the roots of N = F(N) on the initial density."""
    ctx = ctx or _Context(model, grid, n0.mass, branch_policy, index)
    flux = model.bind(n0.values, ctx.centers, n0.ds)
    report = roots_of_flux(flux, ctx.upper, ctx.brackets)
    # no history at t = 0: nearest-previous starts from zero activity
    N0 = select_branch(report, 0.0, branch_policy, index)
    return ItmState(0, 0.0, n0, N0, report.psi, len(report))


def itm_step(state: ItmState, model, grid, ctx=None) -> ItmState:
    ctx = ctx or _Context(model, grid, state.density.mass)
    check_cfl(grid, ctx.p_sup)
    v = state.density.values
    rates = model.cell_rates(ctx.centers, grid.ds, state.N)
    new, out = upwind_update(v, state.N, rates, grid.dt, grid.ds)
    if new.min() < -BOUND_SLACK:
        raise SolverError(f"negative density {new.min():.3e} under CFL", state.m + 1)
    np.maximum(new, 0.0, out=new)
    flux = model.bind(new, ctx.centers, grid.ds)
    if ctx.flux_solve == "frozen":
        N = float(np.atleast_1d(flux(state.N))[0])
        return ItmState(state.m + 1, state.t + grid.dt, DensityVector(new, grid.ds),
                        N, psi_from_flux(flux, N), 1, False, state.outflow + out)
    report = roots_of_flux(flux, ctx.upper, ctx.brackets)
    if ctx.policy == "fixed-index":
        policy, index = "nearest-previous", None        # index applies at t = 0 only
    else:
        policy, index = ctx.policy, ctx.index
    N = select_branch(report, state.N, policy, index, ctx.jump_threshold)
    jump = report.jump_event
    if not jump and len(report) > 0:
        g = lambda x: np.asarray(x, dtype=float) - flux(x)
        jump = branch_lost(g, state.N, N)
    return ItmState(state.m + 1, state.t + grid.dt, DensityVector(new, grid.ds),
                    N, report.psi, len(report), jump, state.outflow + out)


def _snapshot_steps(times, grid):
    return {min(grid.M, max(0, int(round(t / grid.dt)))): t for t in times}


def itm_run(n0: DensityVector, model, grid, branch_policy="nearest-previous",
            index=None, snapshot_times=(), flux_solve="exact", jump_threshold=None,
            brackets=SCAN_BRACKETS) -> Trajectory:
    """Run the ITM scheme on ``grid`` and collect per-step diagnostics."""
    started = time.perf_counter()
    ctx = _Context(model, grid, n0.mass, branch_policy, index, jump_threshold,
                   flux_solve, brackets)
    check_cfl(grid, ctx.p_sup)
    state = itm_init(n0, model, grid, branch_policy, index, ctx)
    M = grid.M
    series = {k: np.full(M + 1, math.nan) for k in ("N", "psi", "mass", "tv")}
    jump = np.zeros(M + 1, dtype=bool)
    n_roots = np.zeros(M + 1, dtype=int)
    snaps = _snapshot_steps(snapshot_times, grid)
    snapshots = {}
    events = []
    dmin, dmax = float(n0.values.min(initial=0.0)), float(n0.values.max(initial=0.0))

    def record(st):
        m = st.m
        series["N"][m] = st.N
        series["psi"][m] = st.psi
        series["mass"][m] = st.density.mass
        series["tv"][m] = total_variation(st.density, st.N)
        jump[m] = st.jump
        n_roots[m] = st.n_roots
        if m in snaps:
            snapshots[snaps[m]] = st.density

    record(state)
    for _ in range(M):
        prev = state
        try:
            state = itm_step(state, model, grid, ctx)
        except SolverError as exc:
            if exc.step is None:
                exc.step = state.m + 1
            raise
        record(state)
        v = state.density.values
        dmin = min(dmin, float(v.min()))
        dmax = max(dmax, float(v.max()))
        if state.jump:
            events.append(Event("jump", state.m, state.t,
                                {"from": prev.N, "to": state.N, "psi_before": prev.psi}))
    meta = {"n0_sup": n0.sup, "mass0": n0.mass, "p_sup": ctx.p_sup,
            "cfl_bound": cfl_dt_itm(grid.ds, ctx.p_sup), "branch": branch_policy,
            "index": index, "flux_solve": flux_solve,
            "jump_threshold": ctx.jump_threshold,
            "wall_time": time.perf_counter() - started}
    return Trajectory("itm", grid, grid.times, series["N"], series["psi"],
                      series["mass"], series["tv"], jump, n_roots,
                      snapshots=snapshots, events=events, outflow=state.outflow,
                      density_min=dmin, density_max=dmax,
                      final_density=state.density, meta=meta)


def linear_run(n0: DensityVector, model, grid, prescribed_flux, snapshot_times=()):
    """Upwind scheme for the linear problem: the boundary flux is the given
    function N(t) and the hazard is evaluated at that N."""
    p_sup = model.p_sup(activity_cap(model, grid))
    check_cfl(grid, p_sup)
    M = grid.M
    N = np.array([float(prescribed_flux(t)) for t in grid.times])
    mass = np.full(M + 1, math.nan)
    tv = np.full(M + 1, math.nan)
    snaps = _snapshot_steps(snapshot_times, grid)
    snapshots = {}
    v = np.array(n0.values, dtype=float)
    out = 0.0
    dmin, dmax = float(v.min(initial=0.0)), float(v.max(initial=0.0))
    for m in range(M + 1):
        dens = DensityVector(v, grid.ds)
        mass[m] = dens.mass
        tv[m] = total_variation(dens, N[m])
        if m in snaps:
            snapshots[snaps[m]] = dens
        if m == M:
            break
        rates = model.cell_rates(grid.centers, grid.ds, N[m])
        v, o = upwind_update(v, N[m], rates, grid.dt, grid.ds)
        out += o
        if v.min() < -BOUND_SLACK:
            raise SolverError(f"negative density {v.min():.3e} under CFL", m + 1)
        np.maximum(v, 0.0, out=v)
        dmin, dmax = min(dmin, float(v.min())), max(dmax, float(v.max()))
    meta = {"n0_sup": n0.sup, "mass0": n0.mass, "p_sup": p_sup,
            "cfl_bound": cfl_dt_itm(grid.ds, p_sup)}
    return Trajectory("linear", grid, grid.times, N, np.ones(M + 1), mass, tv,
                      np.zeros(M + 1, dtype=bool), np.ones(M + 1, dtype=int),
                      snapshots=snapshots, outflow=out, density_min=dmin,
                      density_max=dmax, final_density=dens, meta=meta)
