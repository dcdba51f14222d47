"""Upwind scheme for the distributed delay model.

The density is transported with rates frozen at the current total activity
X^m.  The new activity then solves an affine-in-history scalar equation

    X^{m+1} = c * F(X^{m+1}) + H,

where F is the flux map of the new density.  The "activity rule" supplies
c and H.  Three rules are available: the trapezoidal convolution with the
sampled kernel, one implicit Euler step of the ODE satisfied by
exponential kernels, and the exact delta limit of a narrow Gaussian (a pure
lag).  The new flux N^{m+1} = F(X^{m+1}) needs no root finding.
"""

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import CFLViolationError, InvalidParameterError, SolverError
from .fixedpoint import (SCAN_BRACKETS, branch_lost, psi_from_flux, scan_roots,
                         solve_activity_ddm)
from .grid import DensityVector, cfl_dt_ddm, cfl_dt_itm, total_variation
from .itm import activity_cap, check_cfl, upwind_update, _snapshot_steps
from .kernels import base_kind, delay_of, history_term, kernel_sample
from .trajectory import BOUND_SLACK, Event, Trajectory

MODES = ("auto", "convolution", "ode", "exact-limit")


class ConvolutionRule:
    """Trapezoidal (or literal uniform dt/2) quadrature of alpha * N."""

    name = "convolution"

    def __init__(self, sampled, weights="trapezoid"):
        self.sampled = sampled
        self.weights = weights
        self.dt = sampled.dt
        self.alpha_l1 = max(sampled.l1_discrete, sampled.J)

    def coefficients(self, N_hist, X_hist, m):
        c, H = history_term(self.sampled.samples, N_hist, m, self.dt, self.weights)
        return c * self.sampled.alpha0, H


class OdeRule:
    """Implicit Euler for lam X' + X = J N."""

    name = "ode"

    def __init__(self, lam, J, dt):
        self.lam, self.J, self.dt = float(lam), float(J), float(dt)
        self.alpha_l1 = self.J

    def coefficients(self, N_hist, X_hist, m):
        d = self.lam + self.dt
        return self.dt * self.J / d, self.lam * X_hist[m] / d


class LagRule:
    """Delta limit of a narrow Gaussian: X^m = J N^{m - lag}, zero past."""

    name = "lag"

    def __init__(self, lag, J):
        self.lag, self.J = int(lag), float(J)
        self.alpha_l1 = self.J

    def coefficients(self, N_hist, X_hist, m):
        if self.lag == 0:
            return self.J, 0.0
        k = m + 1 - self.lag
        return 0.0, (self.J * N_hist[k] if k >= 0 else 0.0)


def resolve_mode(kernel, dt, mode="auto"):
    """Pick the activity path: exact limit when the kernel is narrower than dt."""
    if mode not in MODES:
        raise InvalidParameterError(f"unknown DDM mode {mode!r}; choose from {MODES}")
    if mode == "auto":
        return "exact-limit" if kernel.width < dt else "convolution"
    return mode


def make_rule(kernel, grid, mode="auto", weights="trapezoid"):
    mode = resolve_mode(kernel, grid.dt, mode)
    kind = base_kind(kernel)
    if mode == "convolution":
        return ConvolutionRule(kernel_sample(kernel, grid.dt, grid.M), weights)
    if mode == "ode":
        if kind != "exponential":
            raise InvalidParameterError("the ODE path needs an exponential kernel")
        return OdeRule(kernel.width, kernel.J, grid.dt)
    # exact limit
    if kind == "exponential":
        return OdeRule(kernel.width, kernel.J, grid.dt)
    return LagRule(int(round(delay_of(kernel) / grid.dt)), kernel.J)


@dataclass(frozen=True)
class DdmState:
    m: int
    t: float
    density: DensityVector
    N: float
    X: float
    psi: float = 1.0
    n_roots: int = 1
    jump: bool = False
    outflow: float = 0.0
    blowup: bool = False


class _Context:
    def __init__(self, model, grid, rule, mass0, brackets=SCAN_BRACKETS):
        self.model = model
        self.grid = grid
        self.rule = rule
        self.centers = grid.centers
        self.cap = activity_cap(model, grid)
        norms = model.norms(self.cap)
        self.p_sup = norms.p_sup
        self.dXp_sup = norms.dNp_sup
        self.mass0 = mass0
        self.alpha_l1 = rule.alpha_l1
        if model.bounded:
            self.upper = self.p_sup * mass0 * self.alpha_l1 * (1 + 1e-12) + 1e-300
        else:
            self.upper = self.cap
        self.brackets = brackets


def check_cfl_ddm(ctx):
    """Transport CFL always; the contraction term only for the convolution."""
    grid = ctx.grid
    if isinstance(ctx.rule, ConvolutionRule):
        bound = cfl_dt_ddm(grid.ds, ctx.p_sup, ctx.dXp_sup, ctx.rule.sampled.alpha0,
                           ctx.mass0)
        if grid.dt > bound * (1 + 1e-12):
            detail = ("d_X p is unbounded for this hazard; use the ode or "
                      "exact-limit path" if math.isinf(ctx.dXp_sup) else "")
            raise CFLViolationError(grid.dt, bound, detail)
        return bound
    return check_cfl(grid, ctx.p_sup)


def _solve(flux, c, H, ctx, previous):
    """Root of X = c F(X) + H; returns (X, psi, n_roots, jump) or None."""
    if c == 0.0:
        X = H
        if not ctx.model.bounded and X > ctx.upper:
            return None
        return X, 1.0, 1, False
    contraction = c * ctx.dXp_sup * ctx.mass0
    if contraction < 1.0:
        X = solve_activity_ddm(flux, 1.0, H, c, ctx.upper, guess=previous)
        if X is None:
            return None
        return X, 1.0 - c * _dF(flux, X), 1, False
    g = lambda x: np.asarray(x, dtype=float) - c * flux(x) - H
    X, n_roots = _nearest_root(g, previous, ctx.upper, ctx.brackets)
    if X is None:
        return None
    return X, 1.0 - c * _dF(flux, X), n_roots, branch_lost(g, previous, X)


def _nearest_root(g, previous, upper, brackets):
    """Root of g on [0, upper] nearest ``previous``, and the root count.

    Only the winning sign-change bracket is refined; near-tangent dips are
    resolved by the full scan when no sampled sign change exists.
    """
    x = np.linspace(0.0, upper, brackets + 1)
    v = np.asarray(g(x), dtype=float)
    sgn = np.sign(v)
    zeros = np.flatnonzero(sgn == 0)
    change = np.flatnonzero(sgn[:-1] * sgn[1:] < 0)
    if zeros.size == 0 and change.size == 0:
        roots, _ = scan_roots(g, 0.0, upper, brackets, ftol=1e-12 * max(1.0, upper))
        if roots.size == 0:
            return None, 0
        d = np.abs(roots - previous)
        return float(roots[int(np.argmin(d))]), roots.size
    cand = [(abs(x[i] - previous), x[i], x[i]) for i in zeros]
    for i in change:
        mid = 0.5 * (x[i] + x[i + 1])
        cand.append((max(0.0, abs(mid - previous) - 0.5 * (x[1] - x[0])), x[i], x[i + 1]))
    cand.sort()
    _, a, b = cand[0]
    gs = lambda t: float(np.atleast_1d(g(t))[0])
    X = a if a == b else brentq(gs, a, b, xtol=1e-300, rtol=1e-15)
    return float(X), zeros.size + change.size


def _dF(flux, X):
    return 1.0 - psi_from_flux(flux, X)


def ddm_init(n0, model, grid):
    """X^0 = 0 (no past activity) and N^0 = F(0)."""
    flux = model.bind(n0.values, grid.centers, n0.ds)
    N0 = float(np.atleast_1d(flux(0.0))[0])
    return DdmState(0, 0.0, n0, N0, 0.0)


def ddm_step(state, model, kernel, grid, N_hist, X_hist, rule=None, ctx=None):
    """Advance one step.  ``N_hist``/``X_hist`` hold at least entries 0..m.

    Returns the next state; ``blowup`` is set (and the density left as the
    transported one) when no admissible activity exists below the cap.
    """
    rule = rule or make_rule(kernel, grid)
    ctx = ctx or _Context(model, grid, rule, state.density.mass)
    rates = model.cell_rates(ctx.centers, grid.ds, state.X)
    new, out = upwind_update(state.density.values, state.N, rates, grid.dt, grid.ds)
    if new.min() < -BOUND_SLACK:
        raise SolverError(f"negative density {new.min():.3e} under CFL", state.m + 1)
    np.maximum(new, 0.0, out=new)
    flux = model.bind(new, ctx.centers, grid.ds)
    c, H = rule.coefficients(N_hist, X_hist, state.m)
    density = DensityVector(new, grid.ds)
    sol = _solve(flux, c, H, ctx, state.X)
    if sol is None:
        return DdmState(state.m + 1, state.t + grid.dt, density, math.nan, math.inf,
                        math.nan, 0, False, state.outflow + out, blowup=True)
    X, psi, n_roots, jump = sol
    # X^0 = 0 is imposed, not a root of a step equation: no branch to lose
    jump = jump and state.m > 0
    N = float(np.atleast_1d(flux(X))[0])
    return DdmState(state.m + 1, state.t + grid.dt, density, N, X, psi, n_roots,
                    jump, state.outflow + out)


def ddm_run(n0, model, kernel, grid, snapshot_times=(), mode="auto",
            weights="trapezoid", brackets=SCAN_BRACKETS) -> Trajectory:
    """Run the DDM scheme.  Stops early with a blow-up event if the activity
    leaves the admissible range of an unbounded hazard."""
    rule = make_rule(kernel, grid, mode, weights)
    return _run(n0, model, kernel, grid, rule, snapshot_times, brackets)


def ddm_run_exponential_ode(n0, model, lam, grid, snapshot_times=(), J=1.0,
                            brackets=SCAN_BRACKETS) -> Trajectory:
    """DDM with exponential kernel via lam X' + X = J N (implicit Euler)."""
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    return _run(n0, model, None, grid, OdeRule(lam, J, grid.dt), snapshot_times,
                brackets)


def _run(n0, model, kernel, grid, rule, snapshot_times, brackets):
    started = time.perf_counter()
    ctx = _Context(model, grid, rule, n0.mass, brackets)
    cfl = check_cfl_ddm(ctx)
    state = ddm_init(n0, model, grid)
    M = grid.M
    N_hist = np.zeros(M + 1)
    X_hist = np.zeros(M + 1)
    series = {k: np.full(M + 1, math.nan) for k in ("psi", "mass", "tv")}
    jump = np.zeros(M + 1, dtype=bool)
    n_roots = np.zeros(M + 1, dtype=int)
    snaps = _snapshot_steps(snapshot_times, grid)
    snapshots, events = {}, []
    dmin, dmax = float(n0.values.min(initial=0.0)), float(n0.values.max(initial=0.0))

    def record(st):
        m = st.m
        N_hist[m], X_hist[m] = st.N, st.X
        series["psi"][m] = st.psi
        series["mass"][m] = st.density.mass
        series["tv"][m] = total_variation(st.density, st.N)
        jump[m] = st.jump
        n_roots[m] = st.n_roots
        if m in snaps:
            snapshots[snaps[m]] = st.density

    record(state)
    last = 0
    for _ in range(M):
        prev = state
        try:
            state = ddm_step(state, model, kernel, grid, N_hist, X_hist, rule, ctx)
        except SolverError as exc:
            if exc.step is None:
                exc.step = state.m + 1
            raise
        if state.blowup:
            events.append(Event("blow-up", state.m, state.t,
                                {"last_X": prev.X, "cap": ctx.upper}))
            state = prev
            break
        record(state)
        last = state.m
        v = state.density.values
        dmin = min(dmin, float(v.min()))
        dmax = max(dmax, float(v.max()))
        if state.jump:
            events.append(Event("jump", state.m, state.t,
                                {"from": prev.N, "to": state.N, "X_from": prev.X,
                                 "X_to": state.X, "psi_before": prev.psi}))
    n = last + 1
    meta = {"n0_sup": n0.sup, "mass0": n0.mass, "p_sup": ctx.p_sup,
            "alpha_l1": ctx.alpha_l1, "cfl_bound": cfl, "path": rule.name,
            "activity_cap": ctx.cap, "wall_time": time.perf_counter() - started}
    if isinstance(rule, ConvolutionRule):
        meta["weights"] = rule.weights
    if isinstance(rule, LagRule):
        meta["lag_steps"] = rule.lag
    return Trajectory("ddm", grid, grid.times[:n], N_hist[:n].copy(),
                      series["psi"][:n], series["mass"][:n], series["tv"][:n],
                      jump[:n], n_roots[:n], X=X_hist[:n].copy(),
                      snapshots=snapshots, events=events, outflow=state.outflow,
                      density_min=dmin, density_max=dmax,
                      final_density=state.density, meta=meta)
