"""Scalar fixed-point solves shared by both schemes.

The ITM flux equation N = F(N) may have several roots in the excitatory
regime, so roots are located by a uniform sign scan of g(N) = N - F(N)
refined with safeguarded Newton-bisection; near-tangent pairs that fall
inside a single scan cell are recovered by a local extremum search.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import InvalidParameterError, SolverError

SCAN_BRACKETS = 400
ROOT_TOL = 1e-12
TANGENT_TOL = 1e-8
_EPS = float(np.finfo(float).eps)
POLICIES = ("nearest-previous", "lowest", "highest", "fixed-index")


@dataclass
class RootReport:
    roots: np.ndarray
    psi_at_roots: np.ndarray
    tangent: np.ndarray
    selected: int = 0
    jump_event: bool = False
    scale: float = 1.0

    @property
    def value(self):
        return float(self.roots[self.selected])

    @property
    def psi(self):
        return float(self.psi_at_roots[self.selected])

    def __len__(self):
        return self.roots.size


def newton_bisect(f, a, b, df=None, x0=None, ftol=ROOT_TOL, xtol=0.0, maxiter=200):
    """Root of ``f`` in a sign-change bracket [a, b].

    Newton steps are accepted only while they stay inside the bracket and
    shrink |f| by half; otherwise the bracket is bisected.  Without ``df``
    the bracket goes to Brent's method.
    """
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise InvalidParameterError("newton_bisect needs a sign-change bracket")
    if df is None:
        return brentq(f, min(a, b), max(a, b), xtol=max(xtol, 1e-300),
                      rtol=4 * _EPS, maxiter=maxiter)
    if fa > 0:
        a, b, fa, fb = b, a, fb, fa        # keep f(a) < 0 < f(b)
    x = 0.5 * (a + b) if x0 is None or not min(a, b) < x0 < max(a, b) else x0
    fx = f(x)
    f_prev = math.inf
    for _ in range(maxiter):
        if abs(fx) <= ftol:
            return x
        if fx < 0:
            a, fa = x, fx
        else:
            b, fb = x, fx
        if abs(b - a) <= max(xtol, 4 * _EPS * max(abs(a), abs(b), 1e-300)):
            return x
        d = df(x)
        step_ok = False
        if d != 0 and math.isfinite(d) and abs(fx) <= 0.5 * f_prev:
            xn = x - fx / d
            step_ok = min(a, b) < xn < max(a, b)
        if not step_ok:
            xn = 0.5 * (a + b)
        f_prev = abs(fx)
        x = xn
        fx = f(x)
    return x


def _scalar(fn):
    return lambda x: float(np.asarray(fn(np.array([x], dtype=float))).ravel()[0])


def scan_roots(g, lo, hi, brackets=SCAN_BRACKETS, dg=None, ftol=ROOT_TOL,
               tangent_tol=TANGENT_TOL):
    """All roots of a vectorized ``g`` on [lo, hi].

    Returns (roots, tangent_flags), roots ascending.  Sign changes that do
    not refine to |g| <= ftol are jump discontinuities of g and are dropped.
    """
    if hi <= lo:
        gl = float(np.atleast_1d(g(np.array([lo])))[0])
        return (np.array([lo]), np.array([False])) if abs(gl) <= max(ftol, tangent_tol) else (np.array([]), np.array([], bool))
    x = np.linspace(lo, hi, brackets + 1)
    gx = np.asarray(g(x), dtype=float)
    gs = _scalar(g)
    dgs = _scalar(dg) if dg is not None else None
    found = []

    def refine(a, b):
        r = newton_bisect(gs, a, b, dgs, ftol=ftol)
        if abs(gs(r)) <= 10 * ftol:
            found.append((r, False))

    for i in np.flatnonzero(gx == 0):
        found.append((x[i], False))
    sgn = np.sign(gx)
    for i in np.flatnonzero(sgn[:-1] * sgn[1:] < 0):
        refine(x[i], x[i + 1])

    # interior dips of |g| toward zero without a sampled sign change
    ag = np.abs(gx)
    mid = slice(1, brackets)
    dips = ((sgn[mid] != 0) & (sgn[:-2] == sgn[mid]) & (sgn[2:] == sgn[mid])
            & (ag[mid] <= ag[:-2]) & (ag[mid] <= ag[2:]))
    for i in np.flatnonzero(dips) + 1:
        s = sgn[i]
        res = minimize_scalar(lambda t: s * gs(t), bounds=(x[i - 1], x[i + 1]),
                              method="bounded", options={"xatol": 1e-14 * max(1.0, hi)})
        xm, gm = float(res.x), gs(float(res.x))
        if gm * s < 0:
            refine(x[i - 1], xm)
            refine(xm, x[i + 1])
        elif abs(gm) <= tangent_tol:
            found.append((xm, True))

    if not found:
        return np.array([]), np.array([], dtype=bool)
    found.sort()
    roots, tang = [found[0][0]], [found[0][1]]
    sep = 1e-10 * max(1.0, abs(hi))
    for r, t in found[1:]:
        if r - roots[-1] > sep:
            roots.append(r)
            tang.append(t)
    return np.array(roots), np.array(tang, dtype=bool)


def discrete_flux_map(n, model, N, centers=None):
    """F(N) = ds sum_j p(s_j, N) n_j (cell-averaged rates for step-variable)."""
    centers = _centers(n) if centers is None else centers
    return model.bind(n.values, centers, n.ds)(N)


def _centers(n):
    return (np.arange(len(n)) + 0.5) * n.ds


def _flux_range(model, mass):
    cap = model.activity_cap if not model.bounded else None
    return model.p_sup(cap) * mass


def psi_from_flux(flux, N):
    """1 - dF/dN at N, analytic if available, else central differences."""
    N = float(N)
    if flux.has_deriv:
        return 1.0 - float(np.atleast_1d(flux.deriv(N))[0])
    h = 1e-6 * max(1.0, N)
    lo = max(N - h, 0.0)
    hi = N + h
    F = np.atleast_1d(flux(np.array([lo, hi])))
    return 1.0 - float((F[1] - F[0]) / (hi - lo))


def invertibility_psi(n, model, N, centers=None):
    centers = _centers(n) if centers is None else centers
    return psi_from_flux(model.bind(n.values, centers, n.ds), N)


def roots_of_flux(flux, upper, brackets=SCAN_BRACKETS):
    """RootReport for N = flux(N) on [0, upper]."""
    scale = max(1.0, upper)
    # the a-priori bound is attained (e.g. by an equilibrium); leave room for rounding
    upper = upper * (1.0 + 1e-9) + 1e-300
    g = lambda N: np.asarray(N, dtype=float) - flux(N)
    dg = (lambda N: 1.0 - flux.deriv(N)) if flux.has_deriv else None
    roots, tang = scan_roots(g, 0.0, upper, brackets, dg, ftol=ROOT_TOL * scale)
    if roots.size == 0:
        # g(0) <= 0 <= g(upper) and g is continuous: cannot happen
        raise SolverError(f"no root of N = F(N) on [0, {upper:.6g}]")
    psi = np.array([psi_from_flux(flux, r) for r in roots])
    return RootReport(roots, psi, tang, scale=scale)


def find_all_roots(n, model, brackets=SCAN_BRACKETS, centers=None) -> RootReport:
    centers = _centers(n) if centers is None else centers
    flux = model.bind(n.values, centers, n.ds)
    return roots_of_flux(flux, _flux_range(model, n.mass), brackets)


def select_branch(report, previous_N, policy="nearest-previous", index=None,
                  jump_threshold=math.inf):
    """Pick a root; sets ``report.selected`` and ``report.jump_event``.

    ``fixed-index`` is 1-based (index 2 is the middle of three roots).
    """
    r = report.roots
    if r.size == 0:
        raise SolverError("no roots to select from")
    if policy == "nearest-previous":
        d = np.abs(r - previous_N)
        best = d.min()
        k = int(np.flatnonzero(d <= best + 1e-14 * max(1.0, best))[0])
    elif policy == "lowest":
        k = 0
    elif policy == "highest":
        k = r.size - 1
    elif policy == "fixed-index":
        if index is None or not 1 <= index <= r.size:
            raise InvalidParameterError(
                f"fixed-index {index} out of range for {r.size} root(s)")
        k = index - 1
    else:
        raise InvalidParameterError(f"unknown branch policy {policy!r}")
    report.selected = k
    report.jump_event = bool(abs(r[k] - previous_N) > jump_threshold)
    return float(r[k])


def default_jump_threshold(dt, p_sup, mass):
    """10 dt ||p|| mass: displacement above which a step counts as a jump."""
    return 10.0 * dt * p_sup * mass


def branch_lost(g, previous, chosen, samples=64, rel=1e-9):
    """True when g is not monotone between the previous and the chosen root.

    A continued branch moves through a region where g keeps one slope sign;
    if the branch annihilated at a fold, the path to the surviving root
    crosses an extremum of g.
    """
    if previous == chosen:
        return False
    t = np.linspace(previous, chosen, samples + 1)
    v = np.asarray(g(t), dtype=float)
    dv = np.diff(v)
    slack = rel * max(1.0, float(np.abs(v).max()))
    return bool((dv > slack).any() and (dv < -slack).any())


def solve_activity_ddm(flux, alpha0, H, c, upper, guess=0.0, ftol=ROOT_TOL):
    """Solve X = c * alpha0 * F(X) + H on [0, upper].

    Returns X, or ``None`` when no root exists below ``upper`` (only
    possible for an unbounded hazard: the activity has blown up).
    """
    a = c * alpha0

    def h(X):
        return X - a * float(np.atleast_1d(flux(X))[0]) - H

    if a == 0:
        return H if H <= upper else None
    if flux.has_deriv:
        dh = lambda X: 1.0 - a * float(np.atleast_1d(flux.deriv(X))[0])
    else:
        dh = None
    h0 = h(0.0)
    if h0 >= 0:
        return 0.0 if h0 <= ftol else None
    hu = h(upper)
    if hu < 0:
        return None
    return newton_bisect(h, 0.0, upper, dh, x0=guess,
                         ftol=ftol * max(1.0, abs(H), upper))
