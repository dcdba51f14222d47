"""Stationary states: roots of N = F(N) with F(N) = 1 / int_0^inf S(s, N) ds.

S(s, N) = exp(-int_0^s p(u, N) du) is the survival function.  The stationary
density is N S(s, N).  ``coupling`` evaluates the hazard at coupling * N,
which is how a DDM kernel of mass J enters (the activity is X = J N).
"""

import math

import numpy as np
from scipy.integrate import quad

from .errors import NonFiringHazardError
from .fixedpoint import SCAN_BRACKETS, scan_roots
from .grid import DensityVector, cell_averages

SURVIVAL_CUT = 1e-14


def _closed_form(model, N, coupling):
    X = coupling * N
    if model.kind == "step-fixed":
        phi = float(model.phi(X))
        if phi <= 0:
            return 0.0
        return phi / (model.sigma * phi + 1.0)
    if model.kind == "step-variable":
        return 1.0 / (float(model.sigma_fn(model.coupling * X)) + 1.0)
    if model.kind == "unbounded-quadratic":
        return float(model.rate(0.0, X))
    return None


def _cumulative(model, s, X):
    return float(np.asarray(model.cumulative(s, X)))


def _survival_integral(model, X):
    """int_0^L exp(-Lambda(s)) ds with L the first doubling where S < 1e-14."""
    L = 1.0
    while _cumulative(model, L, X) < -math.log(SURVIVAL_CUT):
        L *= 2.0
        if L > 1e6:
            raise NonFiringHazardError(
                f"hazard {model.kind!r} does not fire at activity {X:.6g}: "
                "the survival integral diverges")
    pts = [b for b in model.breakpoints(X) if 0 < b < L]
    val, _ = quad(lambda s: math.exp(-_cumulative(model, s, X)), 0.0, L,
                  points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def stationary_flux(model, N, coupling=1.0, method="auto"):
    """F(N) for the stationary problem; ``method`` is auto|closed|quadrature."""
    if method != "quadrature":
        F = _closed_form(model, N, coupling)
        if F is not None:
            return F
        if method == "closed":
            raise ValueError(f"no closed form for hazard kind {model.kind!r}")
    return 1.0 / _survival_integral(model, coupling * N)


def stationary_flux_roots(model, coupling=1.0, upper=None, brackets=SCAN_BRACKETS,
                          method="auto"):
    """Ascending roots of N = F(N) on [0, upper] (default ||p||_inf)."""
    if upper is None:
        cap = None if model.bounded else model.activity_cap
        upper = model.p_sup(cap)
    if upper <= 0:
        raise NonFiringHazardError(f"hazard {model.kind!r} vanishes identically")

    def g(N):
        N = np.atleast_1d(np.asarray(N, dtype=float))
        return N - np.array([stationary_flux(model, x, coupling, method) for x in N])

    roots, _ = scan_roots(g, 0.0, upper, brackets, ftol=1e-13 * max(1.0, upper))
    return [float(r) for r in roots]


def stationary_profile(model, N_star, coupling=1.0):
    """Callable s -> N* exp(-int_0^s p(u, N*) du)."""
    X = coupling * N_star
    if model.kind == "smooth":
        cum = np.vectorize(lambda s: _cumulative(model, s, X))
    else:
        cum = lambda s: model.cumulative(s, X)
    return lambda s: N_star * np.exp(-np.asarray(cum(np.asarray(s, dtype=float))))


def stationary_density(model, N_star, grid, coupling=1.0) -> DensityVector:
    """Cell averages of the stationary density on ``grid``."""
    f = stationary_profile(model, N_star, coupling)
    bps = tuple(model.breakpoints(coupling * N_star))
    return DensityVector(cell_averages(f, grid, bps), grid.ds)
