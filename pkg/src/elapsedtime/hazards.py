"""Firing coefficients p(s, N) and the norms the schemes need.

Every model exposes pointwise evaluation (``rate``), the discrete flux map
F(N) = ds * sum_j p_j(N) n_j vectorized over an array of activities, and
analytic sup-norms.  The activity argument is N for the ITM and X for the
DDM; the models do not care which.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, UnboundedHazardError

DEFAULT_ACTIVITY_CAP = 1e3


# ---------------------------------------------------------------------------
# rate functions phi(N) for step hazards

@dataclass(frozen=True)
class ExpDecay:
    """phi(N) = exp(-k N); inhibitory for k > 0."""
    k: float = 9.0
    name = "exp-decay"

    def __call__(self, N):
        return np.exp(-self.k * np.asarray(N, dtype=float))

    def deriv(self, N):
        return -self.k * np.exp(-self.k * np.asarray(N, dtype=float))

    def sup(self, cap):
        return 1.0 if self.k >= 0 else math.exp(-self.k * cap)

    def inf(self, cap):
        return math.exp(-self.k * cap) if self.k >= 0 else 1.0

    def critical_points(self):
        return ()


@dataclass(frozen=True)
class Hill:
    """phi(N) = a N^2 / (N^2 + 1) + b."""
    a: float = 10.0
    b: float = 0.5
    name = "hill"

    def __call__(self, N):
        N = np.asarray(N, dtype=float)
        return self.a * N * N / (N * N + 1.0) + self.b

    def deriv(self, N):
        N = np.asarray(N, dtype=float)
        return 2.0 * self.a * N / (N * N + 1.0) ** 2

    def sup(self, cap):
        # monotone in N >= 0, approaching a + b from below
        return max(self.a + self.b, self.b)

    def inf(self, cap):
        return float(min(self.b, self(cap)))

    def critical_points(self):
        # phi' is extremal at N = 1/sqrt(3)
        return (1.0 / math.sqrt(3.0),)


@dataclass(frozen=True)
class Sigmoid:
    """phi(N) = 1 / (1 + exp(-a N + b))."""
    a: float = 9.0
    b: float = 3.5
    name = "sigmoid"

    def __call__(self, N):
        return 1.0 / (1.0 + np.exp(-self.a * np.asarray(N, dtype=float) + self.b))

    def deriv(self, N):
        f = self(N)
        return self.a * f * (1.0 - f)

    def sup(self, cap):
        return 1.0 if self.a > 0 else float(self(0.0))

    def inf(self, cap):
        return float(min(self(0.0), self(cap)))

    def critical_points(self):
        return (self.b / self.a,) if self.a != 0 else ()


@dataclass(frozen=True)
class Constant:
    c: float = 1.0
    name = "constant"

    def __call__(self, N):
        return np.full(np.shape(N), float(self.c))

    def deriv(self, N):
        return np.zeros(np.shape(N))

    def sup(self, cap):
        return float(self.c)

    def inf(self, cap):
        return float(self.c)

    def critical_points(self):
        return ()


PHI_REGISTRY = {"exp-decay": ExpDecay, "hill": Hill, "sigmoid": Sigmoid,
                "constant": Constant}


# refractory functions sigma(X)

@dataclass(frozen=True)
class HillRefractory:
    """sigma(X) = base - X^k / (X^k + 1); decreasing from base to base - 1."""
    base: float = 2.0
    k: float = 4.0
    name = "hill-refractory"

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        xk = X ** self.k
        return self.base - xk / (xk + 1.0)

    def deriv(self, X):
        X = np.asarray(X, dtype=float)
        xk = X ** self.k
        with np.errstate(divide="ignore", invalid="ignore"):
            d = -self.k * np.where(X > 0, xk / X, 0.0) / (xk + 1.0) ** 2
        return d

    def lower(self):
        return self.base - 1.0


SIGMA_REGISTRY = {"hill-refractory": HillRefractory}


@dataclass(frozen=True)
class HazardNorms:
    p_sup: float
    gamma: float
    dNp_sup: float
    dsp_sup: float


def _sup_over(fn, cap, extra=()):
    """Max of a smooth scalar function over [0, cap]: endpoints, given
    critical points and a dense probe (the probe only tightens the bound)."""
    hi = cap if math.isfinite(cap) else 1e6
    pts = np.concatenate([[0.0, hi], [c for c in extra if 0 <= c <= hi],
                          np.linspace(0.0, min(hi, 50.0), 2001)])
    return float(np.max(fn(pts)))


# ---------------------------------------------------------------------------

class HazardModel:
    """Base class.  Subclasses set ``kind`` and implement the hooks below."""

    kind = "abstract"
    bounded = True
    activity_cap = DEFAULT_ACTIVITY_CAP

    def rate(self, s, N):
        raise NotImplementedError

    def dN(self, s, N):
        """Analytic d/dN p, or ``None`` when p is not differentiable in N."""
        raise NotImplementedError

    def cumulative(self, s, N):
        raise NotImplementedError

    def norms(self, cap=None) -> HazardNorms:
        raise NotImplementedError

    def breakpoints(self, N):
        return ()

    # discrete machinery -------------------------------------------------
    def cell_rates(self, centers, ds, N):
        """Per-cell rates used by the upwind update at activity N."""
        return self.rate(centers, N)

    def flux(self, values, centers, ds, N):
        """Discrete flux map F(N) = ds sum_j p_j(N) n_j, vectorized in N."""
        N = np.atleast_1d(np.asarray(N, dtype=float))
        rates = self.rate(centers[None, :], N[:, None])
        return ds * (rates @ values)

    def flux_dN(self, values, centers, ds, N):
        """d F / d N, or ``None`` when no analytic derivative exists."""
        N = np.atleast_1d(np.asarray(N, dtype=float))
        d = self.dN(centers[None, :], N[:, None])
        if d is None:
            return None
        return ds * (d @ values)

    def p_sup(self, cap=None):
        return self.norms(cap).p_sup

    def bind(self, values, centers, ds):
        """Flux map of one density as a callable; see :class:`BoundFlux`."""
        return BoundFlux(self, np.asarray(values, dtype=float), centers, ds)


class BoundFlux:
    """F(N) and dF/dN for a fixed density; ``deriv`` is None if not analytic."""

    def __init__(self, model, values, centers, ds):
        self.model = model
        self.values = values
        self.centers = centers
        self.ds = ds
        self.has_deriv = model.flux_dN(values[:1], centers[:1], ds, 0.0) is not None

    def __call__(self, N):
        return self.model.flux(self.values, self.centers, self.ds, N)

    def deriv(self, N):
        return self.model.flux_dN(self.values, self.centers, self.ds, N)


class _ScaledFlux(BoundFlux):
    """F(N) = factor(N) * A with A precomputed (s-separable hazards)."""

    def __init__(self, model, values, centers, ds, amount, factor, dfactor):
        self.model = model
        self.values = values
        self.centers = centers
        self.ds = ds
        self.amount = amount
        self._factor = factor
        self._dfactor = dfactor
        self.has_deriv = True

    def __call__(self, N):
        return self._factor(np.atleast_1d(np.asarray(N, dtype=float))) * self.amount

    def deriv(self, N):
        return self._dfactor(np.atleast_1d(np.asarray(N, dtype=float))) * self.amount


class _ThresholdFlux(BoundFlux):
    """F(N) = mass beyond sigma(c N), with the cell containing the threshold
    counted by its covered fraction.  Suffix sums are built once."""

    def __init__(self, model, values, centers, ds):
        self.model = model
        self.values = values
        self.centers = centers
        self.ds = ds
        self.has_deriv = False
        # suffix[k] = sum_{j >= k} n_j ; cell k (0-based) is [k ds, (k+1) ds)
        self._suffix = np.concatenate([np.cumsum(values[::-1])[::-1], [0.0]])

    def __call__(self, N):
        v, ds = self.values, self.ds
        if np.ndim(N) == 0:
            sig = float(self.model.threshold(float(N)))
            k = min(max(int(math.floor(sig / ds)), 0), v.size)
            partial = ((k + 1) * ds - sig) * v[k] if k < v.size else 0.0
            return ds * self._suffix[min(k + 1, v.size)] + partial
        sig = self.model.threshold(np.atleast_1d(np.asarray(N, dtype=float)))
        k = np.clip(np.floor(sig / ds).astype(int), 0, v.size)
        partial = np.where(k < v.size, ((k + 1) * ds - sig) * v[np.minimum(k, v.size - 1)], 0.0)
        return ds * self._suffix[np.minimum(k + 1, v.size)] + partial

    def deriv(self, N):
        return None


@dataclass(frozen=True)
class StepHazard(HazardModel):
    """p(s, N) = phi(N) chi_{s > sigma}: absolute refractory period sigma."""

    phi: object
    sigma: float
    activity_cap: float = DEFAULT_ACTIVITY_CAP
    kind = "step-fixed"

    def __post_init__(self):
        if self.sigma < 0:
            raise InvalidParameterError("refractory period must be >= 0")

    def rate(self, s, N):
        s = np.asarray(s, dtype=float)
        return np.where(s > self.sigma, self.phi(N), 0.0)

    def dN(self, s, N):
        s = np.asarray(s, dtype=float)
        return np.where(s > self.sigma, self.phi.deriv(N), 0.0)

    def cumulative(self, s, N):
        return self.phi(N) * np.maximum(np.asarray(s, dtype=float) - self.sigma, 0.0)

    def breakpoints(self, N):
        return (self.sigma,)

    def _active_mass(self, values, centers, ds):
        return ds * math.fsum(values[centers > self.sigma])

    def flux(self, values, centers, ds, N):
        N = np.atleast_1d(np.asarray(N, dtype=float))
        return self.phi(N) * self._active_mass(values, centers, ds)

    def flux_dN(self, values, centers, ds, N):
        N = np.atleast_1d(np.asarray(N, dtype=float))
        return self.phi.deriv(N) * self._active_mass(values, centers, ds)

    def bind(self, values, centers, ds):
        values = np.asarray(values, dtype=float)
        return _ScaledFlux(self, values, centers, ds,
                           self._active_mass(values, centers, ds),
                           self.phi, self.phi.deriv)

    def norms(self, cap=None):
        cap = self.activity_cap if cap is None else cap
        d = self.phi.deriv
        crit = self.phi.critical_points()
        gamma = max(0.0, _sup_over(d, cap, crit))
        dN_sup = max(gamma, _sup_over(lambda x: -d(x), cap, crit))
        p_sup = self.phi.sup(cap)
        dsp = math.inf if self.sigma > 0 and p_sup > 0 else 0.0
        return HazardNorms(p_sup, gamma, dN_sup, dsp)


@dataclass(frozen=True)
class VariableRefractoryHazard(HazardModel):
    """p(s, N) = chi_{s > sigma(c N)} with unit firing rate.

    ``coupling`` c rescales the activity argument (c = J for the ITM limit
    of a kernel with mass J).  Cell rates are the exact cell averages of the
    indicator, which keeps F(N) continuous in N.
    """

    sigma_fn: object
    coupling: float = 1.0
    activity_cap: float = DEFAULT_ACTIVITY_CAP
    kind = "step-variable"

    def threshold(self, N):
        return self.sigma_fn(self.coupling * np.asarray(N, dtype=float))

    def rate(self, s, N):
        return np.where(np.asarray(s, dtype=float) > self.threshold(N), 1.0, 0.0)

    def dN(self, s, N):
        return None

    def cumulative(self, s, N):
        return np.maximum(np.asarray(s, dtype=float) - self.threshold(N), 0.0)

    def breakpoints(self, N):
        return (float(self.threshold(N)),)

    def cell_rates(self, centers, ds, N):
        right = centers + 0.5 * ds
        return np.clip((right - self.threshold(N)) / ds, 0.0, 1.0)

    def flux(self, values, centers, ds, N):
        return self.bind(values, centers, ds)(N)

    def bind(self, values, centers, ds):
        return _ThresholdFlux(self, np.asarray(values, dtype=float), centers, ds)

    def flux_dN(self, values, centers, ds, N):
        return None

    def norms(self, cap=None):
        return HazardNorms(1.0, math.inf, math.inf, math.inf)


@dataclass(frozen=True)
class FormulaHazard(HazardModel):
    """Generic smooth hazard from callables with exact derivatives.

    ``f(s, N)``, ``f_N(s, N)`` and optionally ``f_s(s, N)`` must broadcast.
    Sup-norms are probed on [0, s_probe] x [0, cap] unless given.
    """

    name: str
    f: object = field(repr=False)
    f_N: object = field(repr=False)
    f_s: object = field(default=None, repr=False)
    activity_cap: float = DEFAULT_ACTIVITY_CAP
    s_probe: float = 50.0
    known_norms: object = None
    kind = "smooth"

    def rate(self, s, N):
        return _broadcast(self.f, s, N)

    def dN(self, s, N):
        return _broadcast(self.f_N, s, N)

    def cumulative(self, s, N, tol=1e-10):
        return adaptive_simpson(lambda u: float(self.rate(u, N)), 0.0, float(s), tol)

    def norms(self, cap=None):
        if self.known_norms is not None:
            return self.known_norms
        cap = self.activity_cap if cap is None else cap
        S, Nn = np.meshgrid(np.linspace(0, self.s_probe, 201),
                            np.linspace(0, cap, 401), indexing="ij")
        p = self.rate(S, Nn)
        dn = self.dN(S, Nn)
        ds_ = np.abs(self.f_s(S, Nn)) if self.f_s is not None else np.array([math.inf])
        return HazardNorms(float(p.max()), max(0.0, float(dn.max())),
                           float(np.abs(dn).max()), float(ds_.max()))


@dataclass(frozen=True)
class QuadraticActivityHazard(HazardModel):
    """p(s, X) = a X^2 + b, unbounded in the activity.

    Norms only exist over a finite activity range; the schemes use the
    runtime cap and stop with a blow-up event when it is exceeded.
    """

    a: float = 1.0
    b: float = 1.0
    activity_cap: float = DEFAULT_ACTIVITY_CAP
    kind = "unbounded-quadratic"
    bounded = False

    def rate(self, s, N):
        N = np.asarray(N, dtype=float)
        return self.a * N * N + self.b + 0.0 * np.asarray(s, dtype=float)

    def dN(self, s, N):
        return 2.0 * self.a * np.asarray(N, dtype=float) + 0.0 * np.asarray(s, dtype=float)

    def cumulative(self, s, N):
        N = np.asarray(N, dtype=float)
        return (self.a * N * N + self.b) * np.asarray(s, dtype=float)

    def flux(self, values, centers, ds, N):
        N = np.atleast_1d(np.asarray(N, dtype=float))
        return (self.a * N * N + self.b) * (ds * math.fsum(values))

    def flux_dN(self, values, centers, ds, N):
        N = np.atleast_1d(np.asarray(N, dtype=float))
        return 2.0 * self.a * N * (ds * math.fsum(values))

    def bind(self, values, centers, ds):
        values = np.asarray(values, dtype=float)
        return _ScaledFlux(self, values, centers, ds, ds * math.fsum(values),
                           lambda N: self.a * N * N + self.b,
                           lambda N: 2.0 * self.a * N)

    def norms(self, cap=None):
        if cap is None or math.isinf(cap):
            raise UnboundedHazardError(
                "p = a X^2 + b has no finite sup-norm; pass an activity cap")
        return HazardNorms(self.a * cap * cap + self.b, 2.0 * abs(self.a) * cap,
                           2.0 * abs(self.a) * cap, 0.0)

    def cap_for_step(self, ds, dt):
        """Largest activity X with dt (1/ds + p(X)) <= 1."""
        room = 1.0 / dt - 1.0 / ds - self.b
        if room < 0:
            return 0.0
        return math.sqrt(room / self.a) if self.a > 0 else math.inf


def _broadcast(fn, s, N):
    s = np.asarray(s, dtype=float)
    N = np.asarray(N, dtype=float)
    return np.broadcast_to(np.asarray(fn(s, N), dtype=float),
                           np.broadcast(s, N).shape).copy()


def constant_hazard(p0, sigma=0.0):
    return StepHazard(Constant(p0), sigma)


def adaptive_simpson(f, a, b, tol=1e-10, max_depth=50):
    """Adaptive Simpson quadrature of a scalar function on [a, b]."""
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)


# public operation names ----------------------------------------------------

def hazard_eval(model, s, N):
    return model.rate(s, N)


def hazard_dN(model, s, N):
    """Analytic d/dN p, or ``None`` for the variable-refractory kind.

    ``None`` tells callers to use the finite-difference path of
    :func:`elapsedtime.fixedpoint.invertibility_psi`.
    """
    return model.dN(s, N)


def cumulative_hazard(model, s, N):
    return model.cumulative(s, N)


def hazard_norms(model, cap=None) -> HazardNorms:
    return model.norms(cap)


def is_weakly_interconnected(model, mass, cap=None):
    """gamma * mass < 1: the flux equation then has exactly one root."""
    return model.norms(cap).gamma * mass < 1.0
