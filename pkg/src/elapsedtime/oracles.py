"""Reference solutions that share no code path with the schemes.

* the linear problem with a prescribed flux, solved along characteristics;
* the closed-form activity of the blow-up stress case;
* a brute-force sign scan for verifying the root finder.
"""

import math

import numpy as np
from scipy.integrate import quad

from .errors import OracleDomainError

_R3 = math.sqrt(3.0)
BLOWUP_TIME = 4.0 * math.pi / (3.0 * _R3)


def characteristics_density(n0, prescribed_flux, rate, t, s, tol=1e-10):
    """n(t, s) of the linear problem with given flux N(t) and hazard rate(s, N).

    For s > t the value is carried from the initial datum, otherwise from
    the boundary at time t - s; either way it decays by the hazard
    integrated along the characteristic.  ``rate`` is a scalar callable.
    """
    s = float(s)
    t = float(t)
    if s > t:
        s0 = s - t
        start = float(n0(s0))
        if start == 0.0:
            return 0.0
        expo, _ = quad(lambda u: rate(s0 + u, prescribed_flux(u)), 0.0, t,
                       epsabs=tol, epsrel=0.0, limit=200)
    else:
        t0 = t - s
        start = float(prescribed_flux(t0))
        if start == 0.0:
            return 0.0
        expo, _ = quad(lambda a: rate(a, prescribed_flux(t0 + a)), 0.0, s,
                       epsabs=tol, epsrel=0.0, limit=200)
    return start * math.exp(-expo)


def characteristics_profile(n0, prescribed_flux, rate, t, s_values):
    return np.array([characteristics_density(n0, prescribed_flux, rate, t, s)
                     for s in np.asarray(s_values, dtype=float).ravel()])


def blowup_activity(t):
    """Solution of X' = X^2 - X + 1, X(0) = 0, valid for t < T*."""
    t = float(t)
    if t >= BLOWUP_TIME:
        raise OracleDomainError(t, BLOWUP_TIME)
    return 0.5 + 0.5 * _R3 * math.tan(0.5 * _R3 * t - math.pi / 6.0)


def root_scan_oracle(g, lo, hi, resolution=10_000):
    """Intervals [a, b] of a uniform sample of g where the sign changes.

    An exact zero at a sample point yields a degenerate bracket [x, x].
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if resolution < 1000:
        raise ValueError("the oracle needs at least 10^3 points")
    x = np.linspace(lo, hi, resolution + 1)
    v = np.array([float(g(xi)) for xi in x])
    out = [(x[i], x[i]) for i in np.flatnonzero(v == 0)]
    change = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
    out += [(x[i], x[i + 1]) for i in change]
    return sorted(out)


def bisect_bracket(g, a, b, xtol=1e-14):
    """Plain bisection inside a sign-change bracket (oracle-side refinement)."""
    ga = float(g(a))
    if a == b or ga == 0:
        return a
    while b - a > xtol * max(1.0, abs(a)):
        m = 0.5 * (a + b)
        gm = float(g(m))
        if gm == 0:
            return m
        if (gm < 0) == (ga < 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)
