"""Closed-form initial densities n0(s).

Each profile is vectorized, knows its kinks/jumps (``breakpoints``) and the
right end of its numerical support.  Exponential tails are cut where the
remaining mass drops below ``TAIL_MASS``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

TAIL_MASS = 1e-13


@dataclass(frozen=True)
class Profile:
    name: str
    params: dict
    support: float
    breakpoints: tuple
    mass: float
    sup: float
    _f: object = field(repr=False, compare=False)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.where((s >= 0) & (s < self.support), self._f(s), 0.0)


def _tail_end(start, rate, amplitude):
    # amplitude * exp(-rate (s - start)) integrates to < TAIL_MASS beyond the cut
    excess = amplitude / rate / TAIL_MASS
    return start + max(0.0, math.log(excess)) / rate


def plateau_exp(height=0.5, knee=1.0):
    """height * exp(-(s - knee)^+): flat on [0, knee], exponential after."""
    support = _tail_end(knee, 1.0, height)

    def f(s):
        return height * np.exp(-np.maximum(s - knee, 0.0))
    return Profile("plateau-exp", {"height": height, "knee": knee}, support,
                   (knee,), height * (knee + 1.0), height, f)


def shifted_exp(onset=1.0, rate=1.0):
    """rate-normalized exp(-rate (s - onset)) chi_{s > onset}, unit peak."""
    support = _tail_end(onset, rate, 1.0)

    def f(s):
        return np.where(s > onset, np.exp(-rate * (s - onset)), 0.0)
    return Profile("shifted-exp", {"onset": onset, "rate": rate}, support,
                   (onset,), 1.0 / rate, 1.0, f)


def indicator(a=0.0, b=1.0, height=1.0):
    def f(s):
        return np.where((s >= a) & (s < b), height, 0.0)
    return Profile("indicator", {"a": a, "b": b, "height": height}, b,
                   (a, b), height * (b - a), height, f)


def exp_equilibrium(rate=1.0):
    """rate * exp(-rate s): the stationary density of a constant hazard."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    support = _tail_end(0.0, rate, rate)

    def f(s):
        return rate * np.exp(-rate * s)
    return Profile("exp-equilibrium", {"rate": rate}, support, (), 1.0, rate, f)


def smooth_compatible():
    """exp(-s) (1 + s^2): smooth, n0(0) = 1 and n0'(0) = -1.

    Compatible with a unit hazard and unit prescribed flux, so the linear
    solution has no kink along s = t and upwind reaches first order.
    """
    # tail mass of e^{-s}(1+s^2) beyond c is e^{-c}(c^2 + 2c + 3)
    c = 10.0
    while math.exp(-c) * (c * c + 2 * c + 3) > TAIL_MASS:
        c += 0.5

    def f(s):
        return np.exp(-s) * (1.0 + s * s)
    return Profile("smooth-compatible", {}, c, (), 3.0, 1.0, f)


def bump(center=1.0, width=0.5):
    """cos^2 bump, C^1 with compact support [center - width, center + width]."""
    a, b = center - width, center + width
    if a < 0:
        raise ValueError("bump must lie in s >= 0")

    def f(s):
        x = (s - center) / width
        return np.where(np.abs(x) < 1, np.cos(0.5 * np.pi * x) ** 2, 0.0)
    return Profile("bump", {"center": center, "width": width}, b, (a, b),
                   width, 1.0, f)


REGISTRY = {
    "plateau-exp": plateau_exp,
    "shifted-exp": shifted_exp,
    "indicator": indicator,
    "exp-equilibrium": exp_equilibrium,
    "smooth-compatible": smooth_compatible,
    "bump": bump,
}


def make_profile(name, **params):
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown initial profile {name!r}; known: {sorted(REGISTRY)}") from None
    return factory(**params)
