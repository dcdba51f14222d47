"""Delay kernels alpha(t) and their discrete convolution with a flux series."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

_SQRT2PI = math.sqrt(2.0 * math.pi)


class UnderResolvedKernelWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Exponential:
    """alpha(t) = exp(-t / lam) / lam, unit mass."""
    lam: float
    kind = "exponential"
    J = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise InvalidParameterError("kernel width lambda must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, np.exp(-t / self.lam) / self.lam, 0.0)

    @property
    def width(self):
        return self.lam


@dataclass(frozen=True)
class Gaussian:
    """Normal density with mean d and standard deviation lam, cut at t < 0."""
    d: float
    lam: float
    kind = "gaussian"
    J = 1.0

    def __post_init__(self):
        if self.lam <= 0 or self.d < 0:
            raise InvalidParameterError("need lambda > 0 and d >= 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        z = (t - self.d) / self.lam
        return np.where(t >= 0, np.exp(-0.5 * z * z) / (_SQRT2PI * self.lam), 0.0)

    @property
    def width(self):
        return self.lam


@dataclass(frozen=True)
class Scaled:
    """J * inner(t): a kernel with connectivity mass J."""
    J: float
    inner: object
    kind = "scaled"

    def __post_init__(self):
        if self.J < 0:
            raise InvalidParameterError("connectivity J must be >= 0")

    def __call__(self, t):
        return self.J * self.inner(t)

    @property
    def width(self):
        return self.inner.width

    @property
    def base_kind(self):
        return self.inner.kind


def base_kind(kernel):
    return kernel.inner.kind if kernel.kind == "scaled" else kernel.kind


def delay_of(kernel):
    inner = kernel.inner if kernel.kind == "scaled" else kernel
    return getattr(inner, "d", 0.0)


@dataclass(frozen=True)
class SampledKernel:
    kernel: object
    dt: float
    samples: np.ndarray

    @property
    def alpha0(self):
        return float(self.samples[0])

    @property
    def l1_discrete(self):
        return float(self.dt * np.abs(self.samples).sum())

    @property
    def tv_discrete(self):
        return float(np.abs(np.diff(self.samples)).sum())

    @property
    def J(self):
        return float(self.kernel.J)


def kernel_eval(kernel, t):
    return kernel(t)


def kernel_sample(kernel, dt, M, warn=True) -> SampledKernel:
    """Sample alpha_0..alpha_M on the time grid t^k = k dt."""
    if dt <= 0:
        raise InvalidParameterError("dt must be positive")
    if warn and dt > kernel.width / 4.0:
        warnings.warn(
            f"dt={dt:.3g} exceeds lambda/4={kernel.width / 4.0:.3g}: the "
            f"{base_kind(kernel)} kernel is under-resolved", UnderResolvedKernelWarning,
            stacklevel=2)
    samples = np.asarray(kernel(np.arange(M + 1) * dt), dtype=float)
    samples.setflags(write=False)
    return SampledKernel(kernel, float(dt), samples)


WEIGHTS = ("trapezoid", "uniform-half")


def history_term(samples, flux, m, dt, weights="trapezoid"):
    """Known part H of X^{m+1} = c * alpha_0 * N^{m+1} + H.

    ``flux`` holds N^0..N^m.  Returns (c, H): c = dt/2 for both rules.
    The trapezoid rule weighs N^0 by dt/2 and interior terms by dt; the
    uniform rule weighs every known term by dt/2.
    """
    lags = samples[m + 1:0:-1]                    # alpha_{m+1-k}, k = 0..m
    known = np.asarray(flux[:m + 1], dtype=float)
    if weights == "trapezoid":
        H = dt * (float(np.dot(lags[1:], known[1:])) + 0.5 * lags[0] * known[0])
    elif weights == "uniform-half":
        H = 0.5 * dt * float(np.dot(lags, known))
    else:
        raise InvalidParameterError(f"unknown quadrature weights {weights!r}")
    return 0.5 * dt, H


def convolve(samples, flux, dt, weights="trapezoid"):
    """X^m for every m from a complete flux series (zero past, X^0 = 0)."""
    flux = np.asarray(flux, dtype=float)
    X = np.zeros(flux.size)
    a0 = float(samples[0])
    for m in range(flux.size - 1):
        c, H = history_term(samples, flux, m, dt, weights)
        X[m + 1] = c * a0 * flux[m + 1] + H
    return X
