import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from elapsedtime import Exponential, Gaussian, InvalidParameterError, Scaled, kernel_sample
from elapsedtime.kernels import UnderResolvedKernelWarning, convolve, delay_of, history_term


@pytest.mark.parametrize("kernel", [Exponential(0.3), Gaussian(1.0, 0.1), Gaussian(0.0, 0.2)])
def test_kernel_mass_at_most_one(kernel):
    mass, _ = quad(lambda t: float(kernel(t)), 0.0, 20.0, points=[getattr(kernel, "d", 0.0)])
    assert mass <= 1.0 + 1e-9
    assert mass == pytest.approx(1.0 if getattr(kernel, "d", 1.0) > 0 else 0.5, rel=1e-6)
    assert float(kernel(-1.0)) == 0.0


def test_scaled_kernel_mass_and_delay():
    k = Scaled(2.5, Gaussian(0.5, 0.01))
    assert k.J == 2.5
    assert float(k(0.5)) == pytest.approx(2.5 * float(Gaussian(0.5, 0.01)(0.5)))
    assert delay_of(k) == 0.5


@pytest.mark.parametrize("bad", [lambda: Exponential(0.0), lambda: Gaussian(-1.0, 0.1),
                                 lambda: Gaussian(1.0, 0.0)])
def test_invalid_kernels(bad):
    with pytest.raises(InvalidParameterError):
        bad()


def test_sampling_warns_when_under_resolved():
    with pytest.warns(UnderResolvedKernelWarning):
        kernel_sample(Exponential(0.01), 0.005, 10)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        kernel_sample(Exponential(0.1), 0.001, 10)


def test_history_term_weights():
    samples = np.array([4.0, 3.0, 2.0, 1.0])
    flux = np.array([1.0, 10.0, 100.0])
    c, H = history_term(samples, flux, 2, 0.5, "trapezoid")
    # alpha_3 N^0 / 2 + alpha_2 N^1 + alpha_1 N^2, times dt
    assert c == 0.25
    assert H == pytest.approx(0.5 * (0.5 * 1.0 * 1.0 + 2.0 * 10.0 + 3.0 * 100.0))
    _, Hu = history_term(samples, flux, 2, 0.5, "uniform-half")
    assert Hu == pytest.approx(0.25 * (1.0 + 20.0 + 300.0))
    with pytest.raises(InvalidParameterError):
        history_term(samples, flux, 2, 0.5, "simpson")


def test_convolution_of_constant_flux_is_second_order():
    lam, T = 0.5, 3.0
    errs = []
    for dt in (0.02, 0.01):
        M = int(round(T / dt))
        samp = kernel_sample(Exponential(lam), dt, M).samples
        X = convolve(samp, np.ones(M + 1), dt)
        t = np.arange(M + 1) * dt
        errs.append(np.max(np.abs(X - (1 - np.exp(-t / lam)))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
