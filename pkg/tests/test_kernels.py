import math

import numpy as np
import pytest
from scipy.integrate import quad

from threshold_regret.kernels import gaussian_cdf_kernel


@pytest.fixture(scope="module")
def kernel():
    return gaussian_cdf_kernel()


def test_cdf_value_at_zero(kernel):
    assert kernel.k(0.0) == pytest.approx(0.5)


def test_limits_at_infinity(kernel):
    assert abs(kernel.k(-10.0)) < 1e-8
    assert abs(kernel.k(10.0) - 1.0) < 1e-8


def test_first_derivative_matches_finite_differences(kernel):
    probes = np.linspace(-3.0, 3.0, 20)
    h = 1e-6
    for z in probes:
        fd = (kernel.k(z + h) - kernel.k(z - h)) / (2 * h)
        assert kernel.k1(z) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_second_derivative_matches_finite_differences(kernel):
    probes = np.linspace(-3.0, 3.0, 20)
    h = 1e-6
    for z in probes:
        fd = (kernel.k1(z + h) - kernel.k1(z - h)) / (2 * h)
        assert kernel.k2(z) == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_alpha2_matches_quadrature(kernel):
    numeric, _ = quad(lambda z: kernel.k1(z) ** 2, -10, 10)
    assert kernel.alpha2 == pytest.approx(numeric, rel=1e-10)
    assert kernel.alpha2 == pytest.approx(1.0 / (2.0 * math.sqrt(math.pi)), rel=1e-14)
    assert kernel.alpha2 == pytest.approx(0.2820948, abs=5e-8)


def test_alpha1_matches_quadrature(kernel):
    numeric, _ = quad(lambda z: z**kernel.h * kernel.k1(z), -12, 12)
    assert kernel.alpha1 == pytest.approx(numeric, rel=1e-10)
    assert kernel.alpha1 == 1.0


def test_moments_positive(kernel):
    assert kernel.alpha1 > 0 and kernel.alpha2 > 0
    assert kernel.h == 2


def test_order_below_two_rejected():
    from threshold_regret.kernels import Kernel, norm_pdf
    from scipy.special import ndtr

    with pytest.raises(ValueError):
        Kernel(k=ndtr, k1=norm_pdf, k2=norm_pdf, h=1, alpha1=1.0, alpha2=0.28)
