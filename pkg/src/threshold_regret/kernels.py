"""Smoothing kernels for the smoothed welfare objective.

A kernel here is a smooth CDF-like weight k with k(-inf) = 0 and
k(+inf) = 1, together with its first two derivatives, its order h, and the
two moment constants that drive the smoothed estimator's asymptotics:

    alpha1 = integral of zeta^h * k'(zeta)   (bias moment)
    alpha2 = integral of k'(zeta)^2          (roughness)

The shipped kernel is the standard normal CDF (order h = 2); higher-order
kernels are supported by the type but none is shipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

__all__ = ["Kernel", "gaussian_cdf_kernel", "norm_pdf"]


def norm_pdf(z):
    """Standard normal density, vectorized."""
    return np.exp(-0.5 * np.square(z)) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Kernel:
    """CDF-like smoothing weight with derivatives and moment constants."""

    k: Callable[[np.ndarray], np.ndarray]
    k1: Callable[[np.ndarray], np.ndarray]
    k2: Callable[[np.ndarray], np.ndarray]
    h: int
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if self.h < 2:
            raise ValueError(f"kernel order h must be >= 2, got {self.h}")


def gaussian_cdf_kernel() -> Kernel:
    """Standard normal CDF kernel, order 2.

    k' is the normal density phi and k''(z) = -z phi(z); alpha1 = 1 (the
    second moment of phi) and alpha2 = 1 / (2 sqrt(pi)) = 0.28209479...
    """
    return Kernel(
        k=ndtr,
        k1=norm_pdf,
        k2=lambda z: -np.asarray(z) * norm_pdf(z),
        h=2,
        alpha1=1.0,
        alpha2=1.0 / (2.0 * math.sqrt(math.pi)),
    )
