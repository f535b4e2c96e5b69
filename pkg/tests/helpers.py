"""Shared brute-force oracles, kept deliberately independent of the library paths."""

import math

import numpy as np

from threshold_regret.data import Sample, empirical_welfare


def random_sample(rng, n, constant_p=True):
    y = rng.normal(size=n)
    d = (rng.random(n) < 0.5).astype(int)
    x = rng.normal(size=n)
    if constant_p:
        p = 0.5
    else:
        p = rng.uniform(0.2, 0.8, size=n)
    return Sample(y=y, d=d, x=x, propensity=p)


def canonical_cuts(sample, space):
    """All n+1 candidate thresholds: boundary midpoints plus gap midpoints."""
    xs = np.sort(np.asarray(sample.x))
    cuts = [0.5 * (space.lo + xs[0])]
    for a, b in zip(xs[:-1], xs[1:]):
        if b > a:
            cuts.append(0.5 * (a + b))
    cuts.append(0.5 * (xs[-1] + space.hi))
    return cuts


def brute_force_ewm_objective(sample, space):
    """O(n^2) exhaustive search over all canonical cuts via the welfare formula."""
    return max(empirical_welfare(sample, t) for t in canonical_cuts(sample, space))


def welfare_by_quadrature(dgp, t, lo=-10.0, hi=10.0, n_nodes=20001):
    """Population welfare by composite Simpson integration of tau(x) phi(x)."""
    xs = np.linspace(max(t, lo), hi, n_nodes)
    phi = np.exp(-0.5 * xs**2) / math.sqrt(2.0 * math.pi)
    tau = xs**3 + dgp.beta2 * xs**2 + dgp.beta1 * xs
    f = tau * phi
    h = xs[1] - xs[0]
    weights = np.ones(n_nodes)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(weights, f))
