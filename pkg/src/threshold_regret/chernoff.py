"""Simulation of the argmax of two-sided Brownian motion minus a parabola.

The threshold estimator based on the unsmoothed welfare objective converges,
after cube-root scaling, to Z = argmax_r (B(r) - r^2) with B a two-sided
standard Brownian motion.  No analytic density is used anywhere in this
package; Z's moments and quantiles come from the Monte Carlo table built
here.  Each path evaluates B exactly on a symmetric grid (two independent
wings of cumulative Gaussian increments from the origin) and records the
grid point maximizing B(r) - r^2.

Paths are generated in fixed-size blocks, each block seeded independently
from (seed, block index), so a table is bit-for-bit reproducible from its
seed regardless of how many workers generated it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from .errors import ValidationError

__all__ = ["ChernoffTable", "simulate_chernoff", "chernoff_quantile", "DEFAULT_CHERNOFF_SEED"]

# Default seed for the shipped table configuration (2e5 paths, step 5e-4,
# halfwidth 2.5); chosen once and pinned so reports are reproducible.
DEFAULT_CHERNOFF_SEED = 7

_BLOCK = 1000


@dataclass(frozen=True)
class ChernoffTable:
    """Monte Carlo draws of Z = argmax(B(r) - r^2) with summary moments."""

    samples: np.ndarray
    mean: float
    second_moment: float
    grid_step: float
    domain_halfwidth: float
    n_paths: int
    seed: int

    def __post_init__(self):
        self.samples.setflags(write=False)

    def quantile(self, q: float) -> float:
        return chernoff_quantile(self, q)


def _simulate_block(args) -> np.ndarray:
    seed, block_index, n_paths, m, step = args
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block_index,)))
    increments = rng.standard_normal((n_paths, 2 * m)) * math.sqrt(step)
    r = np.arange(1, m + 1) * step
    penalty = r * r
    right = np.cumsum(increments[:, :m], axis=1) - penalty
    left = np.cumsum(increments[:, m:], axis=1) - penalty
    rows = np.arange(n_paths)
    # within a wing, argmax takes the first (closest to zero) maximizer
    right_arg = np.argmax(right, axis=1)
    left_arg = np.argmax(left, axis=1)
    right_max = right[rows, right_arg]
    left_max = left[rows, left_arg]
    # candidate at r = 0 has value 0; ties resolve toward 0, then smaller r
    z = np.zeros(n_paths)
    best = np.zeros(n_paths)
    take_left = left_max > best
    z[take_left] = -r[left_arg[take_left]]
    best[take_left] = left_max[take_left]
    take_right = (right_max > best) | ((right_max == best) & (r[right_arg] < np.abs(z)))
    z[take_right] = r[right_arg[take_right]]
    return z


def simulate_chernoff(
    n_paths: int = 200_000,
    domain_halfwidth: float = 2.5,
    grid_step: float = 5e-4,
    seed: int = DEFAULT_CHERNOFF_SEED,
    jobs: int = 1,
) -> ChernoffTable:
    """Build a table of argmax draws on a symmetric grid of halfwidth M.

    The grid resolves locations to ``grid_step`` and the argmax concentrates
    well inside ``|r| <= 2``, so the defaults (M = 2.5, step = 5e-4, 2e5
    paths) stabilize quantiles to roughly 0.005.
    """
    if domain_halfwidth < 2:
        raise ValidationError(f"domain_halfwidth must be >= 2, got {domain_halfwidth}")
    if grid_step > 1e-3 or grid_step <= 0:
        raise ValidationError(f"grid_step must lie in (0, 1e-3], got {grid_step}")
    if n_paths < 10_000:
        raise ValidationError(f"n_paths must be >= 10000, got {n_paths}")
    m = int(round(domain_halfwidth / grid_step))
    n_blocks = (n_paths + _BLOCK - 1) // _BLOCK
    tasks = [
        (seed, b, min(_BLOCK, n_paths - b * _BLOCK), m, grid_step) for b in range(n_blocks)
    ]
    if jobs > 1:
        with get_context("fork").Pool(jobs) as pool:
            blocks = pool.map(_simulate_block, tasks)
    else:
        blocks = [_simulate_block(t) for t in tasks]
    samples = np.concatenate(blocks)
    return ChernoffTable(
        samples=samples,
        mean=float(samples.mean()),
        second_moment=float(np.mean(samples**2)),
        grid_step=grid_step,
        domain_halfwidth=domain_halfwidth,
        n_paths=n_paths,
        seed=seed,
    )


def chernoff_quantile(table: ChernoffTable, q: float) -> float:
    """Empirical quantile of Z; the CI critical value is quantile(1 - alpha/2)."""
    if not 0.0 < q < 1.0:
        raise ValidationError(f"quantile level must lie in (0, 1), got {q}")
    return float(np.quantile(table.samples, q))
