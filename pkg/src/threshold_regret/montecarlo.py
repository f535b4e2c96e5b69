"""Benchmark data-generating processes and the replication engine.

Both benchmark DGPs share one family:

    X ~ N(0, 1),  D ~ Bernoulli(p),
    Y1 = X^3 + beta2 X^2 + beta1 X + eps1,   eps1 ~ N(0, gamma^2),
    Y0 ~ N(0, gamma^2),

for which the population welfare of a threshold policy, the optimal
threshold t* = 0, and the asymptotic constants K, H, A all have closed
forms.  ``gamma`` is the standard deviation of both noise terms.

The engine draws replicated samples, fits the unsmoothed policy and the
smoothed policy (with the infeasible optimal bandwidth from the true
constants and/or the feasible plug-in bandwidth), evaluates exact regret
from the closed-form welfare curve, and aggregates means, medians, and
Monte Carlo standard errors.  Every replication is seeded independently
from (master seed, model index, n, replication index), so results do not
depend on worker count or scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np
from scipy.special import ndtr

from .asymptotics import ewm_regret_dist, optimal_lambda_mean, swm_regret_dist
from .chernoff import ChernoffTable
from .data import Sample, default_space, regret
from .errors import ThresholdRegretError, ValidationError
from .ewm import fit_ewm
from .kernels import Kernel, gaussian_cdf_kernel, norm_pdf
from .nuisance import estimate_khA
from .swm import LambdaRate, PlugInOptimal, fit_swm

__all__ = [
    "Dgp",
    "MODEL1",
    "MODEL2",
    "ESTIMATORS",
    "draw_sample",
    "closed_form_welfare",
    "ExperimentConfig",
    "EstimatorSummary",
    "ExperimentResult",
    "run_experiment",
    "table_report",
    "render_text",
    "render_csv",
]

ESTIMATORS = ("ewm", "swm_infeasible", "swm_feasible")


@dataclass(frozen=True)
class Dgp:
    """A fully specified benchmark DGP with closed-form welfare and constants."""

    name: str
    gamma: float
    beta1: float
    beta2: float
    p: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 < self.p < 1.0:
            raise ValidationError(f"p must lie in (0, 1), got {self.p}")

    @property
    def t_star(self) -> float:
        return 0.0

    def welfare(self, t: float) -> float:
        """Population welfare W(t) of the policy treat iff X > t."""
        t = float(t)
        phi = norm_pdf(t)
        big_phi = float(ndtr(t))
        return float(
            (t * t + 2.0) * phi + self.beta2 * (1.0 - big_phi + t * phi) + self.beta1 * phi
        )

    @property
    def K(self) -> float:
        phi0 = float(norm_pdf(0.0))
        return phi0 * (self.gamma**2 / self.p + self.gamma**2 / (1.0 - self.p))

    @property
    def H(self) -> float:
        return float(norm_pdf(0.0)) * self.beta1

    @property
    def A(self) -> float:
        return -float(norm_pdf(0.0)) * self.beta2

    def conditional_mean_treated(self, x):
        return x**3 + self.beta2 * x**2 + self.beta1 * x


MODEL1 = Dgp(name="model1", gamma=1.0, beta1=1.0, beta2=-0.5, p=0.5)
MODEL2 = Dgp(name="model2", gamma=3.0, beta1=0.5, beta2=-1.0, p=0.5)


def closed_form_welfare(dgp: Dgp, t: float) -> float:
    return dgp.welfare(t)


def draw_sample(dgp: Dgp, n: int, seed) -> Sample:
    """Draw one i.i.d. sample of size n; deterministic per seed."""
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    eps1 = dgp.gamma * rng.standard_normal(n)
    y0 = dgp.gamma * rng.standard_normal(n)
    d = (rng.random(n) < dgp.p).astype(float)
    y1 = dgp.conditional_mean_treated(x) + eps1
    y = d * y1 + (1.0 - d) * y0
    return Sample(y=y, d=d, x=x, propensity=dgp.p)


@dataclass(frozen=True)
class ExperimentConfig:
    """One replicated experiment: models x sample sizes x estimators."""

    models: tuple[Dgp, ...]
    n_list: tuple[int, ...]
    replications: int
    seed: int
    estimators: tuple[str, ...] = ESTIMATORS
    jobs: int = 1
    retain_samples: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise ValidationError(f"replications must be >= 1, got {self.replications}")
        for n in self.n_list:
            if n < 2:
                raise ValidationError(f"every n must be >= 2, got {n}")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ValidationError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
        if self.jobs < 1:
            raise ValidationError(f"jobs must be >= 1, got {self.jobs}")


@dataclass(frozen=True)
class EstimatorSummary:
    """Aggregated regret of one estimator at one (model, n) cell."""

    model: str
    n: int
    estimator: str
    mean_regret: float
    median_regret: float
    se: float
    n_ok: int
    n_failed: int
    fallback_count: int
    samples: np.ndarray | None = None


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    rows: tuple[EstimatorSummary, ...]

    def row(self, model: str, n: int, estimator: str) -> EstimatorSummary:
        for r in self.rows:
            if r.model == model and r.n == n and r.estimator == estimator:
                return r
        raise KeyError((model, n, estimator))

    def ratio(self, model: str, n: int) -> float:
        """EWM mean regret over feasible-SWM mean regret."""
        return (
            self.row(model, n, "ewm").mean_regret
            / self.row(model, n, "swm_feasible").mean_regret
        )


def _rep_seed(master: int, model_idx: int, n: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master, spawn_key=(model_idx, n, rep))


def _run_one_rep(args):
    """One replication; returns (rep, {estimator: regret or nan}, fallbacks, failures)."""
    dgp, model_idx, n, rep, master_seed, estimators = args
    kernel = gaussian_cdf_kernel()
    sample = draw_sample(dgp, n, _rep_seed(master_seed, model_idx, n, rep))
    space = default_space(sample)
    out: dict[str, float] = {}
    fallbacks = 0
    failures = 0
    t_ewm = None
    try:
        est_ewm = fit_ewm(sample, space)
        t_ewm = est_ewm.t_hat
        if "ewm" in estimators:
            out["ewm"] = regret(dgp.welfare, dgp.t_star, est_ewm.t_hat)
    except ThresholdRegretError:
        failures += 1
        if "ewm" in estimators:
            out["ewm"] = math.nan
    if "swm_infeasible" in estimators:
        try:
            lam_true = kernel.alpha2 * dgp.K / (2.0 * kernel.h * dgp.A**2)
            est = fit_swm(sample, kernel, LambdaRate(lam_true), space)
            out["swm_infeasible"] = regret(dgp.welfare, dgp.t_star, est.t_hat)
        except ThresholdRegretError:
            failures += 1
            out["swm_infeasible"] = math.nan
    if "swm_feasible" in estimators:
        try:
            rule = PlugInOptimal(t_eval=t_ewm)
            est = fit_swm(sample, kernel, rule, space, nuisance_fn=estimate_khA)
            if "bandwidth_fallback" in est.flags:
                fallbacks += 1
            out["swm_feasible"] = regret(dgp.welfare, dgp.t_star, est.t_hat)
        except ThresholdRegretError:
            failures += 1
            out["swm_feasible"] = math.nan
    return rep, out, fallbacks, failures


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run all replications and aggregate regret summaries per cell.

    Replications are embarrassingly parallel; per-replication seeding makes
    the result identical for any ``jobs`` value.
    """
    rows: list[EstimatorSummary] = []
    ctx = get_context("fork") if config.jobs > 1 else None
    for model_idx, dgp in enumerate(config.models):
        for n in config.n_list:
            tasks = [
                (dgp, model_idx, n, rep, config.seed, config.estimators)
                for rep in range(config.replications)
            ]
            if ctx is not None:
                with ctx.Pool(config.jobs) as pool:
                    results = pool.map(_run_one_rep, tasks, chunksize=max(1, len(tasks) // (4 * config.jobs)))
            else:
                results = [_run_one_rep(t) for t in tasks]
            per_est = {est: np.full(config.replications, np.nan) for est in config.estimators}
            fallbacks = 0
            failures = 0
            for rep, out, fb, fl in results:
                fallbacks += fb
                failures += fl
                for est, value in out.items():
                    per_est[est][rep] = value
            for est in config.estimators:
                vals = per_est[est]
                ok = vals[np.isfinite(vals)]
                n_ok = len(ok)
                rows.append(
                    EstimatorSummary(
                        model=dgp.name,
                        n=n,
                        estimator=est,
                        mean_regret=float(np.mean(ok)) if n_ok else math.nan,
                        median_regret=float(np.median(ok)) if n_ok else math.nan,
                        se=float(np.std(ok) / math.sqrt(n_ok)) if n_ok else math.nan,
                        n_ok=n_ok,
                        n_failed=config.replications - n_ok,
                        fallback_count=fallbacks if est == "swm_feasible" else 0,
                        samples=ok if config.retain_samples else None,
                    )
                )
    return ExperimentResult(config=config, rows=tuple(rows))


# ---------------------------------------------------------------------------
# reporting


def _fmt(value, scale=1e4):
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return ""
    return f"{value * scale:.3f}"


def table_report(
    result: ExperimentResult | None,
    chernoff: ChernoffTable,
    models: tuple[Dgp, ...] | None = None,
    n_list: tuple[int, ...] | None = None,
    kernel: Kernel | None = None,
) -> dict[str, list[dict]]:
    """Build asymptotic, mean-regret, and median-regret report tables.

    Regret columns are in natural units here; the text and CSV renderers
    scale them by 10^4.  ``result`` may be None (or empty) to produce the
    asymptotic table alone from the DGP constants.
    """
    if kernel is None:
        kernel = gaussian_cdf_kernel()
    if models is None:
        models = result.config.models if result is not None else ()
    if n_list is None:
        n_list = result.config.n_list if result is not None else ()

    asymptotic = []
    for dgp in models:
        lam_star = kernel.alpha2 * dgp.K / (2.0 * kernel.h * dgp.A**2) if dgp.A != 0 else None
        for n in n_list:
            ewm_dist = ewm_regret_dist(dgp.K, dgp.H, n, chernoff)
            row = {
                "model": dgp.name,
                "n": n,
                "ewm_mean": ewm_dist.mean,
                "ewm_median": ewm_dist.median,
                "swm_mean": None,
                "swm_median": None,
                "K": dgp.K,
                "H": dgp.H,
                "A": dgp.A,
            }
            if lam_star is not None:
                swm_dist = swm_regret_dist(dgp.K, dgp.H, dgp.A, lam_star, kernel, n)
                row["swm_mean"] = optimal_lambda_mean(dgp.K, dgp.H, dgp.A, kernel, n)
                row["swm_median"] = swm_dist.median
            asymptotic.append(row)

    mean_rows: list[dict] = []
    median_rows: list[dict] = []
    if result is not None:
        for dgp_name, n in [(d.name, n) for d in models for n in n_list]:
            asym = next(
                (r for r in asymptotic if r["model"] == dgp_name and r["n"] == n), None
            )

            def cell(est, attr):
                try:
                    return getattr(result.row(dgp_name, n, est), attr)
                except KeyError:
                    return None

            ewm_mean = cell("ewm", "mean_regret")
            swm_feas_mean = cell("swm_feasible", "mean_regret")
            ratio_mean = (
                ewm_mean / swm_feas_mean if ewm_mean is not None and swm_feas_mean else None
            )
            mean_rows.append(
                {
                    "model": dgp_name,
                    "n": n,
                    "ewm_empirical": ewm_mean,
                    "ewm_asymptotic": asym["ewm_mean"] if asym else None,
                    "swm_empirical_infeasible": cell("swm_infeasible", "mean_regret"),
                    "swm_empirical_feasible": swm_feas_mean,
                    "swm_asymptotic": asym["swm_mean"] if asym else None,
                    "ratio": ratio_mean,
                }
            )
            ewm_med = cell("ewm", "median_regret")
            swm_feas_med = cell("swm_feasible", "median_regret")
            median_rows.append(
                {
                    "model": dgp_name,
                    "n": n,
                    "ewm_empirical": ewm_med,
                    "ewm_asymptotic": asym["ewm_median"] if asym else None,
                    "swm_empirical_infeasible": cell("swm_infeasible", "median_regret"),
                    "swm_empirical_feasible": swm_feas_med,
                    "swm_asymptotic": asym["swm_median"] if asym else None,
                    "ratio": ewm_med / swm_feas_med if ewm_med is not None and swm_feas_med else None,
                }
            )
    return {"asymptotic": asymptotic, "mean": mean_rows, "median": median_rows}


_REGRET_COLUMNS = {
    "ewm_mean",
    "ewm_median",
    "swm_mean",
    "swm_median",
    "ewm_empirical",
    "ewm_asymptotic",
    "swm_empirical_infeasible",
    "swm_empirical_feasible",
    "swm_asymptotic",
}

_TABLE_TITLES = {
    "asymptotic": "asymptotic regret (x 1e4) and constants",
    "mean": "mean regret (x 1e4), empirical vs asymptotic",
    "median": "median regret (x 1e4), empirical vs asymptotic",
}


def _render_cell(col, value):
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return ""
    if col in _REGRET_COLUMNS:
        return _fmt(value)
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def render_text(report: dict[str, list[dict]]) -> str:
    """Aligned-text rendering of the three report tables."""
    blocks = []
    for key in ("asymptotic", "mean", "median"):
        rows = report.get(key, [])
        title = _TABLE_TITLES[key]
        if not rows:
            blocks.append(f"== {title} ==\n(no rows)")
            continue
        cols = list(rows[0].keys())
        grid = [cols] + [[_render_cell(c, r.get(c)) for c in cols] for r in rows]
        widths = [max(len(row[i]) for row in grid) for i in range(len(cols))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in grid]
        blocks.append(f"== {title} ==\n" + "\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def render_csv(report: dict[str, list[dict]]) -> str:
    """Long-format CSV rendering with a leading table column."""
    all_cols: list[str] = []
    for rows in report.values():
        for r in rows:
            for c in r:
                if c not in all_cols:
                    all_cols.append(c)
    lines = [",".join(["table"] + all_cols)]
    for key in ("asymptotic", "mean", "median"):
        for r in report.get(key, []):
            cells = [key]
            for c in all_cols:
                v = r.get(c)
                if v is None or (isinstance(v, float) and not math.isfinite(v)):
                    cells.append("")
                elif c in _REGRET_COLUMNS:
                    cells.append(repr(v * 1e4))
                else:
                    cells.append(repr(v) if isinstance(v, float) else str(v))
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
