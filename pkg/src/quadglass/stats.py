"""Shared statistical estimators and distributional identity checks.

House convention throughout the validation harness: a sampled statistic
is "consistent with" a target when it falls within four standard errors
of it.  The threshold is deliberately transparent; no formal hypothesis
testing machinery is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disorder import DisorderSpec
from .estimate import Estimate
from .model import ModelParams, inverse_diagonal, sample_model
from .parallel import parallel_map
from .rde import Population, wasserstein
from .streams import substreams

DEGENERATE_VARIANCE = 1e-14


@dataclass(frozen=True)
class CorrelationReport:
    """Pairwise correlations of selected inverse-diagonal entries.

    ``correlations`` is None when the degenerate flag is set (some entry
    had vanishing variance across replicates, e.g. at beta = 0).
    ``std_error`` is the null scale 1/sqrt(replicates) for each pair.
    """

    correlations: np.ndarray | None
    std_error: float
    degenerate: bool
    n_replicates: int

    def as_dict(self) -> dict:
        return {
            "correlations": None
            if self.correlations is None
            else self.correlations.tolist(),
            "std_error": self.std_error,
            "degenerate": self.degenerate,
            "n_replicates": self.n_replicates,
        }


def pooled_inverse_diagonals(
    params: ModelParams,
    disorder: DisorderSpec,
    n_sites: int,
    n_replicates: int,
    rng: np.random.Generator,
    workers: int = 1,
) -> np.ndarray:
    """All diagonal entries of A^{-1}, pooled over independent replicates."""
    children = substreams(rng, n_replicates)

    def one(child):
        return inverse_diagonal(sample_model(params, disorder, n_sites, child))

    return np.concatenate(parallel_map(one, children, workers))


def diag_law_distance(
    params: ModelParams,
    disorder: DisorderSpec,
    n_sites: int,
    n_replicates: int,
    fixed_point: Population,
    rng: np.random.Generator,
    workers: int = 1,
) -> float:
    """W1 between pooled inverse diagonals and a fixed-point population."""
    pooled = pooled_inverse_diagonals(
        params, disorder, n_sites, n_replicates, rng, workers
    )
    pooled_pop = Population(np.minimum(pooled, 1.0), fixed_point.domain)
    return wasserstein(pooled_pop, fixed_point, 1.0)


def independence_check(
    params: ModelParams,
    disorder: DisorderSpec,
    n_sites: int,
    n_entries: int,
    n_replicates: int,
    rng: np.random.Generator,
    workers: int = 1,
) -> CorrelationReport:
    """Pairwise correlations of the first few inverse-diagonal entries.

    Asymptotically these entries are independent, so every off-diagonal
    correlation should sit within a few null standard errors of zero.
    """
    if n_entries < 2:
        raise ValueError("n_entries must be at least 2")
    if n_sites < n_entries:
        raise ValueError("n_sites must be at least n_entries")
    children = substreams(rng, n_replicates)
    idx = np.arange(n_entries)

    def one(child):
        return inverse_diagonal(sample_model(params, disorder, n_sites, child), idx)

    data = np.array(parallel_map(one, children, workers))  # (reps, entries)
    variances = data.var(axis=0, ddof=1)
    if np.any(variances < DEGENERATE_VARIANCE):
        return CorrelationReport(None, 1.0 / np.sqrt(n_replicates), True, n_replicates)
    return CorrelationReport(
        np.corrcoef(data, rowvar=False),
        1.0 / np.sqrt(n_replicates),
        False,
        n_replicates,
    )


@dataclass(frozen=True)
class PoissonUniformReport:
    """Empirical comparison of the two equivalent index constructions."""

    tv_distance: float
    pmf_uniform_given_poisson: np.ndarray   # L | M ~ Unif{0..M}, M ~ Poisson(lam)
    pmf_poisson_at_uniform_rate: np.ndarray  # L' | U ~ Poisson(lam*U), U ~ Unif[0,1]
    p_zero: Estimate
    n_samples: int

    def as_dict(self) -> dict:
        return {
            "tv_distance": self.tv_distance,
            "pmf_uniform_given_poisson": self.pmf_uniform_given_poisson.tolist(),
            "pmf_poisson_at_uniform_rate": self.pmf_poisson_at_uniform_rate.tolist(),
            "p_zero": self.p_zero.value,
            "p_zero_std_error": self.p_zero.std_error,
            "n_samples": self.n_samples,
        }


def poisson_uniform_check(
    lam: float, n_samples: int, rng: np.random.Generator
) -> PoissonUniformReport:
    """Sample both constructions of the random index and compare PMFs.

    A uniform pick from {0..M} with M Poisson(lam) has the same law as a
    Poisson draw at a uniformly thinned rate lam*U.  Returns the
    empirical total-variation distance, both PMFs on the union support,
    and the empirical mass at zero with its binomial standard error.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    m = rng.poisson(lam, size=n_samples)
    first = rng.integers(0, m + 1)
    second = rng.poisson(lam * rng.random(n_samples))
    top = int(max(first.max(), second.max())) + 1
    pmf_a = np.bincount(first, minlength=top) / n_samples
    pmf_b = np.bincount(second, minlength=top) / n_samples
    tv = 0.5 * float(np.abs(pmf_a - pmf_b).sum())
    p0 = float(pmf_a[0])
    p0_se = float(np.sqrt(max(p0 * (1.0 - p0), 1e-300) / n_samples))
    return PoissonUniformReport(
        tv, pmf_a, pmf_b, Estimate(p0, p0_se, n_samples), n_samples
    )


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float


def slope_fit(xs, ys) -> SlopeFit:
    """Least-squares line through (log x, log y)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 3:
        raise ValueError("need at least 3 matching points")
    if xs.min() <= 0 or ys.min() <= 0:
        raise ValueError("all inputs must be positive for a log-log fit")
    lx, ly = np.log(xs), np.log(ys)
    dx = lx - lx.mean()
    dy = ly - ly.mean()
    denom = float(dx @ dx)
    if denom == 0:
        raise ValueError("x values must not be all equal")
    slope = float(dx @ dy) / denom
    intercept = float(ly.mean() - slope * lx.mean())
    ss_res = float(np.sum((ly - (intercept + slope * lx)) ** 2))
    ss_tot = float(dy @ dy)
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return SlopeFit(slope, intercept, r2)


def write_pooled_samples(path, values, column: str = "value") -> None:
    """Single-column CSV export for pooled samples (17 significant digits)."""
    values = np.asarray(values, dtype=float)
    lines = [column]
    lines.extend(format(v, ".17g") for v in values)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def ks_distance(a, b) -> float:
    """Kolmogorov-Smirnov distance, two-sample or against a callable CDF."""
    a = np.sort(np.asarray(a, dtype=float))
    if a.size == 0:
        raise ValueError("first sample must be nonempty")
    n = a.size
    if callable(b):
        cdf = np.asarray(b(a), dtype=float)
        upper = np.max(np.arange(1, n + 1) / n - cdf)
        lower = np.max(cdf - np.arange(0, n) / n)
        return float(max(upper, lower, 0.0))
    b = np.sort(np.asarray(b, dtype=float))
    if b.size == 0:
        raise ValueError("second sample must be nonempty")
    both = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, both, side="right") / n
    cdf_b = np.searchsorted(b, both, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())
