"""Population-dynamics solver for the spin-variance distributional equation.

The cavity recursion maps a law mu on (0, 1] to the law of

    ( 1 + sum_{k<=R} 2*beta*z_k^2 / (1 + 2*beta * sum_{r<=p-1} X_{k,r} * x_{k,r}^2) )^{-1}

with R Poisson(alpha*rate_scale*p), weights z, x i.i.d. from the
disorder law, and X_{k,r} i.i.d. from mu.  Its fixed point is the
limiting law of the spin variances.  Populations (large empirical
samples) represent laws; one generation resamples the whole population
synchronously from the previous snapshot, so the update is a pure
push-forward with clean fixed-point semantics.

A conjugated log-domain map (y = -log x) is provided as well: it is a
contraction in the Wasserstein-q metric for q large enough, which is
what makes the fixed point unique and gives a certifiable convergence
criterion through :func:`contraction_factor`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disorder import DisorderSpec, _sample_shape
from .estimate import Estimate, mc_estimate
from .model import ModelParams

UNIT_INTERVAL = "unit_interval"
LOG_NONNEG = "log_nonneg"

CONVERGENCE_WINDOW = 10
DEFAULT_POP_SIZE = 100_000
DEFAULT_TOL = 1e-3
DEFAULT_MAX_GENS = 500


@dataclass(frozen=True)
class Population:
    """Fixed-size empirical sample representing a 1-D law.

    ``domain`` is ``unit_interval`` for variance laws (values in (0, 1])
    or ``log_nonneg`` for their -log images (values in [0, inf)).
    ``rate`` records the Poisson clause rate alpha*rate_scale*p the
    population was built under; ``generation`` counts applications of
    the map.
    """

    values: np.ndarray
    domain: str = UNIT_INTERVAL
    rate: float = 0.0
    generation: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("population values must be a nonempty 1-D array")
        if self.domain == UNIT_INTERVAL:
            if values.min() <= 0 or values.max() > 1:
                raise ValueError("unit_interval population must lie in (0, 1]")
        elif self.domain == LOG_NONNEG:
            if values.min() < 0:
                raise ValueError("log_nonneg population must be nonnegative")
        else:
            raise ValueError(f"unknown population domain {self.domain!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True)
class RdeReport:
    """Outcome of a fixed-point run: final population and gap trajectory."""

    population: Population
    generations: int
    gaps: tuple[float, ...]
    converged: bool
    tol: float


def delta_population(
    value: float, size: int, rate: float = 0.0, domain: str = UNIT_INTERVAL
) -> Population:
    """Point-mass population, the usual initialization."""
    return Population(np.full(size, float(value)), domain, rate, 0)


def to_log_domain(pop: Population) -> Population:
    """Push a unit-interval population through x -> -log x."""
    if pop.domain != UNIT_INTERVAL:
        raise ValueError("expected a unit_interval population")
    return Population(-np.log(pop.values), LOG_NONNEG, pop.rate, pop.generation)


def from_log_domain(pop: Population) -> Population:
    """Inverse of :func:`to_log_domain`."""
    if pop.domain != LOG_NONNEG:
        raise ValueError("expected a log_nonneg population")
    return Population(np.exp(-pop.values), UNIT_INTERVAL, pop.rate, pop.generation)


# ---------------------------------------------------------------------------
# one generation of the push-forward


def _clause_draws(params, disorder, rate_scale, out_size, rng):
    """Common sampling step: clause counts, owners, weights."""
    lam = params.alpha * rate_scale * params.p
    counts = rng.poisson(lam, size=out_size)
    total = int(counts.sum())
    owner = np.repeat(np.arange(out_size), counts)
    zeta = _sample_shape(disorder, (total,), rng)
    xi = _sample_shape(disorder, (total, params.p - 1), rng)
    return counts, owner, zeta, xi


def step(
    pop: Population,
    params: ModelParams,
    disorder: DisorderSpec,
    rate_scale: float,
    out_size: int,
    rng: np.random.Generator,
) -> Population:
    """One synchronous generation of the variance-law map.

    Every output value is an independent draw of the displayed random
    variable with the X's resampled uniformly (with replacement) from
    ``pop``.  Outputs always lie in (0, 1]; entries whose clause count
    is zero come out exactly 1.
    """
    if pop.domain != UNIT_INTERVAL:
        raise ValueError("step acts on unit_interval populations")
    if not 0 < rate_scale <= 1:
        raise ValueError("rate_scale must lie in (0, 1]")
    if out_size < 1:
        raise ValueError("out_size must be at least 1")
    two_beta = 2.0 * params.beta
    _, owner, zeta, xi = _clause_draws(params, disorder, rate_scale, out_size, rng)
    if params.p > 1:
        picks = pop.values[rng.integers(0, pop.size, size=xi.shape)]
        denom = 1.0 + two_beta * np.sum(picks * xi**2, axis=1)
    else:
        denom = np.ones(zeta.shape[0])
    contrib = two_beta * zeta**2 / denom
    totals = np.bincount(owner, weights=contrib, minlength=out_size)
    return Population(
        1.0 / (1.0 + totals),
        UNIT_INTERVAL,
        params.alpha * rate_scale * params.p,
        pop.generation + 1,
    )


def conjugate_step(
    pop: Population,
    params: ModelParams,
    disorder: DisorderSpec,
    rate_scale: float,
    out_size: int,
    rng: np.random.Generator,
) -> Population:
    """One generation of the log-domain conjugate map.

    New value: log(1 + sum_k z_k^2 / (g + sum_r x_{k,r}^2 exp(-Y_{k,r})))
    with g = 1/(2*beta).  Undefined at beta = 0 (use :func:`step`, whose
    output there is the point mass at 1).
    """
    if pop.domain != LOG_NONNEG:
        raise ValueError("conjugate_step acts on log_nonneg populations")
    if params.beta == 0:
        raise ValueError("conjugate map undefined at beta = 0")
    if not 0 < rate_scale <= 1:
        raise ValueError("rate_scale must lie in (0, 1]")
    if out_size < 1:
        raise ValueError("out_size must be at least 1")
    gamma = 1.0 / (2.0 * params.beta)
    _, owner, zeta, xi = _clause_draws(params, disorder, rate_scale, out_size, rng)
    if params.p > 1:
        picks = pop.values[rng.integers(0, pop.size, size=xi.shape)]
        denom = gamma + np.sum(xi**2 * np.exp(-picks), axis=1)
    else:
        denom = np.full(zeta.shape[0], gamma)
    totals = np.bincount(owner, weights=zeta**2 / denom, minlength=out_size)
    return Population(
        np.log1p(totals),
        LOG_NONNEG,
        params.alpha * rate_scale * params.p,
        pop.generation + 1,
    )


# ---------------------------------------------------------------------------
# Wasserstein distance


def wasserstein(a: Population, b: Population, q: float = 1.0) -> float:
    """Wasserstein-q distance between two populations.

    Equal sizes use the exact sorted-pair coupling, which is optimal in
    one dimension.  Unequal sizes evaluate both linearly interpolated
    empirical quantile functions (knots at midpoint probabilities) on a
    common grid; this reduces to the exact coupling when sizes agree and
    is consistent as sizes grow.
    """
    if a.domain != b.domain:
        raise ValueError(f"domain mismatch: {a.domain!r} vs {b.domain!r}")
    if q < 1:
        raise ValueError("q must be at least 1")
    return _quantile_distance(a.values, b.values, q)


def _quantile_distance(x, y, q):
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size == y.size:
        diffs = np.abs(x - y)
    else:
        grid_n = max(x.size, y.size)
        probs = (np.arange(grid_n) + 0.5) / grid_n
        qx = np.interp(probs, (np.arange(x.size) + 0.5) / x.size, x)
        qy = np.interp(probs, (np.arange(y.size) + 0.5) / y.size, y)
        diffs = np.abs(qx - qy)
    return _power_mean(diffs, q)


def _power_mean(diffs, q):
    top = diffs.max(initial=0.0)
    if top == 0.0:
        return 0.0
    if q == 1:
        return float(diffs.mean())
    # scale by the max so large q cannot underflow everything at once
    return float(top * np.mean((diffs / top) ** q) ** (1.0 / q))


# ---------------------------------------------------------------------------
# fixed-point iteration


def solve_fixed_point(
    params: ModelParams,
    disorder: DisorderSpec,
    rate_scale: float,
    rng: np.random.Generator,
    pop_size: int = DEFAULT_POP_SIZE,
    tol: float = DEFAULT_TOL,
    max_gens: int = DEFAULT_MAX_GENS,
    init: Population | None = None,
) -> RdeReport:
    """Iterate the push-forward until the W1 gap stays below ``tol``.

    Convergence requires ``CONVERGENCE_WINDOW`` consecutive
    generation-to-generation gaps below ``tol``; hitting ``max_gens``
    first returns the report with ``converged=False`` rather than
    raising.  Note the gap has a sampling floor of order
    pop_size**-0.5, so a tight tol with a small population can be
    unattainable by design.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rate = params.alpha * rate_scale * params.p
    current = (
        delta_population(1.0, pop_size, rate) if init is None else init
    )
    gaps: list[float] = []
    converged = False
    generations = 0
    for _ in range(max_gens):
        new = step(current, params, disorder, rate_scale, pop_size, rng)
        gaps.append(wasserstein(current, new, 1.0))
        current = new
        generations += 1
        if len(gaps) >= CONVERGENCE_WINDOW and all(
            g < tol for g in gaps[-CONVERGENCE_WINDOW:]
        ):
            converged = True
            break
    return RdeReport(current, generations, tuple(gaps), converged, tol)


# ---------------------------------------------------------------------------
# contraction diagnostics


def contraction_factor(
    params: ModelParams,
    disorder: DisorderSpec,
    q: float,
    n_mc: int,
    rng: np.random.Generator,
) -> Estimate:
    """Monte Carlo bound on the log-domain map's W_q modulus.

    Estimates E[(chi_R/(gamma + chi_R))^q * R*(p-1)] with
    chi_R = sum_{k<=R} z_k^2 and R Poisson(alpha*p).  Below 1, the
    conjugate map contracts in W_q and the fixed point is unique.
    """
    if params.beta == 0:
        raise ValueError("contraction factor undefined at beta = 0")
    if q < 1:
        raise ValueError("q must be at least 1")
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    gamma = 1.0 / (2.0 * params.beta)
    counts = rng.poisson(params.alpha * params.p, size=n_mc)
    total = int(counts.sum())
    owner = np.repeat(np.arange(n_mc), counts)
    zeta = _sample_shape(disorder, (total,), rng)
    chi = np.bincount(owner, weights=zeta**2, minlength=n_mc)
    samples = (chi / (gamma + chi)) ** q * counts * (params.p - 1)
    return mc_estimate(samples)


@dataclass(frozen=True)
class ContractionScan:
    """Grid search outcome: the certified q (None if none) and all estimates."""

    q: float | None
    estimates: tuple[tuple[float, Estimate], ...]


def find_contractive_q(
    params: ModelParams,
    disorder: DisorderSpec,
    q_grid,
    n_mc: int,
    rng: np.random.Generator,
) -> ContractionScan:
    """Smallest grid q whose estimated modulus is below 1 by 3 SE."""
    results = []
    found = None
    for q in q_grid:
        est = contraction_factor(params, disorder, float(q), n_mc, rng)
        results.append((float(q), est))
        if found is None and est.value + 3.0 * est.std_error < 1.0:
            found = float(q)
    return ContractionScan(found, tuple(results))


# ---------------------------------------------------------------------------
# exploratory coupled recursion (p = 2)


def pair_step(
    pairs: np.ndarray,
    params: ModelParams,
    disorder: DisorderSpec,
    out_size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """One generation of the coupled (U, X) recursion at arity 2.

    Each output pair uses the same clause draws in both coordinates:

        U' = 1 - sum_k 2*beta*z_k*x_k*X_k*U_k / (1 + 2*beta*x_k^2*X_k)
        X' = (1 + sum_k 2*beta*z_k^2 / (1 + 2*beta*x_k^2*X_k))^{-1}

    with R Poisson(2*alpha) and (U_k, X_k) resampled jointly from
    ``pairs``.  Only the X marginal is known to have a unique fixed
    point; the coupled iteration is an exploratory probe.
    """
    if params.p != 2:
        raise ValueError("the coupled recursion is defined for p = 2 only")
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2 or pairs.shape[0] == 0:
        raise ValueError("pairs must be a nonempty (n, 2) array of (U, X)")
    if out_size < 1:
        raise ValueError("out_size must be at least 1")
    two_beta = 2.0 * params.beta
    counts = rng.poisson(2.0 * params.alpha, size=out_size)
    total = int(counts.sum())
    owner = np.repeat(np.arange(out_size), counts)
    zeta = _sample_shape(disorder, (total,), rng)
    xi = _sample_shape(disorder, (total,), rng)
    picks = pairs[rng.integers(0, pairs.shape[0], size=total)]
    u_k, x_k = picks[:, 0], picks[:, 1]
    denom = 1.0 + two_beta * xi**2 * x_k
    u_new = 1.0 - np.bincount(
        owner, weights=two_beta * zeta * xi * x_k * u_k / denom, minlength=out_size
    )
    x_new = 1.0 / (
        1.0
        + np.bincount(owner, weights=two_beta * zeta**2 / denom, minlength=out_size)
    )
    return np.column_stack([u_new, x_new])


def iterate_pair(
    params: ModelParams,
    disorder: DisorderSpec,
    n_generations: int,
    pop_size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Run :func:`pair_step` from the all-(1, 1) start for ``n_generations``."""
    pairs = np.ones((pop_size, 2))
    for _ in range(n_generations):
        pairs = pair_step(pairs, params, disorder, pop_size, rng)
    return pairs


# ---------------------------------------------------------------------------
# portable text format


def dump_population(pop: Population, path) -> None:
    """Single-column decimal text: header (domain rate generation size), values."""
    lines = [f"{pop.domain} {pop.rate:.17g} {pop.generation} {pop.size}"]
    lines.extend(format(v, ".17g") for v in pop.values)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_population(path) -> Population:
    """Read a population written by :func:`dump_population`."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = [line.strip() for line in fh if line.strip()]
    if not raw:
        raise ValueError(f"{path}: empty population file")
    head = raw[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: malformed header (expected 4 fields)")
    domain, rate, generation, size = head[0], float(head[1]), int(head[2]), int(head[3])
    values = np.array([float(v) for v in raw[1:]])
    if values.size != size:
        raise ValueError(f"{path}: header promises {size} values, found {values.size}")
    return Population(values, domain, rate, generation)
