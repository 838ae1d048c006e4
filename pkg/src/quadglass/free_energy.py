"""Limiting free energy by quadrature over fixed points at thinned rates.

In the large-N limit the free energy is

    F = (h^2/2) * E X(1) + (alpha/2) * Int_0^1 E log(1 + 2*beta * sum_{r<=p} z_r^2 X_r(x)) dx,

where for each x in (0, 1] the X(x) are i.i.d. from the fixed point of
the variance-law map run at the thinned clause rate alpha*x*p, and the
z_r are disorder draws.  The integrand is smooth in x, so a small
Gauss-Legendre rule on (0, 1) beats the Monte Carlo noise floor
immediately; the x = 0 endpoint is never evaluated because the nodes
are interior.

This module also runs finite-size-to-limit convergence studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disorder import DisorderSpec, _sample_shape
from .estimate import Estimate, combined_se, jackknife_se, mc_estimate
from .model import ModelParams, finite_free_energy, sample_model
from .parallel import parallel_map
from .rde import (
    DEFAULT_MAX_GENS,
    DEFAULT_POP_SIZE,
    DEFAULT_TOL,
    Population,
    RdeReport,
    solve_fixed_point,
)
from .streams import substreams

WEIGHT_SUM_SLACK = 1e-12
JACKKNIFE_BLOCKS = 20


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes in (0, 1] with positive weights summing to one."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.size == 0 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be matching nonempty 1-D arrays")
        if nodes.min() <= 0 or nodes.max() > 1:
            raise ValueError("nodes must lie in (0, 1]")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if weights.min() <= 0:
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_SLACK:
            raise ValueError("weights must sum to 1")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def gauss_legendre(cls, n_nodes: int = 16) -> "QuadratureRule":
        """Gauss-Legendre rule mapped from [-1, 1] to (0, 1)."""
        t, w = np.polynomial.legendre.leggauss(int(n_nodes))
        return cls((t + 1.0) / 2.0, w / w.sum())

    @classmethod
    def midpoint(cls, n_nodes: int = 64) -> "QuadratureRule":
        """Composite midpoint rule, kept around as a cross-check."""
        n = int(n_nodes)
        return cls((np.arange(n) + 0.5) / n, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class NodeResult:
    """Per-node breakdown of the integral term."""

    x: float
    rate: float
    edge_term: float
    std_error: float
    converged: bool
    generations: int


@dataclass(frozen=True)
class LimitResult:
    """Limiting free-energy estimate with its per-node breakdown."""

    estimate: Estimate
    nodes: tuple[NodeResult, ...]
    h_term: float
    h_term_se: float
    converged: bool

    @property
    def failed_nodes(self) -> tuple[float, ...]:
        return tuple(n.x for n in self.nodes if not n.converged)


def edge_term(
    pop: Population,
    params: ModelParams,
    disorder: DisorderSpec,
    n_mc: int,
    rng: np.random.Generator,
) -> Estimate:
    """Monte Carlo E log(1 + 2*beta * sum_{r<=p} z_r^2 X_r) over ``pop``.

    The X's are resampled with replacement from the population, so the
    target is the expectation under the empirical law.
    """
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    if params.beta == 0:
        return Estimate(0.0, 0.0, n_mc)
    zeta = _sample_shape(disorder, (n_mc, params.p), rng)
    picks = pop.values[rng.integers(0, pop.size, size=(n_mc, params.p))]
    samples = np.log1p(2.0 * params.beta * np.sum(zeta**2 * picks, axis=1))
    return mc_estimate(samples)


def limiting_free_energy(
    params: ModelParams,
    disorder: DisorderSpec,
    rule: QuadratureRule,
    rng: np.random.Generator,
    pop_size: int = DEFAULT_POP_SIZE,
    tol: float = DEFAULT_TOL,
    n_mc: int = 200_000,
    max_gens: int = DEFAULT_MAX_GENS,
    warm_start: bool = True,
    workers: int = 1,
) -> LimitResult:
    """Evaluate the limiting formula with one fixed point per node.

    Warm starting feeds node i+1 from node i's population (nodes run in
    increasing rate order, sequentially); cold starting solves every
    node from the point mass at 1 and may fan out over workers.  Node
    errors are treated as independent (disjoint streams); a node that
    fails to converge still contributes, and the result flags it.
    """
    h = params.h
    if params.beta == 0:
        return LimitResult(Estimate(h * h / 2.0, 0.0, 1), (), h * h / 2.0, 0.0, True)

    n_nodes = rule.nodes.size
    # one stream per node, one for the x=1 solve, one per node for MC
    node_streams = substreams(rng, 2 * n_nodes + 1)

    def run_node(i: int, init: Population | None) -> tuple[RdeReport, Estimate]:
        x = float(rule.nodes[i])
        report = solve_fixed_point(
            params,
            disorder,
            x,
            node_streams[i],
            pop_size=pop_size,
            tol=tol,
            max_gens=max_gens,
            init=init,
        )
        term = edge_term(
            report.population, params, disorder, n_mc, node_streams[n_nodes + 1 + i]
        )
        return report, term

    results: list[tuple[RdeReport, Estimate]] = []
    if warm_start:
        carry: Population | None = None
        for i in range(n_nodes):
            report, term = run_node(i, carry)
            results.append((report, term))
            carry = report.population
    else:
        results = parallel_map(lambda i: run_node(i, None), range(n_nodes), workers)

    nodes = tuple(
        NodeResult(
            float(x),
            float(params.alpha * x * params.p),
            term.value,
            term.std_error,
            report.converged,
            report.generations,
        )
        for x, (report, term) in zip(rule.nodes, results)
    )
    integral = float(np.sum(rule.weights * np.array([n.edge_term for n in nodes])))
    integral_se_parts = [
        float(w) * params.alpha / 2.0 * n.std_error
        for w, n in zip(rule.weights, nodes)
    ]

    if h != 0.0:
        init = results[-1][0].population if warm_start else None
        top = solve_fixed_point(
            params,
            disorder,
            1.0,
            node_streams[n_nodes],
            pop_size=pop_size,
            tol=tol,
            max_gens=max_gens,
            init=init,
        )
        mean_x1 = top.population.mean()
        h_term = h * h / 2.0 * mean_x1
        h_term_se = (
            h * h / 2.0 * jackknife_se(top.population.values, JACKKNIFE_BLOCKS)
        )
        top_converged = top.converged
    else:
        h_term, h_term_se, top_converged = 0.0, 0.0, True

    value = h_term + params.alpha / 2.0 * integral
    se = combined_se(*integral_se_parts, h_term_se)
    converged = top_converged and all(n.converged for n in nodes)
    estimate = Estimate(value, se, n_mc * n_nodes)
    return LimitResult(estimate, nodes, h_term, h_term_se, converged)


@dataclass(frozen=True)
class SizeRow:
    """Finite-size summary at one N."""

    n_sites: int
    mean_f: float
    std_f: float
    se_mean: float
    gap: float


@dataclass(frozen=True)
class ConvergenceStudy:
    rows: tuple[SizeRow, ...]
    limit: Estimate
    std_slope: float | None  # log-log slope of std_f vs N; None if any std is 0


def convergence_study(
    params: ModelParams,
    disorder: DisorderSpec,
    n_grid,
    seeds_per_n: int,
    rule: QuadratureRule,
    rng: np.random.Generator,
    pop_size: int = DEFAULT_POP_SIZE,
    tol: float = DEFAULT_TOL,
    n_mc: int = 200_000,
    workers: int = 1,
) -> ConvergenceStudy:
    """Finite-size free energies against the limiting estimate.

    For each N, ``seeds_per_n`` independent realizations give the mean
    and spread of F_N; the gap column is |mean - limit|.  The log-log
    slope of the std column against N is the empirical concentration
    rate.
    """
    n_grid = [int(n) for n in n_grid]
    if not n_grid:
        raise ValueError("n_grid must be nonempty")
    if seeds_per_n < 2:
        raise ValueError("seeds_per_n must be at least 2")
    limit_rng, sim_rng = substreams(rng, 2)
    limit = limiting_free_energy(
        params, disorder, rule, limit_rng, pop_size=pop_size, tol=tol, n_mc=n_mc
    ).estimate

    rows = []
    per_size_streams = substreams(sim_rng, len(n_grid))
    for n_sites, size_rng in zip(n_grid, per_size_streams):
        children = substreams(size_rng, seeds_per_n)

        def one(child, n_sites=n_sites):
            return finite_free_energy(sample_model(params, disorder, n_sites, child))

        values = np.array(parallel_map(one, children, workers))
        mean_f = float(values.mean())
        std_f = float(values.std(ddof=1))
        rows.append(
            SizeRow(
                n_sites,
                mean_f,
                std_f,
                std_f / np.sqrt(seeds_per_n),
                abs(mean_f - limit.value),
            )
        )

    stds = np.array([r.std_f for r in rows])
    if len(rows) >= 3 and np.all(stds > 0):
        from .stats import slope_fit

        std_slope = slope_fit(np.array(n_grid, dtype=float), stds).slope
    else:
        std_slope = None
    return ConvergenceStudy(tuple(rows), limit, std_slope)
