"""Finite-size realizations of the sparse rank-one interaction ensemble.

A realization on N sites is the symmetric positive definite matrix

    A = I_N + 2*beta * sum_k v_k v_k^T,        k = 1..M,

where M is Poisson(alpha*N), each v_k is supported on an ordered
p-tuple of distinct sites drawn uniformly, and the p nonzero entries
are i.i.d. draws from a symmetric disorder law.  The induced Gibbs
measure is Gaussian with mean h*A^{-1}*1 and covariance A^{-1}, so all
thermodynamic observables reduce to linear algebra on A:

    F_N = (h^2/2) * (1^T A^{-1} 1)/N + log det A / (2N).

Dense Cholesky factorization is the default backend (desk scale,
N <= a few thousand); A >= I makes it unconditionally well posed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, solve_triangular

from .disorder import DisorderSpec, _sample_shape
from .estimate import Estimate, mc_estimate
from .streams import substreams

INCREMENTAL_SIZE_CAP = 200


class NumericalError(RuntimeError):
    """Factorization failed on a matrix that is >= I by construction.

    This cannot happen for a correctly assembled realization; treat it
    as a bug signal, not an input problem.
    """


@dataclass(frozen=True)
class ModelParams:
    """Ensemble parameters: edge density, inverse temperature, field, arity."""

    alpha: float
    beta: float
    h: float
    p: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.p < 1:
            raise ValueError("p must be at least 1")


@dataclass(frozen=True)
class Clause:
    """One interaction term: p distinct sites and their weights."""

    sites: tuple[int, ...]
    weights: tuple[float, ...]


class FactorModel:
    """One sampled realization: N sites plus M weighted site tuples.

    ``sites`` is an (M, p) integer array of 0-based site indices (each
    row pairwise distinct); ``weights`` the matching (M, p) float array.
    Instances are immutable after construction; all operations on them
    are pure.
    """

    __slots__ = ("n_sites", "sites", "weights", "params", "disorder")

    def __init__(self, n_sites, sites, weights, params, disorder):
        sites = np.asarray(sites, dtype=np.int64).reshape(-1, params.p)
        weights = np.asarray(weights, dtype=float).reshape(sites.shape)
        if n_sites < params.p:
            raise ValueError(
                f"n_sites={n_sites} is smaller than the clause arity p={params.p}"
            )
        if sites.size and (sites.min() < 0 or sites.max() >= n_sites):
            raise ValueError("site index out of range")
        self.n_sites = int(n_sites)
        self.sites = sites
        self.weights = weights
        self.params = params
        self.disorder = disorder
        sites.setflags(write=False)
        weights.setflags(write=False)

    @property
    def n_clauses(self) -> int:
        return self.sites.shape[0]

    @property
    def clauses(self) -> tuple[Clause, ...]:
        return tuple(
            Clause(tuple(int(s) for s in row), tuple(float(w) for w in wrow))
            for row, wrow in zip(self.sites, self.weights)
        )


@dataclass(frozen=True)
class CavitySplit:
    """Thinning decomposition of a realization around the last site.

    ``bulk`` is a full realization on sites 0..N-2 whose clause count is
    Poisson(alpha*(N-p)); the boundary holds the Poisson(alpha*p) clauses
    through site N-1, each with one weight ``site_weights[k]`` at the
    last site and p-1 interior weights at distinct interior sites.
    """

    n_sites: int
    bulk: FactorModel
    interior_sites: np.ndarray      # (R, p-1) indices into 0..N-2
    interior_weights: np.ndarray    # (R, p-1)
    site_weights: np.ndarray        # (R,) weights at the last site

    @property
    def n_boundary(self) -> int:
        return self.site_weights.shape[0]

    @property
    def boundary_clauses(self) -> tuple[Clause, ...]:
        last = self.n_sites - 1
        out = []
        for row, wrow, z in zip(
            self.interior_sites, self.interior_weights, self.site_weights
        ):
            out.append(
                Clause(
                    tuple(int(s) for s in row) + (last,),
                    tuple(float(w) for w in wrow) + (float(z),),
                )
            )
        return tuple(out)


class WoodburyResidual(NamedTuple):
    residual: float
    bound: float


# ---------------------------------------------------------------------------
# sampling


def _distinct_tuples(rng, n_sites, m, p):
    """Uniform ordered distinct p-tuples from 0..n_sites-1, shape (m, p).

    Vectorized rejection when collisions are rare; falls back to per-row
    partial shuffles when p is comparable to n_sites.  Both routes give
    the exact uniform law on ordered distinct tuples.
    """
    if p == 0 or m == 0:
        return np.empty((m, p), dtype=np.int64)
    if p == 1:
        return rng.integers(0, n_sites, size=(m, 1))
    accept = np.prod(1.0 - np.arange(p) / n_sites)
    if accept < 0.5:
        out = np.empty((m, p), dtype=np.int64)
        for i in range(m):
            out[i] = rng.permutation(n_sites)[:p]
        return out
    out = rng.integers(0, n_sites, size=(m, p))
    bad = _rows_with_duplicates(out)
    while bad.size:
        out[bad] = rng.integers(0, n_sites, size=(bad.size, p))
        bad = bad[_rows_with_duplicates(out[bad])]
    return out


def _rows_with_duplicates(rows):
    srt = np.sort(rows, axis=1)
    dup = (np.diff(srt, axis=1) == 0).any(axis=1)
    return np.nonzero(dup)[0]


def sample_model(
    params: ModelParams,
    disorder: DisorderSpec,
    n_sites: int,
    rng: np.random.Generator,
) -> FactorModel:
    """Draw one realization: Poisson(alpha*N) clauses, uniform site tuples."""
    if n_sites < params.p:
        raise ValueError(
            f"n_sites={n_sites} is smaller than the clause arity p={params.p}"
        )
    m = int(rng.poisson(params.alpha * n_sites))
    sites = _distinct_tuples(rng, n_sites, m, params.p)
    weights = _sample_shape(disorder, (m, params.p), rng)
    return FactorModel(n_sites, sites, weights, params, disorder)


# ---------------------------------------------------------------------------
# linear algebra


def coupling_matrix(model: FactorModel) -> np.ndarray:
    """Assemble the dense N x N matrix I + 2*beta * sum_k v_k v_k^T."""
    n = model.n_sites
    a = np.eye(n)
    if model.n_clauses and model.params.beta > 0:
        contrib = (
            2.0
            * model.params.beta
            * model.weights[:, :, None]
            * model.weights[:, None, :]
        )
        rows = np.broadcast_to(model.sites[:, :, None], contrib.shape)
        cols = np.broadcast_to(model.sites[:, None, :], contrib.shape)
        np.add.at(a, (rows, cols), contrib)
    return a


def _factorize(matrix):
    try:
        return cho_factor(matrix, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - bug signal
        raise NumericalError(f"Cholesky factorization failed: {exc}") from exc


def log_det(model: FactorModel) -> float:
    """log det A via symmetric factorization; always >= 0 since A >= I."""
    if model.n_clauses == 0 or model.params.beta == 0:
        return 0.0
    c, _ = _factorize(coupling_matrix(model))
    return float(2.0 * np.sum(np.log(np.diag(c))))


def log_det_incremental(model: FactorModel) -> float:
    """log det A by successive rank-one determinant updates (test path).

    Maintains a dense running inverse through rank-one corrections and
    accumulates log(1 + 2*beta * v^T S^{-1} v) clause by clause.  Costs
    O(N^2) per clause, so it is capped at small sizes; the factorization
    route is the production default.
    """
    n = model.n_sites
    if n > INCREMENTAL_SIZE_CAP:
        raise ValueError(
            f"incremental path is capped at n_sites <= {INCREMENTAL_SIZE_CAP}"
        )
    two_beta = 2.0 * model.params.beta
    if model.n_clauses == 0 or two_beta == 0:
        return 0.0
    inv = np.eye(n)
    total = 0.0
    for row, wrow in zip(model.sites, model.weights):
        u = inv[:, row] @ wrow
        s = 1.0 + two_beta * float(wrow @ u[row])
        total += math.log(s)
        inv -= (two_beta / s) * np.outer(u, u)
    return total


def inverse_diagonal(model: FactorModel, sites=None) -> np.ndarray:
    """Exact diagonal entries of A^{-1} at the requested sites.

    All values lie in (0, 1] because A >= I.  ``sites`` defaults to every
    site; indices are 0-based.
    """
    n = model.n_sites
    idx = np.arange(n) if sites is None else np.asarray(sites, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError("site index out of range")
    if model.n_clauses == 0 or model.params.beta == 0:
        return np.ones(idx.size)
    c = _factorize(coupling_matrix(model))
    rhs = np.zeros((n, idx.size))
    rhs[idx, np.arange(idx.size)] = 1.0
    sol = cho_solve(c, rhs)
    return sol[idx, np.arange(idx.size)]


def ones_quadratic_form(model: FactorModel) -> float:
    """(1^T A^{-1} 1) / N via a single linear solve."""
    if model.n_clauses == 0 or model.params.beta == 0:
        return 1.0
    c = _factorize(coupling_matrix(model))
    ones = np.ones(model.n_sites)
    return float(ones @ cho_solve(c, ones) / model.n_sites)


def finite_free_energy(model: FactorModel) -> float:
    """F_N = (h^2/2) * (1^T A^{-1} 1)/N + log det A / (2N)."""
    h = model.params.h
    if model.n_clauses == 0 or model.params.beta == 0:
        return h * h / 2.0
    n = model.n_sites
    c = _factorize(coupling_matrix(model))
    ones = np.ones(n)
    quad = float(ones @ cho_solve(c, ones) / n)
    ld = float(2.0 * np.sum(np.log(np.diag(c[0]))))
    return h * h / 2.0 * quad + ld / (2.0 * n)


def sample_spins(
    model: FactorModel, n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw spin configurations from the Gaussian Gibbs measure.

    Returns an (n_samples, N) array of i.i.d. draws with mean h*A^{-1}*1
    and covariance A^{-1}, generated by back-substitution against the
    Cholesky factor (z = L^{-T} g has covariance (L L^T)^{-1} = A^{-1}).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    n = model.n_sites
    h = model.params.h
    if model.n_clauses == 0 or model.params.beta == 0:
        return h + rng.standard_normal((n_samples, n))
    lower = cholesky(coupling_matrix(model), lower=True)
    mean = solve_triangular(
        lower.T, solve_triangular(lower, np.full(n, h), lower=True), lower=False
    )
    noise = solve_triangular(lower.T, rng.standard_normal((n, n_samples)), lower=False)
    return mean[None, :] + noise.T


# ---------------------------------------------------------------------------
# off-diagonal statistics


@dataclass(frozen=True)
class OffDiagReport:
    """Replicated moments of selected off-diagonal entries of A^{-1}."""

    entry_12: Estimate            # mean of A^{-1}_{12}
    product_12_13: Estimate       # mean of A^{-1}_{12} A^{-1}_{13}
    product_12_34: Estimate       # mean of A^{-1}_{12} A^{-1}_{34}
    scaled_square: Estimate       # mean of (N-1) (A^{-1}_{12})^2
    n_sites: int


def offdiag_moments(
    params: ModelParams,
    disorder: DisorderSpec,
    n_sites: int,
    n_replicates: int,
    rng: np.random.Generator,
) -> OffDiagReport:
    """Sample means and errors of A^{-1} cross moments over replicates."""
    if n_sites < 4:
        raise ValueError("n_sites must be at least 4 for the (1,2)(3,4) moment")
    if n_replicates < 1:
        raise ValueError("n_replicates must be at least 1")
    a12 = np.empty(n_replicates)
    a13 = np.empty(n_replicates)
    a34 = np.empty(n_replicates)
    for i, child in enumerate(substreams(rng, n_replicates)):
        model = sample_model(params, disorder, n_sites, child)
        if model.n_clauses == 0 or params.beta == 0:
            a12[i] = a13[i] = a34[i] = 0.0
            continue
        c = _factorize(coupling_matrix(model))
        rhs = np.zeros((n_sites, 3))
        rhs[[1, 2, 3], [0, 1, 2]] = 1.0
        sol = cho_solve(c, rhs)
        a12[i] = sol[0, 0]
        a13[i] = sol[0, 1]
        a34[i] = sol[2, 2]
    return OffDiagReport(
        entry_12=mc_estimate(a12),
        product_12_13=mc_estimate(a12 * a13),
        product_12_34=mc_estimate(a12 * a34),
        scaled_square=mc_estimate((n_sites - 1) * a12**2),
        n_sites=n_sites,
    )


# ---------------------------------------------------------------------------
# cavity split and the rank-R update check


def cavity_split(
    params: ModelParams,
    disorder: DisorderSpec,
    n_sites: int,
    rng: np.random.Generator,
) -> CavitySplit:
    """Split the ensemble at the last site by Poisson thinning.

    The clause list of a full realization decomposes in law into a bulk
    part avoiding the last site (count Poisson(alpha*(N-p))) and a
    boundary part through it (count Poisson(alpha*p)); reassembling the
    two reproduces the original ensemble exactly.
    """
    if n_sites <= params.p:
        raise ValueError("n_sites must exceed p to split off one site")
    p = params.p
    bulk_m = int(rng.poisson(params.alpha * (n_sites - p)))
    bulk_sites = _distinct_tuples(rng, n_sites - 1, bulk_m, p)
    bulk_weights = _sample_shape(disorder, (bulk_m, p), rng)
    bulk = FactorModel(n_sites - 1, bulk_sites, bulk_weights, params, disorder)
    r = int(rng.poisson(params.alpha * p))
    interior_sites = _distinct_tuples(rng, n_sites - 1, r, p - 1)
    interior_weights = _sample_shape(disorder, (r, p - 1), rng)
    site_weights = _sample_shape(disorder, (r,), rng)
    return CavitySplit(n_sites, bulk, interior_sites, interior_weights, site_weights)


def reassemble(split: CavitySplit) -> FactorModel:
    """Merge bulk and boundary clauses into a full N-site realization."""
    last = split.n_sites - 1
    r = split.n_boundary
    boundary_sites = np.hstack(
        [split.interior_sites, np.full((r, 1), last, dtype=np.int64)]
    )
    boundary_weights = np.hstack([split.interior_weights, split.site_weights[:, None]])
    sites = np.vstack([split.bulk.sites, boundary_sites])
    weights = np.vstack([split.bulk.weights, boundary_weights])
    return FactorModel(
        split.n_sites, sites, weights, split.bulk.params, split.bulk.disorder
    )


def woodbury_residual(split: CavitySplit) -> WoodburyResidual:
    """Two-sided check of the rank-R cavity approximation at the last site.

    Computes exactly, by independent factorizations,

        residual = | A^{-1}_{NN} - (1 + sum_k 2*beta*z_k^2 / d_k)^{-1} |,
        d_k      = 1 + 2*beta * sum_r xi_{k,r}^2 * Binv[s_{k,r}, s_{k,r}],

    where B is the bulk matrix, and returns it with the product
    ||z||^2 * ||E||, E being the R x R interaction matrix built from the
    off-diagonal bulk-inverse entries between boundary interior sites
    (cross-clause entries everywhere, same-clause entries off its
    diagonal).  The residual is controlled by a constant multiple of the
    bound; the constant is left to the caller to fit.
    """
    params = split.bulk.params
    two_beta = 2.0 * params.beta
    full = reassemble(split)
    c_full = _factorize(coupling_matrix(full))
    rhs = np.zeros(split.n_sites)
    rhs[-1] = 1.0
    exact = float(cho_solve(c_full, rhs)[-1])

    r = split.n_boundary
    zeta = split.site_weights
    if r == 0:
        return WoodburyResidual(abs(exact - 1.0), 0.0)

    if split.interior_sites.size:
        c_bulk = _factorize(coupling_matrix(split.bulk))
        unique_sites, col_of = np.unique(split.interior_sites, return_inverse=True)
        col_of = col_of.reshape(split.interior_sites.shape)
        rhs_b = np.zeros((split.n_sites - 1, unique_sites.size))
        rhs_b[unique_sites, np.arange(unique_sites.size)] = 1.0
        sol = cho_solve(c_bulk, rhs_b)              # columns of B^{-1}
        # B^{-1} restricted to the grid of distinct interior sites:
        grid = sol[unique_sites, :]
        xi = split.interior_weights
        diag_terms = np.diag(grid)
        d_k = 1.0 + two_beta * np.sum(xi**2 * diag_terms[col_of], axis=1)
        # Gram of the interior parts through B^{-1}: (R x R), includes 2*beta.
        profile = np.zeros((unique_sites.size, r))
        for k in range(r):
            np.add.at(profile[:, k], col_of[k], xi[k])
        gram = two_beta * profile.T @ grid @ profile
        e_matrix = gram.copy()
        e_matrix[np.arange(r), np.arange(r)] -= d_k - 1.0  # drop the r = s terms
        e_norm = float(np.linalg.norm(e_matrix, 2))
    else:
        # p = 1: no interior sites, the approximation is exact and E empty.
        d_k = np.ones(r)
        e_norm = 0.0

    approx = 1.0 / (1.0 + float(np.sum(two_beta * zeta**2 / d_k)))
    bound = float(zeta @ zeta) * e_norm
    return WoodburyResidual(abs(exact - approx), bound)


# ---------------------------------------------------------------------------
# portable text format


def dump_model(model: FactorModel, path) -> None:
    """Write a realization to the portable text format.

    Header line: N M alpha beta h p family param truncation.  Then one
    line per clause: p 1-based site indices followed by the p weights,
    all decimals with 17 significant digits (lossless float64
    round-trip).
    """
    params, spec = model.params, model.disorder
    lines = [
        " ".join(
            [
                str(model.n_sites),
                str(model.n_clauses),
                _fmt(params.alpha),
                _fmt(params.beta),
                _fmt(params.h),
                str(params.p),
                spec.family,
                _fmt(spec.param),
                _fmt(spec.truncation),
            ]
        )
    ]
    for row, wrow in zip(model.sites, model.weights):
        lines.append(
            " ".join(str(int(s) + 1) for s in row)
            + " "
            + " ".join(_fmt(w) for w in wrow)
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> FactorModel:
    """Read a realization written by :func:`dump_model`."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = [line.strip() for line in fh if line.strip()]
    if not raw:
        raise ValueError(f"{path}: empty model file")
    head = raw[0].split()
    if len(head) != 9:
        raise ValueError(f"{path}: malformed header (expected 9 fields)")
    n_sites, m = int(head[0]), int(head[1])
    params = ModelParams(float(head[2]), float(head[3]), float(head[4]), int(head[5]))
    spec = DisorderSpec(head[6], float(head[7]), float(head[8]))
    if len(raw) - 1 != m:
        raise ValueError(f"{path}: header promises {m} clauses, found {len(raw) - 1}")
    p = params.p
    sites = np.empty((m, p), dtype=np.int64)
    weights = np.empty((m, p))
    for i, line in enumerate(raw[1:]):
        fields = line.split()
        if len(fields) != 2 * p:
            raise ValueError(f"{path}: clause line {i + 2} has {len(fields)} fields")
        sites[i] = [int(f) - 1 for f in fields[:p]]
        weights[i] = [float(f) for f in fields[p:]]
    return FactorModel(n_sites, sites, weights, params, spec)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")
