"""Independent oracle implementations used to pin expected values.

Everything here deliberately avoids the code paths it is used to check:
quadrature instead of closed forms, eigenvalues instead of Cholesky,
hand-rolled conjugate gradients instead of library solves, direct
samplers instead of population dynamics.
"""

import numpy as np
from scipy.integrate import quad


def truncated_gaussian_second_moment(sigma, c):
    """E[g^2 1(|g| <= c)] for g ~ N(0, sigma^2) by adaptive quadrature."""

    def integrand(x):
        return x * x * np.exp(-0.5 * (x / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))

    value, err = quad(integrand, -c, c, epsabs=1e-13, epsrel=1e-13)
    assert err < 1e-11
    return value


def logdet_via_eigenvalues(matrix):
    """log det through a dense eigen-decomposition."""
    return float(np.sum(np.log(np.linalg.eigvalsh(matrix))))


def conjugate_gradient_solve(matrix, rhs, tol=1e-14, max_iter=10_000):
    """Plain conjugate gradients for SPD systems; no library solver."""
    x = np.zeros_like(rhs)
    r = rhs - matrix @ x
    d = r.copy()
    rr = float(r @ r)
    for _ in range(max_iter):
        if np.sqrt(rr) < tol * np.linalg.norm(rhs):
            break
        ad = matrix @ d
        alpha = rr / float(d @ ad)
        x += alpha * d
        r -= alpha * ad
        rr_new = float(r @ r)
        d = r + (rr_new / rr) * d
        rr = rr_new
    return x


def p1_inverse_diagonal(model):
    """For arity 1 the matrix is diagonal: entry i is 1/(1 + 2b sum g_k^2)."""
    acc = np.zeros(model.n_sites)
    np.add.at(acc, model.sites[:, 0], model.weights[:, 0] ** 2)
    return 1.0 / (1.0 + 2.0 * model.params.beta * acc)


def partition_function_mc(model, n_draws, rng, chunk=500_000):
    """Brute-force free energy: (1/N) log E_eta exp(-H(sigma)).

    Averages exp(-H) over standard Gaussian draws in chunks; returns the
    estimate and a delta-method standard error of (1/N) log(mean).
    """
    n = model.n_sites
    beta, h = model.params.beta, model.params.h
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_draws:
        take = min(chunk, n_draws - done)
        sigma = rng.standard_normal((take, n))
        energy = np.zeros(take)
        for row, wrow in zip(model.sites, model.weights):
            energy += beta * (sigma[:, row] @ wrow) ** 2
        weights_exp = np.exp(-energy + h * sigma.sum(axis=1))
        total += float(weights_exp.sum())
        total_sq += float((weights_exp**2).sum())
        done += take
    mean = total / n_draws
    var = total_sq / n_draws - mean * mean
    se_mean = np.sqrt(max(var, 0.0) / n_draws)
    return np.log(mean) / n, se_mean / mean / n


def direct_p1_variance_sampler(rate, beta, spec, n, rng):
    """Sample (1 + 2b sum_{k<=Poisson(rate)} z_k^2)^{-1} directly."""
    from quadglass.disorder import _sample_shape

    counts = rng.poisson(rate, size=n)
    owner = np.repeat(np.arange(n), counts)
    zeta = _sample_shape(spec, (int(counts.sum()),), rng)
    sums = np.bincount(owner, weights=zeta**2, minlength=n)
    return 1.0 / (1.0 + 2.0 * beta * sums)


def direct_conjugate_from_zero_sampler(rate, beta, spec, p, n, rng):
    """Law of log(1 + sum_k z_k^2/(gamma + sum_r x_r^2)) for Y = 0 input."""
    from quadglass.disorder import _sample_shape

    gamma = 1.0 / (2.0 * beta)
    counts = rng.poisson(rate, size=n)
    total = int(counts.sum())
    owner = np.repeat(np.arange(n), counts)
    zeta = _sample_shape(spec, (total,), rng)
    xi = _sample_shape(spec, (total, p - 1), rng)
    denom = gamma + np.sum(xi**2, axis=1)
    return np.log1p(np.bincount(owner, weights=zeta**2 / denom, minlength=n))


def rademacher_contraction_series(alpha, p, beta, q, l_max=60):
    """Truncated Poisson series for the contraction factor, +-1 weights.

    With unit weights chi_R = R, so the expectation is
    sum_l (l/(gamma+l))^q * l * (p-1) * e^{-ap} (ap)^l / l!.
    """
    from math import exp, factorial

    gamma = 1.0 / (2.0 * beta)
    lam = alpha * p
    return sum(
        (l / (gamma + l)) ** q * l * (p - 1) * exp(-lam) * lam**l / factorial(l)
        for l in range(1, l_max + 1)
    )


def balanced_edge_term(pop_values, params, spec, n_mc, rng):
    """Edge-term oracle with balanced (stratified-index) resampling.

    Every population entry is used equally often, permuted, instead of
    iid index draws; the target expectation over the empirical law is
    identical.  Returns (mean, se).
    """
    from quadglass.disorder import _sample_shape

    p = params.p
    size = pop_values.size
    need = n_mc * p
    reps = -(-need // size)
    idx = rng.permuted(np.tile(np.arange(size), reps))[:need].reshape(n_mc, p)
    zeta = _sample_shape(spec, (n_mc, p), rng)
    samples = np.log1p(2.0 * params.beta * np.sum(zeta**2 * pop_values[idx], axis=1))
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(n_mc))


def lstsq_loglog(xs, ys):
    """Log-log straight line by an explicit least-squares solve."""
    design = np.column_stack([np.log(np.asarray(xs, float)), np.ones(len(xs))])
    coef, *_ = np.linalg.lstsq(design, np.log(np.asarray(ys, float)), rcond=None)
    return float(coef[0]), float(coef[1])


def w1_via_cdf_area(x, y):
    """W1 as the area between empirical CDFs over merged breakpoints."""
    x = np.sort(np.asarray(x, float))
    y = np.sort(np.asarray(y, float))
    grid = np.sort(np.concatenate([x, y]))
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    return float(np.sum(np.abs(fx - fy)[:-1] * np.diff(grid)))


def poisson_uniform_p_zero(lam):
    """P(index = 0) for the uniform-index construction: series form."""
    from math import exp

    term, total = 1.0, 0.0
    for k in range(1, 200):
        term *= lam / k
        total += term
    return exp(-lam) / lam * total
