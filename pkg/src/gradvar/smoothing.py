"""Monte Carlo evaluation of the ball-averaged function and its gradient.

For a radius r, the smoothed function is the average of f over the radius-r
Euclidean ball around the query point.  Two unbiased gradient estimators are
provided: averaging subgradients at ball-perturbed points, and the sphere
(divergence-theorem) estimator (d/r) f(x + r u) u that needs values only.

Sphere-based estimators and the value estimator pair each direction u with
its antipode -u.  Symmetry keeps them unbiased, the pairing cancels the
dominant noise term, and for convex f it makes every pair's value
contribution at least f(x), so the estimated average never undershoots the
true function.  Reductions always run in fixed sample order, so results are
reproducible even if the underlying evaluations were done concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Oracle, RngStream, Vec, ball_points, eval_many, sphere_points

__all__ = [
    "SmoothingConfig",
    "Estimate",
    "smoothed_value",
    "ball_gradient_estimate",
    "stokes_gradient_estimate",
    "minibatch_gradient",
    "gradient_variance",
]


@dataclass(frozen=True)
class SmoothingConfig:
    r: float
    samples: int
    rng: RngStream

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"radius must be positive, got {self.r}")
        if self.samples < 1:
            raise ValueError(f"need at least one sample, got {self.samples}")


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate with its standard error and consumed sample count.

    ``samples`` equals the number of oracle evaluations behind ``value``;
    antithetic estimators round odd requests up to the next even count.
    """

    value: float | Vec
    stderr: float
    samples: int


def _mean_stderr(rows: np.ndarray) -> tuple[np.ndarray, float]:
    """Columnwise mean and aggregate standard error of the mean.

    For vector samples the stderr aggregates all coordinates:
    sqrt(sum_j Var(row_j) / n), an upper bound on each coordinate's own
    standard error.
    """
    n = rows.shape[0]
    mean = np.add.reduce(rows, axis=0) / n
    if n < 2:
        return mean, 0.0
    dev = rows - mean
    var_total = float(np.sum(dev * dev)) / (n - 1)
    return mean, float(np.sqrt(var_total / n))


def smoothed_value(oracle: Oracle, x: Vec, cfg: SmoothingConfig) -> Estimate:
    """Estimate the ball average of f at x from antithetic ball samples."""
    x = np.asarray(x, dtype=np.float64)
    pairs = (cfg.samples + 1) // 2
    u = ball_points(oracle.dim, pairs, cfg.rng)
    vals_plus, _ = eval_many(oracle, x + cfg.r * u)
    vals_minus, _ = eval_many(oracle, x - cfg.r * u)
    pair_means = 0.5 * (vals_plus + vals_minus)
    mean, stderr = _mean_stderr(pair_means[:, None])
    return Estimate(value=float(mean[0]), stderr=stderr, samples=2 * pairs)


def ball_gradient_estimate(oracle: Oracle, x: Vec, cfg: SmoothingConfig) -> Estimate:
    """Average subgradients at ball-perturbed points; unbiased for the smoothed gradient."""
    x = np.asarray(x, dtype=np.float64)
    u = ball_points(oracle.dim, cfg.samples, cfg.rng)
    _, grads = eval_many(oracle, x + cfg.r * u)
    mean, stderr = _mean_stderr(grads)
    return Estimate(value=mean, stderr=stderr, samples=cfg.samples)


def stokes_gradient_estimate(oracle: Oracle, x: Vec, cfg: SmoothingConfig) -> Estimate:
    """Sphere estimator (d/r) f(x + r u) u, values only, antithetic in u.

    Each antipodal pair contributes (d/r) u (f(x + r u) - f(x - r u)) / 2,
    which cancels the value-level noise that otherwise dominates the
    variance.
    """
    x = np.asarray(x, dtype=np.float64)
    d = oracle.dim
    pairs = (cfg.samples + 1) // 2
    u = sphere_points(d, pairs, cfg.rng)
    vals_plus, _ = eval_many(oracle, x + cfg.r * u)
    vals_minus, _ = eval_many(oracle, x - cfg.r * u)
    rows = (d / cfg.r) * u * (0.5 * (vals_plus - vals_minus))[:, None]
    mean, stderr = _mean_stderr(rows)
    return Estimate(value=mean, stderr=stderr, samples=2 * pairs)


def minibatch_gradient(
    oracle: Oracle, x: Vec, r: float, m: int, rng: RngStream | np.random.Generator
) -> Vec:
    """Mean of m ball-sample subgradients, reduced in draw order.

    A batch of one reproduces a single ball-gradient draw from the same
    stream; callers account the m evaluations as one parallel round.
    """
    if m < 1:
        raise ValueError(f"batch size must be >= 1, got {m}")
    x = np.asarray(x, dtype=np.float64)
    u = ball_points(oracle.dim, m, rng)
    _, grads = eval_many(oracle, x + r * u)
    return np.add.reduce(grads, axis=0) / m


def gradient_variance(oracle: Oracle, x: Vec, cfg: SmoothingConfig) -> Estimate:
    """Two-pass estimate of E ||gamma(x + r u) - grad f_r(x)||^2.

    The first pass pins the smoothed gradient with a 10x sample budget so the
    plug-in bias is second order; the second pass averages squared deviations
    over fresh samples and reports their standard error.
    """
    x = np.asarray(x, dtype=np.float64)
    center_cfg = SmoothingConfig(cfg.r, 10 * cfg.samples, cfg.rng.child(0))
    center = np.asarray(ball_gradient_estimate(oracle, x, center_cfg).value)
    u = ball_points(oracle.dim, cfg.samples, cfg.rng.child(1))
    _, grads = eval_many(oracle, x + cfg.r * u)
    sq = np.einsum("ij,ij->i", grads - center, grads - center)
    mean, stderr = _mean_stderr(sq[:, None])
    return Estimate(value=float(mean[0]), stderr=stderr, samples=cfg.samples)
