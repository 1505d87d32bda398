"""Empirical regularity constants and structural-inequality checkers.

Two constants drive everything downstream:

* ``max_variation`` — the largest observed subgradient change across a move
  of length at most r.  Sampling can only exhibit pairs, so the report is an
  explicit lower bound on the underlying supremum.
* ``mean_oscillation`` — the largest (over probe points and a geometric
  grid of sphere radii rho in (0, r]) average distance between sphere-sampled
  subgradients and the smoothed gradient at the center.  The rho supremum is
  discretized, so this too is a lower estimate.

The checkers turn the toolkit's structural inequalities (upper quadratic
approximation, interpolation, smoothed-gradient Lipschitz bound) into
counted pass/fail sweeps over sampled point pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .core import Oracle, RngStream, Vec, ball_points, eval_many, sphere_points
from .smoothing import SmoothingConfig, ball_gradient_estimate

__all__ = [
    "VariationReport",
    "WidthReport",
    "CheckResult",
    "RadiusChoice",
    "estimate_max_variation",
    "estimate_mean_oscillation",
    "mean_width_mc",
    "mean_width_named",
    "sample_goldstein_cloud",
    "choose_radius",
    "check_upper_quadratic",
    "check_interpolation",
    "check_smoothed_gradient_lipschitz",
    "report_to_kv",
    "parse_kv",
]

# Sampling inside estimate_max_variation happens in fixed-size chunks so that
# runs with the same stream and different pair counts agree on their common
# prefix (nested sampling).
_CHUNK = 2048


@dataclass(frozen=True)
class VariationReport:
    r: float
    max_variation: float | None
    mean_oscillation: float | None
    mean_oscillation_stderr: float
    pairs_sampled: int
    rho_grid: tuple[float, ...]


@dataclass(frozen=True)
class WidthReport:
    width: float
    stderr: float
    set_descriptor: str


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    violations: int
    worst_margin: float
    trials: int


@dataclass(frozen=True)
class RadiusChoice:
    radius: float
    feasible: bool


def _chunk_dirs(gen: np.random.Generator, d: int) -> tuple[Vec, Vec]:
    """One chunk of ball points for centers and offsets, fixed call pattern."""
    def ball(raw: Vec, radii: Vec) -> Vec:
        norms = np.linalg.norm(raw, axis=1)
        zero = norms == 0.0
        if np.any(zero):  # probability zero; patch deterministically
            raw[zero, 0] = 1.0
            norms[zero] = 1.0
        return raw / norms[:, None] * ((1.0 - radii) ** (1.0 / d))[:, None]

    x_dir = ball(gen.standard_normal((_CHUNK, d)), gen.random(_CHUNK))
    u_dir = ball(gen.standard_normal((_CHUNK, d)), gen.random(_CHUNK))
    return x_dir, u_dir


def estimate_max_variation(
    oracle: Oracle,
    region_center: Vec,
    region_radius: float,
    r: float,
    n_pairs: int,
    rng: RngStream,
) -> VariationReport:
    """Sampled maximum of ||gamma(x + r u) - gamma(x)|| over a ball region.

    x is uniform in the ball of ``region_radius`` around ``region_center``
    and u is uniform in the unit ball.  The result is a lower bound on the
    supremum; it is nondecreasing in ``n_pairs`` for a fixed stream.
    """
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    if n_pairs < 1:
        raise ValueError(f"need at least one pair, got {n_pairs}")
    center = np.asarray(region_center, dtype=np.float64)
    d = oracle.dim
    gen = rng.generator()
    best = 0.0
    remaining = n_pairs
    while remaining > 0:
        x_dir, u_dir = _chunk_dirs(gen, d)
        take = min(remaining, _CHUNK)
        x = center + region_radius * x_dir[:take]
        _, g_x = eval_many(oracle, x)
        _, g_xu = eval_many(oracle, x + r * u_dir[:take])
        diffs = np.linalg.norm(g_xu - g_x, axis=1)
        best = max(best, float(np.max(diffs)))
        remaining -= take
    return VariationReport(
        r=r,
        max_variation=best,
        mean_oscillation=None,
        mean_oscillation_stderr=0.0,
        pairs_sampled=n_pairs,
        rho_grid=(),
    )


def estimate_mean_oscillation(
    oracle: Oracle,
    points: list[Vec],
    r: float,
    rho_grid_size: int = 8,
    n_per_rho: int = 2000,
    rng: RngStream = RngStream(0),
) -> VariationReport:
    """Largest sphere-averaged subgradient deviation from the smoothed gradient.

    For every probe point and every rho on a geometric grid (ratio 2) inside
    (0, r], averages ||gamma(x + u) - g_r(x)|| over sphere-rho samples u,
    where g_r(x) is a ball-gradient estimate with a 10x sample budget so the
    plug-in bias is second order.  Reports the maximum cell with the standard
    error of that cell's average.
    """
    if rho_grid_size < 1:
        raise ValueError(f"rho grid needs at least one point, got {rho_grid_size}")
    if not points:
        raise ValueError("need at least one probe point")
    rho_grid = tuple(r / (2.0**j) for j in range(rho_grid_size))
    best = -1.0
    best_stderr = 0.0
    for i, point in enumerate(points):
        x = np.asarray(point, dtype=np.float64)
        center_cfg = SmoothingConfig(r, 10 * n_per_rho, rng.child(2 * i))
        g_center = np.asarray(ball_gradient_estimate(oracle, x, center_cfg).value)
        gen = rng.child(2 * i + 1).generator()
        for rho in rho_grid:
            u = rho * sphere_points(oracle.dim, n_per_rho, gen)
            _, grads = eval_many(oracle, x + u)
            dev = np.linalg.norm(grads - g_center, axis=1)
            mean = float(np.add.reduce(dev) / n_per_rho)
            if mean > best:
                best = mean
                if n_per_rho > 1:
                    best_stderr = float(np.std(dev, ddof=1) / math.sqrt(n_per_rho))
                else:
                    best_stderr = 0.0
    return VariationReport(
        r=r,
        max_variation=None,
        mean_oscillation=best,
        mean_oscillation_stderr=best_stderr,
        pairs_sampled=len(points) * rho_grid_size * n_per_rho,
        rho_grid=rho_grid,
    )


# ---------------------------------------------------------------------------
# Mean width


def mean_width_mc(points, n: int, rng: RngStream) -> WidthReport:
    """Monte Carlo mean width of a point cloud.

    Averages, over uniform sphere directions u, the spread
    max_p <u, p> - min_p <u, p>; for a polytope given by its vertices each
    directional spread is exact.
    """
    cloud = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if cloud.shape[0] == 0:
        raise ValueError("point cloud is empty")
    d = cloud.shape[1]
    if cloud.shape[0] == 1:
        return WidthReport(width=0.0, stderr=0.0, set_descriptor="point-cloud")
    dirs = sphere_points(d, n, rng)
    proj = dirs @ cloud.T
    spreads = proj.max(axis=1) - proj.min(axis=1)
    width = float(np.add.reduce(spreads) / n)
    stderr = float(np.std(spreads, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return WidthReport(width=width, stderr=stderr, set_descriptor="point-cloud")


_NAMED_WIDTHS = {"unit-ball": 1.0}


def mean_width_named(name: str) -> WidthReport:
    """Exact mean width of a named body (currently the unit Euclidean ball)."""
    if name not in _NAMED_WIDTHS:
        raise KeyError(f"unknown body {name!r}; known: {sorted(_NAMED_WIDTHS)}")
    return WidthReport(width=_NAMED_WIDTHS[name], stderr=0.0, set_descriptor=name)


def sample_goldstein_cloud(
    oracle: Oracle, x: Vec, r: float, n: int, rng: RngStream
) -> Vec:
    """Subgradients at n ball-r perturbations of x.

    The cloud sits inside the radius-r Goldstein subdifferential at x, so
    feeding it to :func:`mean_width_mc` lower-bounds that set's mean width.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got {n}")
    x = np.asarray(x, dtype=np.float64)
    u = ball_points(oracle.dim, n, rng)
    _, grads = eval_many(oracle, x + r * u)
    return grads


# ---------------------------------------------------------------------------
# Smoothing-radius selection


def choose_radius(
    mode: str,
    eps: float,
    table: list[tuple[float, float]],
    dim: float | None = None,
    width_constant: float = 1.0,
) -> RadiusChoice:
    """Pick the largest tabulated radius whose smoothing error budget fits eps.

    ``table`` holds (radius, constant) pairs: the mean-oscillation constant
    for the ``avg-rule`` (feasible when r * const <= eps / 2) and the
    max-variation constant for the ``width-rule`` (feasible when
    r * const <= width_constant * eps * sqrt(dim / ln(dim)), the budget for
    subdifferential sets caught by a small-vertex polytope).  Falls back to
    the smallest tabulated radius, flagged infeasible, when nothing fits.
    """
    if not table:
        raise ValueError("radius table is empty")
    if mode == "avg-rule":
        threshold = eps / 2.0
    elif mode == "width-rule":
        if dim is None or dim <= 1.0:
            raise ValueError("width-rule needs dim > 1")
        threshold = width_constant * eps * math.sqrt(dim / math.log(dim))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    feasible = [r for (r, const) in table if r * const <= threshold + 1e-15]
    if feasible:
        return RadiusChoice(radius=max(feasible), feasible=True)
    return RadiusChoice(radius=min(r for r, _ in table), feasible=False)


# ---------------------------------------------------------------------------
# Structural inequality checkers


def _pair_arrays(pairs) -> tuple[Vec, Vec]:
    xs = np.atleast_2d(np.asarray([p[0] for p in pairs], dtype=np.float64))
    ys = np.atleast_2d(np.asarray([p[1] for p in pairs], dtype=np.float64))
    return xs, ys


def _rel_tol(fx: Vec, fy: Vec) -> Vec:
    return 1e-9 * np.maximum(1.0, np.maximum(np.abs(fx), np.abs(fy)))


def check_upper_quadratic(oracle: Oracle, pairs, r: float, max_var: float) -> CheckResult:
    """Check f(y) - f(x) - <g(x), y - x> against the two-regime upper bound.

    The bound is max_var * ||y - x|| for moves of length at most r and
    max_var * ||y - x|| + (max_var / 2r) * ||y - x||^2 beyond.  (Splitting a
    longer move into m = floor(dist/r) + 1 legs bounds the gap by
    max_var * dist * (m + 1) / 2, which yields the quadratic-plus-linear
    form; a pure quadratic is violated by a slope ladder spanning slightly
    more than r, so the linear term is not removable.)  The tolerance is
    relative so the check survives cancellation at large function values.
    """
    xs, ys = _pair_arrays(pairs)
    fx, gx = eval_many(oracle, xs)
    fy, _ = eval_many(oracle, ys)
    diff = ys - xs
    dist = np.linalg.norm(diff, axis=1)
    bregman = fy - fx - np.einsum("ij,ij->i", gx, diff)
    bound = np.where(
        dist <= r,
        max_var * dist,
        max_var * dist + max_var / (2.0 * r) * dist * dist,
    )
    margin = bound - bregman
    tol = _rel_tol(fx, fy)
    return CheckResult(
        check_id="upper-quadratic",
        violations=int(np.sum(margin < -tol)),
        worst_margin=float(np.min(margin)),
        trials=len(dist),
    )


def check_interpolation(oracle: Oracle, pairs, r: float, max_var: float) -> CheckResult:
    """Interpolation-style lower bound for convex oracles.

    Only pairs whose subgradients differ by more than ``max_var`` trigger the
    check:

        (r / 2 max_var) (||g(y) - g(x)|| - max_var)^2
            <= f(y) - f(x) - <g(x), y - x>.

    (Walking from y against g(y) - g(x), the directional slope can shed at
    most max_var per r of arc length, which gives the squared excess over
    one max_var; squaring the full gap instead fails on functions whose
    gradient jumps discontinuously, e.g. a flat region meeting a quadratic.)
    ``trials`` counts triggered pairs; the rest are vacuous.
    """
    xs, ys = _pair_arrays(pairs)
    fx, gx = eval_many(oracle, xs)
    fy, gy = eval_many(oracle, ys)
    gap = np.linalg.norm(gy - gx, axis=1)
    triggered = gap > max_var
    if not np.any(triggered):
        return CheckResult("interpolation", 0, math.inf, 0)
    xs, ys, fx, fy = xs[triggered], ys[triggered], fx[triggered], fy[triggered]
    gx, gap = gx[triggered], gap[triggered]
    bregman = fy - fx - np.einsum("ij,ij->i", gx, ys - xs)
    lhs = r / (2.0 * max_var) * (gap - max_var) ** 2
    margin = bregman - lhs
    tol = _rel_tol(fx, fy)
    return CheckResult(
        check_id="interpolation",
        violations=int(np.sum(margin < -tol)),
        worst_margin=float(np.min(margin)),
        trials=int(np.sum(triggered)),
    )


def check_smoothed_gradient_lipschitz(
    oracle: Oracle,
    pairs,
    r: float,
    mean_osc: float,
    max_var: float,
    d: int,
    samples: int = 4000,
    rng: RngStream = RngStream(0),
) -> CheckResult:
    """Statistical check that the smoothed gradient is Lipschitz.

    The modulus is min(mean_osc * d / r, sqrt(pi/2) * max_var * sqrt(d) / r);
    gradient estimates carry Monte Carlo noise, so four standard errors of
    slack are added to the right-hand side.
    """
    modulus = min(mean_osc * d / r, math.sqrt(math.pi / 2.0) * max_var * math.sqrt(d) / r)
    violations = 0
    worst = math.inf
    for i, (x, y) in enumerate(pairs):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        est_x = ball_gradient_estimate(oracle, x, SmoothingConfig(r, samples, rng.child(2 * i)))
        est_y = ball_gradient_estimate(oracle, y, SmoothingConfig(r, samples, rng.child(2 * i + 1)))
        lhs = float(np.linalg.norm(np.asarray(est_x.value) - np.asarray(est_y.value)))
        rhs = modulus * float(np.linalg.norm(x - y)) + 4.0 * (est_x.stderr + est_y.stderr)
        margin = rhs - lhs
        worst = min(worst, margin)
        if margin < 0:
            violations += 1
    return CheckResult(
        check_id="smoothed-gradient-lipschitz",
        violations=violations,
        worst_margin=worst,
        trials=len(pairs),
    )


# ---------------------------------------------------------------------------
# Line-oriented key=value serialization consumed by the harness


def report_to_kv(report) -> str:
    """Serialize a report dataclass to one key=value line per field."""
    lines = []
    for field in fields(report):
        value = getattr(report, field.name)
        if isinstance(value, float):
            text = f"{value:.17g}"
        elif isinstance(value, tuple):
            text = ",".join(f"{v:.17g}" for v in value)
        else:
            text = str(value)
        lines.append(f"{field.name}={text}")
    return "\n".join(lines) + "\n"


def parse_kv(text: str) -> dict[str, str]:
    """Parse a key=value block back into a string-valued dict."""
    out: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed key=value line: {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
