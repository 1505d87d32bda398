"""Vectors, feasible sets, reproducible sampling, and the first-order oracle contract.

Everything downstream treats an oracle as a black box returning a value and a
deterministic subgradient selection at a query point.  Randomness is always
routed through :class:`RngStream` so that identical (seed, stream_id) pairs
reproduce identical sample sequences regardless of platform or evaluation
order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, TypeAlias, runtime_checkable

import numpy as np
from numpy.typing import NDArray

Vec: TypeAlias = NDArray[np.float64]

__all__ = [
    "Vec",
    "RngStream",
    "Oracle",
    "CountingOracle",
    "FeasibleSet",
    "WholeSpace",
    "EuclideanBall",
    "AxisBox",
    "project",
    "as_vec",
    "eval_many",
    "sphere_points",
    "ball_points",
    "sample_unit_sphere",
    "sample_unit_ball",
    "sample_segment",
]

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One round of splitmix64; used to derive child stream ids."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by (seed, stream_id).

    Backed by Philox, so streams with distinct ids are statistically
    independent and a stream's output never depends on how sibling streams
    were consumed.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        """Derive a reproducible sub-stream; children with distinct indices differ."""
        mixed = _splitmix64((self.stream_id ^ _splitmix64(index & _MASK64)) & _MASK64)
        return RngStream(self.seed, mixed)


def as_vec(x) -> Vec:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def _resolve(rng: "RngStream | np.random.Generator") -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


# ---------------------------------------------------------------------------
# Oracles


@runtime_checkable
class Oracle(Protocol):
    """First-order black box: value and a deterministic subgradient selection.

    The selection must be a function of the query point alone (same point,
    same vector); for convex members of the catalog it lies in the
    subdifferential at the point.
    """

    dim: int

    def eval(self, x: Vec) -> tuple[float, Vec]: ...


def eval_many(oracle: Oracle, points: Vec) -> tuple[Vec, Vec]:
    """Evaluate an oracle at each row of ``points``.

    Uses the oracle's vectorized ``eval_batch`` when available, otherwise
    loops.  Returns (values (n,), subgradients (n, d)).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    batch = getattr(oracle, "eval_batch", None)
    if batch is not None:
        vals, grads = batch(pts)
        return np.asarray(vals, dtype=np.float64), np.asarray(grads, dtype=np.float64)
    vals = np.empty(pts.shape[0])
    grads = np.empty_like(pts)
    for i in range(pts.shape[0]):
        vals[i], grads[i] = oracle.eval(pts[i])
    return vals, grads


class CountingOracle:
    """Wraps an oracle and counts evaluations (one eval = one oracle call).

    ``rounds`` counts sequential interactions: a batched evaluation of any
    size is one round, matching the convention that queries inside one batch
    may be issued in parallel.  Query points outside the unit Euclidean ball
    are tallied separately for the harness's depth reports.
    """

    def __init__(self, inner: Oracle):
        self.inner = inner
        self.dim = inner.dim
        self.calls = 0
        self.rounds = 0
        self.outside_unit_ball = 0

    def eval(self, x: Vec) -> tuple[float, Vec]:
        self.calls += 1
        self.rounds += 1
        if float(np.linalg.norm(x)) > 1.0:
            self.outside_unit_ball += 1
        return self.inner.eval(x)

    def eval_batch(self, points: Vec) -> tuple[Vec, Vec]:
        pts = np.atleast_2d(points)
        self.calls += pts.shape[0]
        self.rounds += 1
        self.outside_unit_ball += int(np.sum(np.linalg.norm(pts, axis=1) > 1.0))
        return eval_many(self.inner, pts)


# ---------------------------------------------------------------------------
# Feasible sets (closed, convex, nonempty; projection single-valued)


@dataclass(frozen=True)
class WholeSpace:
    dim: int

    def project(self, x: Vec) -> Vec:
        if x.shape != (self.dim,):
            raise ValueError(f"dimension mismatch: set dim {self.dim}, point {x.shape}")
        return np.array(x, copy=True)

    def contains(self, x: Vec, tol: float = 1e-12) -> bool:
        return x.shape == (self.dim,)


@dataclass(frozen=True)
class EuclideanBall:
    center: Vec
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vec(self.center))
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, x: Vec) -> Vec:
        if x.shape != self.center.shape:
            raise ValueError("dimension mismatch between ball and point")
        offset = x - self.center
        nrm = float(np.linalg.norm(offset))
        if nrm <= self.radius:
            return np.array(x, copy=True)
        return self.center + offset * (self.radius / nrm)

    def contains(self, x: Vec, tol: float = 1e-12) -> bool:
        return float(np.linalg.norm(x - self.center)) <= self.radius + tol


@dataclass(frozen=True)
class AxisBox:
    lower: Vec
    upper: Vec

    def __post_init__(self):
        lo, hi = as_vec(self.lower), as_vec(self.upper)
        if lo.shape != hi.shape:
            raise ValueError("box bounds must share a shape")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def project(self, x: Vec) -> Vec:
        if x.shape != self.lower.shape:
            raise ValueError("dimension mismatch between box and point")
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: Vec, tol: float = 1e-12) -> bool:
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


FeasibleSet: TypeAlias = "WholeSpace | EuclideanBall | AxisBox"


def project(feasible: FeasibleSet, x: Vec) -> Vec:
    """Euclidean projection onto a feasible set (idempotent, nonexpansive)."""
    return feasible.project(np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# Uniform sampling on spheres, balls, and segments


def sphere_points(d: int, n: int, rng: RngStream | np.random.Generator) -> Vec:
    """n i.i.d. points uniform on the unit sphere in R^d, unit norm exactly.

    Gaussian direction normalized; the (probability-zero) zero vector is
    resampled.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    gen = _resolve(rng)
    g = gen.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        g[bad] = gen.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def ball_points(d: int, n: int, rng: RngStream | np.random.Generator) -> Vec:
    """n i.i.d. points uniform in the closed unit ball in R^d.

    Sphere direction scaled by U^(1/d) with U uniform on (0, 1]; the radial
    rescaling keeps the density uniform in any dimension.
    """
    gen = _resolve(rng)
    dirs = sphere_points(d, n, gen)
    radii = (1.0 - gen.random(n)) ** (1.0 / d)
    return dirs * radii[:, None]


def sample_unit_sphere(d: int, rng: RngStream | np.random.Generator) -> Vec:
    return sphere_points(d, 1, rng)[0]


def sample_unit_ball(d: int, rng: RngStream | np.random.Generator) -> Vec:
    return ball_points(d, 1, rng)[0]


def sample_segment(a: Vec, b: Vec, rng: RngStream | np.random.Generator) -> Vec:
    """Uniform point on the segment [a, b]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("segment endpoints must share a dimension")
    t = _resolve(rng).random()
    return a + t * (b - a)
