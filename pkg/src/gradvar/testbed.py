"""Benchmark oracle catalog with analytic metadata.

Each catalog entry pairs a first-order oracle with ground truth (minimizer,
optimal value, Lipschitz constant, local subgradient-variation constants at
tabulated radii) so algorithm guarantees and structural inequalities can be
checked against known answers.

Subgradient selections at nondifferentiable points are fixed and documented
per function:

* staircase: slope ``i/K`` on the left-open interval ``((i-1)/K, i/K]``,
  zero for ``x1 <= 0``, one for ``x1 > 1``;
* shifted absolute value: the kink returns the maximum-norm element
  ``sign(x1) * e1``;
* quadratic growth: the unit-sphere boundary takes the interior branch
  (zero vector);
* max-of-linear: smallest active row index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .core import Oracle, Vec, as_vec, eval_many

__all__ = [
    "BenchFunction",
    "make_staircase",
    "make_shifted_abs",
    "make_quadratic_growth",
    "make_max_of_linear",
    "make_smooth_quadratic",
    "make_linear",
    "default_staircase_pieces",
    "REGISTRY",
    "build_function",
    "catalog_names",
]


@dataclass(frozen=True)
class BenchFunction:
    """Oracle plus analytic metadata used by tests and the harness.

    ``variation_table`` holds (radius, constant) pairs bounding the maximum
    local variation of the subgradient at that radius; ``variation_fn`` is the
    closed form behind those entries when one exists.
    """

    oracle: Oracle
    name: str
    dim: int
    convex: bool
    minimizer: Vec | None = None
    f_star: float | None = None
    lipschitz_M: float | None = None
    variation_table: tuple[tuple[float, float], ...] = ()
    variation_fn: Callable[[float], float] | None = None
    # Analytic facts about the ball-averaged function, when available:
    # smoothed_offset(r) = f_r(x) - f(x) whenever the offset is constant in x,
    # smoothed_grad(x, r) = exact gradient of f_r.
    smoothed_offset: Callable[[float], float] | None = None
    smoothed_grad: Callable[[Vec, float], Vec] | None = None
    piece_count: int | None = None

    def __post_init__(self):
        if self.minimizer is not None:
            object.__setattr__(self, "minimizer", as_vec(self.minimizer))
            if self.f_star is None:
                raise ValueError("minimizer given without f_star")
            val, _ = self.oracle.eval(self.minimizer)
            if abs(val - self.f_star) > 1e-12:
                raise ValueError(
                    f"{self.name}: oracle value at minimizer is {val}, "
                    f"metadata says {self.f_star}"
                )

    def eval(self, x: Vec) -> tuple[float, Vec]:
        return self.oracle.eval(x)

    def variation_at(self, r: float) -> float:
        """Constant of maximum local subgradient variation at radius r."""
        if self.variation_fn is not None:
            return float(self.variation_fn(r))
        feasible = [c for (rr, c) in self.variation_table if rr >= r - 1e-12]
        if not feasible:
            raise ValueError(f"{self.name}: no tabulated variation constant covers r={r}")
        return min(feasible)


# ---------------------------------------------------------------------------
# Staircase: piecewise linear in x1, slope climbing 0 -> 1 in 1/K increments.


class _StaircaseOracle:
    def __init__(self, d: int, pieces: int):
        self.dim = d
        self.pieces = pieces
        k = pieces
        self._slopes = np.arange(k + 1) / k  # slope of piece i
        self._offsets = np.arange(k + 1) * (np.arange(k + 1) - 1) / (2.0 * k * k)

    def _value(self, x1):
        # max_i slope_i * x1 - offset_i; pieces meet at x1 = (i-1)/K.
        # Adding 0.0 normalizes -0.0 from the flat piece.
        return np.max(np.multiply.outer(x1, self._slopes) - self._offsets, axis=-1) + 0.0

    def _slope(self, x1):
        k = self.pieces
        idx = np.ceil(np.asarray(x1) * k)
        return np.clip(idx, 0.0, k) / k * (np.asarray(x1) > 0)

    def eval(self, x: Vec) -> tuple[float, Vec]:
        g = np.zeros(self.dim)
        g[0] = float(self._slope(x[0]))
        return float(self._value(x[0])), g

    def eval_batch(self, points: Vec) -> tuple[Vec, Vec]:
        vals = self._value(points[:, 0])
        grads = np.zeros_like(points)
        grads[:, 0] = self._slope(points[:, 0])
        return vals, grads


def default_staircase_pieces(d: int) -> int:
    """Piece count ceil(sqrt(d / (2 ln 2d))) matching the worst-case construction."""
    return max(1, math.ceil(math.sqrt(d / (2.0 * math.log(2.0 * d)))))


def _staircase_variation(pieces: int) -> Callable[[float], float]:
    def variation(r: float) -> float:
        # A half-open window of length r crosses at most ceil(rK) of the K
        # slope jumps (1/K each); the full slope range is [0, 1].
        return min(1.0, math.ceil(r * pieces - 1e-12) / pieces)

    return variation


def make_staircase(d: int, pieces: int) -> BenchFunction:
    """Convex piecewise-linear ramp in x1 with K = ``pieces`` slope increments.

    1-Lipschitz, minimized (value 0) by any point with x1 <= 0; the maximum
    local variation constant at radius 1 equals 1 exactly.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if pieces < 1:
        raise ValueError(f"pieces must be >= 1, got {pieces}")
    return BenchFunction(
        oracle=_StaircaseOracle(d, pieces),
        name=f"staircase(d={d},K={pieces})",
        dim=d,
        convex=True,
        minimizer=np.zeros(d),
        f_star=0.0,
        lipschitz_M=1.0,
        variation_table=((1.0, 1.0), (2.0, 1.0)),
        variation_fn=_staircase_variation(pieces),
    )


# ---------------------------------------------------------------------------
# Shifted absolute value: flat plateau of half-width c/sqrt(d-1) around 0.


class _ShiftedAbsOracle:
    def __init__(self, d: int, threshold: float):
        self.dim = d
        self.threshold = threshold

    def eval(self, x: Vec) -> tuple[float, Vec]:
        x1 = float(x[0])
        val = max(0.0, abs(x1) - self.threshold)
        g = np.zeros(self.dim)
        if abs(x1) >= self.threshold:  # kink included: max-norm selection
            g[0] = 1.0 if x1 >= 0 else -1.0
        return val, g

    def eval_batch(self, points: Vec) -> tuple[Vec, Vec]:
        x1 = points[:, 0]
        vals = np.maximum(0.0, np.abs(x1) - self.threshold)
        grads = np.zeros_like(points)
        active = np.abs(x1) >= self.threshold
        grads[active, 0] = np.where(x1[active] >= 0, 1.0, -1.0)
        return vals, grads


def make_shifted_abs(d: int, c: float) -> BenchFunction:
    """|x1| shifted down by a plateau of half-width c/sqrt(d-1); convex, 1-Lipschitz.

    Subgradients jump between -e1, 0, +e1, so the maximum local variation is
    2 once the radius spans the plateau (r >= 2c/sqrt(d-1)) and 1 below that.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if not (1.0 <= c < math.sqrt(d - 1)):
        raise ValueError(f"require 1 <= c < sqrt(d-1), got c={c}, d={d}")
    tau = c / math.sqrt(d - 1)

    def variation(r: float) -> float:
        return 2.0 if r >= 2.0 * tau - 1e-12 else 1.0

    radii = sorted({2.0 * tau, 1.0, 2.0})
    return BenchFunction(
        oracle=_ShiftedAbsOracle(d, tau),
        name=f"shifted-abs(d={d},c={c})",
        dim=d,
        convex=True,
        minimizer=np.zeros(d),
        f_star=0.0,
        lipschitz_M=1.0,
        variation_table=tuple((r, variation(r)) for r in radii),
        variation_fn=variation,
    )


# ---------------------------------------------------------------------------
# Nonsmooth quadratic growth: flat unit ball, quadratic outside.


class _QuadraticGrowthOracle:
    def __init__(self, d: int):
        self.dim = d

    def eval(self, x: Vec) -> tuple[float, Vec]:
        nrm2 = float(x @ x)
        if nrm2 <= 1.0:
            return 0.0, np.zeros(self.dim)
        return 0.5 * nrm2 - 0.5, np.array(x, copy=True)

    def eval_batch(self, points: Vec) -> tuple[Vec, Vec]:
        nrm2 = np.einsum("ij,ij->i", points, points)
        outside = nrm2 > 1.0
        vals = np.where(outside, 0.5 * nrm2 - 0.5, 0.0)
        grads = np.where(outside[:, None], points, 0.0)
        return vals, grads


def make_quadratic_growth(d: int) -> BenchFunction:
    """Zero on the unit ball, (1/2)||x||^2 - 1/2 outside; convex, not Lipschitz.

    The gradient jumps from 0 to a vector of norm up to 1 + r across the unit
    sphere, so the maximum local variation constant at radius r is 1 + r.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")

    def variation(r: float) -> float:
        return 1.0 + r

    return BenchFunction(
        oracle=_QuadraticGrowthOracle(d),
        name=f"quadratic-growth(d={d})",
        dim=d,
        convex=True,
        minimizer=np.zeros(d),
        f_star=0.0,
        lipschitz_M=None,
        variation_table=((0.5, 1.5), (1.0, 2.0)),
        variation_fn=variation,
    )


# ---------------------------------------------------------------------------
# Maximum of finitely many affine pieces.


class _MaxOfLinearOracle:
    def __init__(self, A: Vec, b: Vec):
        self.A = A
        self.b = b
        self.dim = A.shape[1]

    def eval(self, x: Vec) -> tuple[float, Vec]:
        scores = self.A @ x - self.b
        i = int(np.argmax(scores))  # smallest index on ties
        return float(scores[i]), np.array(self.A[i], copy=True)

    def eval_batch(self, points: Vec) -> tuple[Vec, Vec]:
        scores = points @ self.A.T - self.b
        idx = np.argmax(scores, axis=1)
        return scores[np.arange(points.shape[0]), idx], self.A[idx].copy()


def make_max_of_linear(A, b) -> BenchFunction:
    """f(x) = max_i <a_i, x> - b_i with smallest-index tie-break."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = as_vec(b)
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
    if A.shape[0] < 1:
        raise ValueError("need at least one affine piece")
    m = float(np.max(np.linalg.norm(A, axis=1)))

    def variation(r: float) -> float:
        return 2.0 * m

    return BenchFunction(
        oracle=_MaxOfLinearOracle(A, b),
        name=f"max-of-linear(k={A.shape[0]},d={A.shape[1]})",
        dim=A.shape[1],
        convex=True,
        lipschitz_M=m,
        variation_table=((1.0, 2.0 * m), (2.0, 2.0 * m)),
        variation_fn=variation,
        piece_count=A.shape[0],
    )


def make_linear(c) -> BenchFunction:
    """Linear control case f(x) = <c, x>; ball averaging leaves it unchanged."""
    c = as_vec(c)
    bench = make_max_of_linear(c.reshape(1, -1), [0.0])
    return replace(
        bench,
        name=f"linear(d={c.shape[0]})",
        smoothed_offset=lambda r: 0.0,
        smoothed_grad=lambda x, r: np.array(c, copy=True),
    )


# ---------------------------------------------------------------------------
# Smooth quadratic control case with closed-form ball average.


class _SmoothQuadraticOracle:
    def __init__(self, d: int, curvature: float):
        self.dim = d
        self.curvature = curvature

    def eval(self, x: Vec) -> tuple[float, Vec]:
        return 0.5 * self.curvature * float(x @ x), self.curvature * x

    def eval_batch(self, points: Vec) -> tuple[Vec, Vec]:
        vals = 0.5 * self.curvature * np.einsum("ij,ij->i", points, points)
        return vals, self.curvature * points


def make_smooth_quadratic(d: int, curvature: float) -> BenchFunction:
    """f(x) = (curvature/2) ||x||^2.

    Ball averaging adds the constant curvature * r^2 * d / (2 (d + 2)) and
    leaves the gradient map unchanged, which makes this the control case for
    smoothing estimators.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if curvature <= 0:
        raise ValueError(f"curvature must be positive, got {curvature}")

    def variation(r: float) -> float:
        return curvature * r

    return BenchFunction(
        oracle=_SmoothQuadraticOracle(d, curvature),
        name=f"smooth-quadratic(d={d},c={curvature})",
        dim=d,
        convex=True,
        minimizer=np.zeros(d),
        f_star=0.0,
        lipschitz_M=None,
        variation_fn=variation,
        smoothed_offset=lambda r: curvature * r * r * d / (2.0 * (d + 2.0)),
        smoothed_grad=lambda x, r: curvature * np.asarray(x, dtype=np.float64),
    )


# ---------------------------------------------------------------------------
# Registry: catalog functions addressable by name + parameter map.


def _build_staircase(params: dict) -> BenchFunction:
    d = int(params["d"])
    pieces = int(params.get("pieces", default_staircase_pieces(d)))
    return make_staircase(d, pieces)


def _build_abs(params: dict) -> BenchFunction:
    d = int(params["d"])
    A = np.zeros((2, d))
    A[0, 0], A[1, 0] = 1.0, -1.0
    bench = make_max_of_linear(A, np.zeros(2))
    return replace(
        bench, name=f"abs(d={d})", minimizer=np.zeros(d), f_star=0.0
    )


def _build_linf(params: dict) -> BenchFunction:
    d = int(params["d"])
    A = np.vstack([np.eye(d), -np.eye(d)])
    bench = make_max_of_linear(A, np.zeros(2 * d))
    return replace(
        bench, name=f"linf(d={d})", minimizer=np.zeros(d), f_star=0.0
    )


_BUILDERS: dict[str, tuple[Callable[[dict], BenchFunction], set[str], str]] = {
    "staircase": (_build_staircase, {"d", "pieces"}, "ramp in x1; params d, pieces(optional)"),
    "shifted-abs": (
        lambda p: make_shifted_abs(int(p["d"]), float(p["c"])),
        {"d", "c"},
        "|x1| with flat plateau; params d, c",
    ),
    "quadratic-growth": (
        lambda p: make_quadratic_growth(int(p["d"])),
        {"d"},
        "flat unit ball, quadratic outside; params d",
    ),
    "max-of-linear": (
        lambda p: make_max_of_linear(p["A"], p["b"]),
        {"A", "b"},
        "max_i <a_i,x> - b_i; params A (k x d), b (k)",
    ),
    "smooth-quadratic": (
        lambda p: make_smooth_quadratic(int(p["d"]), float(p.get("curvature", 1.0))),
        {"d", "curvature"},
        "(curvature/2)||x||^2; params d, curvature(optional)",
    ),
    "linear": (lambda p: make_linear(p["c"]), {"c"}, "<c, x>; params c (length d)"),
    "abs": (_build_abs, {"d"}, "|x1| as two affine pieces; params d"),
    "linf": (_build_linf, {"d"}, "||x||_inf as 2d affine pieces; params d"),
}

REGISTRY = {name: doc for name, (_, _, doc) in _BUILDERS.items()}


def catalog_names() -> list[str]:
    return sorted(_BUILDERS)


def build_function(name: str, params: dict) -> BenchFunction:
    """Construct a catalog function from its registry name and parameter map."""
    if name not in _BUILDERS:
        raise KeyError(f"unknown function {name!r}; known: {', '.join(catalog_names())}")
    builder, allowed, _ = _BUILDERS[name]
    unknown = set(params) - allowed
    if unknown:
        raise ValueError(f"{name}: unknown parameters {sorted(unknown)}")
    return builder(params)
