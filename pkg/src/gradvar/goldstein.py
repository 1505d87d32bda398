"""Interpolated normalized descent for nonsmooth, possibly nonconvex objectives.

The method maintains a vector g that is, by construction, a convex
combination of oracle subgradients sampled within delta of the current
iterate, i.e. a member of the Goldstein delta-subdifferential there.  Each
outer round either certifies ||g|| <= eps, takes a normalized descent step of
length delta (which must decrease f by at least (delta/2)||g||), or runs an
inner loop that interpolates g toward freshly sampled subgradients until its
norm contracts.

The returned certificate carries the full convex-combination witness, so
(delta, eps)-stationarity of the output can be re-verified from the oracle
alone, independent of the run.

Constant conventions: the interpolation weight is
lambda = min(1, ||g||^2 / (3 max_var^2)) and the contraction test uses
18 max_var^2 in its denominator, where max_var is the maximum local
subgradient variation constant at radius 2 delta (squared forms throughout,
for dimensional consistency).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import CountingOracle, Oracle, RngStream, Vec, as_vec, ball_points, sample_segment
from .testbed import BenchFunction

__all__ = [
    "IngdConfig",
    "IngdCertificate",
    "IngdRow",
    "IngdResult",
    "descent_test",
    "inner_update",
    "accept_candidate",
    "run_ingd",
    "validate_certificate",
    "query_complexity_scale",
    "default_inner_cap",
]


@dataclass(frozen=True)
class IngdConfig:
    """Parameters of one descent run.

    ``lipschitz`` is a local Lipschitz estimate M used only to set the
    perturbation scale 2^(-p) with p = max(1, ceil(log2(12 M / eps)));
    ``max_var`` is the local subgradient-variation constant at radius
    2 * delta.  ``failure_beta`` is the acceptable failure probability behind
    the default inner-loop cap.
    """

    delta: float
    eps: float
    lipschitz: float
    max_var: float
    rng: RngStream
    max_outer: int = 10_000
    max_inner: int | None = None
    failure_beta: float = 0.1
    adaptive_p: bool = False
    adapt_patience: int = 2_000
    max_oracle_calls: int | None = None
    p_extra: int = 0  # adaptive sharpening added on top of the base exponent

    def __post_init__(self):
        for name in ("delta", "eps", "lipschitz", "max_var"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.failure_beta < 1.0):
            raise ValueError("failure_beta must lie in (0, 1)")
        if self.max_outer < 1:
            raise ValueError("max_outer must be positive")

    @property
    def p(self) -> int:
        return max(1, math.ceil(math.log2(12.0 * self.lipschitz / self.eps))) + self.p_extra


def default_inner_cap(cfg: IngdConfig, descent_cap: int) -> int:
    """Inner-loop length (15 max_var^2 / eps^2) ln(K / beta) that makes all
    inner loops terminate with probability 1 - beta over K outer rounds."""
    return math.ceil(
        15.0 * cfg.max_var**2 / cfg.eps**2 * math.log(max(descent_cap, 2) / cfg.failure_beta)
    )


def query_complexity_scale(delta_f: float, cfg: IngdConfig) -> float:
    """High-probability oracle-query scale of the method:
    delta_f * max_var^2 / (eps^3 delta) * ln(delta_f / (eps delta beta))."""
    log_term = math.log(
        max(math.e, delta_f / (cfg.eps * cfg.delta * cfg.failure_beta))
    )
    return delta_f * cfg.max_var**2 / (cfg.eps**3 * cfg.delta) * log_term


@dataclass(frozen=True)
class IngdCertificate:
    """Convex-combination witness of near-stationarity at ``x_out``.

    ``witness`` lists (sample point, weight) pairs: the weights are
    nonnegative and sum to one, every point lies within delta of ``x_out``,
    and recombining oracle subgradients at the points reproduces ``g_out``.
    """

    x_out: Vec
    g_out: Vec
    witness: tuple[tuple[Vec, float], ...]
    descent_steps: int
    inner_loop_lengths: tuple[int, ...]
    total_oracle_calls: int


@dataclass(frozen=True)
class IngdRow:
    k: int
    f_x: float
    g_norm: float
    inner_len: int
    descent: bool
    oracle_calls: int


@dataclass
class IngdResult:
    certificate: IngdCertificate
    converged: bool
    rows: list[IngdRow] = field(default_factory=list)


def descent_test(
    oracle: Oracle, x: Vec, g: Vec, delta: float, f_x: float | None = None
) -> bool:
    """True iff moving delta along -g/||g|| decreases f by at least (delta/2)||g||.

    Costs one value query beyond f(x), which callers should cache and pass in.
    """
    g_norm = float(np.linalg.norm(g))
    if g_norm == 0.0:
        raise ValueError("descent test needs a nonzero direction")
    if f_x is None:
        f_x, _ = oracle.eval(x)
    f_step, _ = oracle.eval(x - delta * g / g_norm)
    return f_step - f_x <= -0.5 * delta * g_norm


def inner_update(
    oracle: Oracle, x: Vec, g: Vec, cfg: IngdConfig, rng: np.random.Generator
) -> tuple[Vec, Vec]:
    """One interpolation proposal: returns (candidate g, sampled witness point).

    Perturbs g inside a ball of radius 2^(-p), samples a point uniformly on
    the segment from x toward the perturbed normalized direction, and mixes
    the subgradient there into g with weight
    lambda = min(1, ||g||^2 / (3 max_var^2)).
    """
    g_norm2 = float(g @ g)
    h = g + (2.0 ** (-cfg.p)) * ball_points(oracle.dim, 1, rng)[0]
    h_norm = float(np.linalg.norm(h))
    if h_norm == 0.0:
        h, h_norm = g, math.sqrt(g_norm2)
    y = sample_segment(x, x - cfg.delta * h / h_norm, rng)
    _, u = oracle.eval(y)
    lam = min(1.0, g_norm2 / (3.0 * cfg.max_var**2))
    return g + lam * (u - g), y


def accept_candidate(g: Vec, g_tilde: Vec, max_var: float) -> bool:
    """Contraction test: accept when ||g~||^2 <= ||g||^2 - ||g||^4 / (18 max_var^2)
    or ||g~||^2 <= (3/4) ||g||^2."""
    n2 = float(g @ g)
    t2 = float(g_tilde @ g_tilde)
    return t2 <= n2 - n2 * n2 / (18.0 * max_var**2) or t2 <= 0.75 * n2


class _Witness:
    """Convex-combination bookkeeping for the maintained vector g."""

    def __init__(self, point: Vec):
        self.points: list[Vec] = [np.array(point, copy=True)]
        self.weights: list[float] = [1.0]

    def mix(self, point: Vec, lam: float) -> None:
        self.weights = [wt * (1.0 - lam) for wt in self.weights]
        self.points.append(np.array(point, copy=True))
        self.weights.append(lam)
        total = sum(self.weights)  # defensive renormalization against drift
        self.weights = [wt / total for wt in self.weights]

    def freeze(self) -> tuple[tuple[Vec, float], ...]:
        return tuple(zip((p.copy() for p in self.points), self.weights))


def run_ingd(func: BenchFunction | Oracle, x0, cfg: IngdConfig) -> IngdResult:
    """Run the method from x0 until a certificate is produced or budgets lapse.

    Each outer round starts from a fresh subgradient sampled in the
    delta-ball around the iterate; a budget-exhausted run returns the best
    current state flagged as unconverged (its ||g_out|| may exceed eps).
    """
    bench = func if isinstance(func, BenchFunction) else None
    oracle = CountingOracle(bench.oracle if bench is not None else func)
    x = as_vec(x0)
    gen = cfg.rng.generator()

    rows: list[IngdRow] = []
    inner_lengths: list[int] = []
    descent_steps = 0
    p_extra = 0  # adaptive perturbation sharpening

    g = np.zeros(oracle.dim)
    witness = _Witness(x)

    def certificate(converged: bool) -> IngdResult:
        cert = IngdCertificate(
            x_out=x.copy(),
            g_out=g.copy(),
            witness=witness.freeze(),
            descent_steps=descent_steps,
            inner_loop_lengths=tuple(inner_lengths),
            total_oracle_calls=oracle.calls,
        )
        return IngdResult(certificate=cert, converged=converged, rows=rows)

    inner_cap = cfg.max_inner
    if inner_cap is None:
        inner_cap = default_inner_cap(cfg, cfg.max_outer)

    f_x, _ = oracle.eval(x)
    for k in range(cfg.max_outer):
        u0 = x + cfg.delta * ball_points(oracle.dim, 1, gen)[0]
        _, g = oracle.eval(u0)
        witness = _Witness(u0)
        inner_this_round = 0

        while True:
            if cfg.max_oracle_calls is not None and oracle.calls >= cfg.max_oracle_calls:
                rows.append(IngdRow(k, f_x, float(np.linalg.norm(g)), inner_this_round, False, oracle.calls))
                return certificate(converged=False)
            g_norm = float(np.linalg.norm(g))
            if g_norm <= cfg.eps:
                rows.append(IngdRow(k, f_x, g_norm, inner_this_round, False, oracle.calls))
                return certificate(converged=True)
            # Descent test, inlined so the value at an accepted step is reused
            # as the next round's cached f(x).
            step_point = x - cfg.delta * g / g_norm
            f_step, _ = oracle.eval(step_point)
            if f_step - f_x <= -0.5 * cfg.delta * g_norm:
                x, f_x = step_point, f_step
                descent_steps += 1
                rows.append(IngdRow(k, f_x, g_norm, inner_this_round, True, oracle.calls))
                break
            # Inner interpolation loop.
            effective = _with_p(cfg, p_extra)
            attempts = 0
            while True:
                attempts += 1
                inner_this_round += 1
                g_tilde, y = inner_update(oracle, x, g, effective, gen)
                if accept_candidate(g, g_tilde, cfg.max_var):
                    lam = min(1.0, float(g @ g) / (3.0 * cfg.max_var**2))
                    witness.mix(y, lam)
                    g = g_tilde
                    inner_lengths.append(attempts)
                    break
                if cfg.adaptive_p and attempts % cfg.adapt_patience == 0:
                    p_extra += 1
                    effective = _with_p(cfg, p_extra)
                if attempts >= inner_cap:
                    inner_lengths.append(attempts)
                    rows.append(IngdRow(k, f_x, g_norm, inner_this_round, False, oracle.calls))
                    return certificate(converged=False)

    return certificate(converged=False)


def _with_p(cfg: IngdConfig, p_extra: int) -> IngdConfig:
    if p_extra == 0:
        return cfg
    return replace(cfg, p_extra=cfg.p_extra + p_extra)


def validate_certificate(
    func: BenchFunction | Oracle, cert: IngdCertificate, delta: float, eps: float
) -> None:
    """Re-verify a certificate from the oracle alone; raises on any failure.

    Checks the weights form a convex combination, every witness point lies
    within delta of the output, recombining fresh oracle subgradients at the
    witness points reproduces g_out to 1e-9, and ||g_out|| <= eps.
    """
    oracle = func.oracle if isinstance(func, BenchFunction) else func
    weights = np.array([wt for _, wt in cert.witness])
    if np.any(weights < -1e-12):
        raise AssertionError("negative witness weight")
    if abs(float(weights.sum()) - 1.0) > 1e-9:
        raise AssertionError(f"witness weights sum to {weights.sum()}, not 1")
    combo = np.zeros_like(cert.g_out)
    for point, wt in cert.witness:
        dist = float(np.linalg.norm(point - cert.x_out))
        if dist > delta + 1e-9:
            raise AssertionError(f"witness point at distance {dist} > delta={delta}")
        _, grad = oracle.eval(point)
        combo = combo + wt * grad
    drift = float(np.linalg.norm(combo - cert.g_out))
    if drift > 1e-9:
        raise AssertionError(f"witness recombination differs from g_out by {drift}")
    if float(np.linalg.norm(cert.g_out)) > eps + 1e-12:
        raise AssertionError("certificate norm exceeds eps")
