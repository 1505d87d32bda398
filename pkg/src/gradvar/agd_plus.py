"""Accelerated gradient method (AGD+ family) with an explicit error ledger.

The iteration keeps four points: the query point x_k, the averaged output
y_k, the dual-like accumulator z_k, and its projection v_k.  With weights
a_k and A_k = sum_{i<=k} a_i the update is

    x_k = (A_{k-1} y_{k-1} + a_k v_{k-1}) / A_k
    z_k = z_{k-1} - a_k g_k
    v_k = project(z_k)
    y_k = (A_{k-1} y_{k-1} + a_k v_k) / A_k

initialized by z_0 = x_0 - a_0 g_0, y_0 = v_0 = project(z_0).

Each iteration decomposes the progress bound into three exactly computable
error terms: a smoothness surplus E_s, a bias term E_b, and a variance term
E_v (the latter two vanish when g_k is the oracle's own subgradient at x_k).
Their running sum feeds a per-iteration gap certificate

    f(y_k) - f(w) <= G_k <= (||w - x_0||^2 / 2 + sum_i E_i) / A_k,

where G_k is the computable certificate and the right-hand side its
telescoped bound, and the per-step telescoping A_k G_k - A_{k-1} G_{k-1}
<= E_k is checked directly by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .core import CountingOracle, FeasibleSet, Oracle, RngStream, Vec, as_vec, project
from .smoothing import SmoothingConfig, ball_gradient_estimate, minibatch_gradient, smoothed_value
from .testbed import BenchFunction

__all__ = [
    "AgdState",
    "LedgerEntry",
    "ErrorLedger",
    "GapCertificate",
    "ScheduleConfig",
    "SmoothedMode",
    "AgdRow",
    "AgdRun",
    "initial_state",
    "propose_query",
    "agd_step",
    "det_step_size",
    "stochastic_step_size",
    "weak_smooth_radius",
    "smoothed_grad_lipschitz",
    "error_terms",
    "backtrack_step",
    "run_agd",
]


@dataclass(frozen=True)
class AgdState:
    """Iterate bundle after step k (k = -1 denotes the pre-run sentinel)."""

    k: int
    x: Vec
    y: Vec
    z: Vec
    v: Vec
    a: float
    A: float
    x0: Vec


@dataclass(frozen=True)
class LedgerEntry:
    k: int
    e_s: float
    e_b: float
    e_v: float
    # Standard errors when the terms come from Monte Carlo estimates of the
    # smoothed objective; zero in exact mode.
    e_s_stderr: float = 0.0
    e_b_stderr: float = 0.0
    e_v_stderr: float = 0.0

    @property
    def total(self) -> float:
        return self.e_s + self.e_b + self.e_v


@dataclass
class ErrorLedger:
    """Per-iteration error terms against a fixed reference point w."""

    w: Vec
    entries: list[LedgerEntry] = field(default_factory=list)

    def append(self, entry: LedgerEntry) -> None:
        self.entries.append(entry)

    @property
    def cumulative(self) -> float:
        return sum(e.total for e in self.entries)


@dataclass(frozen=True)
class GapCertificate:
    k: int
    gap_bound: float  # computable certificate G_k >= f(y_k) - f(w)
    rhs_bound: float  # telescoped bound (||w - x0||^2 / 2 + sum E_i) / A_k


@dataclass(frozen=True)
class ScheduleConfig:
    """Step-size policy.

    * ``deterministic``: a_k = min(eps / max_var^2, quadratic-growth root
      keeping a_k^2 / A_k <= r / max_var); needs eps, r, max_var.
    * ``backtracking``: propose twice the last accepted step and halve until
      the smoothness surplus passes E_s <= a eps / 2; needs eps, r, max_var
      for the initial proposal.
    * ``stochastic-beta``: keep a_k^2 / A_k = beta; needs beta (directly or
      via lambda_r = Lipschitz constant of the smoothed gradient).
    """

    mode: Literal["deterministic", "backtracking", "stochastic-beta"]
    eps: float
    r: float = 0.0
    max_var: float = 0.0
    lambda_r: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.mode in ("deterministic", "backtracking"):
            if self.r <= 0 or self.max_var <= 0:
                raise ValueError(f"{self.mode} schedule needs positive r and max_var")
        elif self.mode == "stochastic-beta":
            if (self.beta is None or self.beta <= 0) and (
                self.lambda_r is None or self.lambda_r <= 0
            ):
                raise ValueError("stochastic-beta schedule needs beta or lambda_r")
        else:
            raise ValueError(f"unknown schedule mode {self.mode!r}")

    def effective_beta(self) -> float:
        if self.beta is not None:
            return self.beta
        return 1.0 / float(self.lambda_r)


@dataclass(frozen=True)
class SmoothedMode:
    """Gradient mode using minibatched ball-sample subgradients at radius r."""

    r: float
    m: int

    def __post_init__(self):
        if self.r <= 0 or self.m < 1:
            raise ValueError("smoothed mode needs r > 0 and m >= 1")


@dataclass(frozen=True)
class AgdRow:
    k: int
    a: float
    A: float
    f_y: float
    gap_bound: float
    e_s: float
    e_b: float
    e_v: float
    oracle_calls: int
    rounds: int
    halvings: int


@dataclass
class AgdRun:
    rows: list[AgdRow]
    state: AgdState
    ledger: ErrorLedger | None
    certificates: list[GapCertificate]
    oracle_calls: int
    rounds: int
    outside_unit_ball: int
    converged: bool
    budget_exhausted: bool


# ---------------------------------------------------------------------------
# Single-step mechanics


def initial_state(x0, feasible: FeasibleSet) -> AgdState:
    x0 = as_vec(x0)
    return AgdState(k=-1, x=x0, y=x0, z=x0, v=project(feasible, x0), a=0.0, A=0.0, x0=x0)


def propose_query(state: AgdState, a_next: float) -> Vec:
    """Query point produced by taking step size ``a_next`` from ``state``."""
    A_new = state.A + a_next
    return (state.A * state.y + a_next * state.v) / A_new


def agd_step(state: AgdState, g: Vec, a: float, feasible: FeasibleSet) -> AgdState:
    """Advance one iteration; ``g`` must be the gradient used at the proposed query point."""
    if a <= 0:
        raise ValueError(f"step size must be positive, got {a}")
    g = np.asarray(g, dtype=np.float64)
    if g.shape != state.x.shape:
        raise ValueError("gradient dimension mismatch")
    A_new = state.A + a
    x_new = (state.A * state.y + a * state.v) / A_new
    z_new = state.z - a * g
    v_new = project(feasible, z_new)
    y_new = (state.A * state.y + a * v_new) / A_new
    # Internal identity: y_k = x_k + (a_k / A_k)(v_k - v_{k-1}).
    drift = np.linalg.norm(y_new - (x_new + (a / A_new) * (v_new - state.v)))
    if drift > 1e-9 * max(1.0, float(np.linalg.norm(y_new))):
        raise AssertionError(f"iterate identity violated by {drift}")
    return AgdState(
        k=state.k + 1, x=x_new, y=y_new, z=z_new, v=v_new, a=a, A=A_new, x0=state.x0
    )


def det_step_size(A_prev: float, eps: float, max_var: float, r: float) -> float:
    """Deterministic step rule: min of the target-accuracy cap and the root
    that keeps a_k^2 / A_k <= r / max_var."""
    if eps <= 0 or max_var <= 0 or r <= 0 or A_prev < 0:
        raise ValueError("det_step_size needs positive eps, max_var, r and A_prev >= 0")
    growth = (r / max_var) * (1.0 + math.sqrt(1.0 + 4.0 * A_prev * max_var / r)) / 2.0
    return min(eps / (max_var * max_var), growth)


def stochastic_step_size(k: int, A_prev: float, beta: float) -> float:
    """Step keeping a_k^2 / A_k = beta: a_0 = beta, later the positive root
    of a^2 = beta (A_prev + a)."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if k == 0:
        return beta
    return (beta + math.sqrt(beta * beta + 4.0 * beta * A_prev)) / 2.0


def weak_smooth_radius(M: float, kappa: float, D: float, eps: float) -> float:
    """Smoothing radius (eps^3 / (M^3 D^2))^(1 / (1 + 3 kappa)) for functions
    with kappa-Hoelder gradients."""
    if not (0.0 < kappa <= 1.0):
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    if min(M, D, eps) <= 0:
        raise ValueError("M, D, eps must be positive")
    return (eps**3 / (M**3 * D**2)) ** (1.0 / (1.0 + 3.0 * kappa))


def smoothed_grad_lipschitz(mean_osc: float, max_var: float, d: int, r: float) -> float:
    """Lipschitz constant of the smoothed gradient:
    min(mean_osc d / r, sqrt(pi/2) max_var sqrt(d) / r)."""
    return min(mean_osc * d / r, math.sqrt(math.pi / 2.0) * max_var * math.sqrt(d) / r)


def bias_variance_bounds(
    steps: list[float], mean_osc: float, max_var_r: float, max_var_2r: float
) -> dict[str, float]:
    """Both plug-in bounds on the expected cumulative bias+variance error.

    The projection argument bounds E[E_k^b + E_k^v] by a_k^2 mean_osc times a
    max-variation constant; the constant is taken at twice the smoothing
    radius in the general statement and at the radius itself in the tighter
    single-sample variant.  Returns both cumulative sums.
    """
    sq = sum(a * a for a in steps)
    return {
        "bound_at_2r": sq * mean_osc * max_var_2r,
        "bound_at_r": sq * mean_osc * max_var_r,
    }


def error_terms(
    f_y: float,
    f_x: float,
    grad_x: Vec,
    g_used: Vec,
    state: AgdState,
    w: Vec,
) -> tuple[float, float, float]:
    """Exact error terms of one completed step.

    ``grad_x`` is the objective's own (sub)gradient at the query point and
    ``g_used`` the vector actually fed to the update; they coincide in exact
    mode, making the bias and variance terms vanish identically.
    """
    diff = state.y - state.x
    e_s = state.A * (
        f_y
        - f_x
        - float(grad_x @ diff)
        - state.A / (2.0 * state.a**2) * float(diff @ diff)
    )
    e_b = state.a * float((g_used - grad_x) @ (w - state.x))
    e_v = state.a * float((grad_x - g_used) @ (state.v - state.x))
    return e_s, e_b, e_v


def backtrack_step(
    oracle: Oracle,
    state: AgdState,
    a_proposed: float,
    eps: float,
    feasible: FeasibleSet,
) -> tuple[float, int]:
    """Halve the proposed step until the smoothness surplus passes E_s <= a eps / 2.

    Returns the accepted step and the halving count; each trial costs one
    gradient evaluation at the trial query point and one value evaluation at
    the trial output point.
    """
    trial, halvings = _backtrack(oracle, state, a_proposed, eps, feasible)
    return trial.a, halvings


def _backtrack(
    oracle: Oracle,
    state: AgdState,
    a_proposed: float,
    eps: float,
    feasible: FeasibleSet,
) -> tuple["_Trial", int]:
    a = a_proposed
    halvings = 0
    while True:
        if a < 1e-300:
            raise RuntimeError("backtracking underflow: no acceptable step size")
        trial = _trial_step(oracle, state, a, feasible)
        if trial.e_s <= a * eps / 2.0 + 1e-12 * max(1.0, abs(trial.f_x)):
            return trial, halvings
        a *= 0.5
        halvings += 1


@dataclass(frozen=True)
class _Trial:
    a: float
    state: AgdState
    f_x: float
    grad_x: Vec
    f_y: float
    e_s: float


def _trial_step(oracle: Oracle, state: AgdState, a: float, feasible: FeasibleSet) -> _Trial:
    x_new = propose_query(state, a)
    f_x, grad_x = oracle.eval(x_new)
    new_state = agd_step(state, grad_x, a, feasible)
    f_y, _ = oracle.eval(new_state.y)
    e_s, _, _ = error_terms(f_y, f_x, grad_x, grad_x, new_state, new_state.x0)
    return _Trial(a=a, state=new_state, f_x=f_x, grad_x=grad_x, f_y=f_y, e_s=e_s)


# ---------------------------------------------------------------------------
# Full run


class _GapTracker:
    """Running sums behind the lazily evaluated gap certificate."""

    def __init__(self, w: Vec, x0: Vec):
        self.w = w
        self.x0 = x0
        self.sum_af = 0.0  # sum a_i f(x_i)
        self.sum_eb = 0.0  # sum E_i^b
        self.sum_ag = np.zeros_like(x0)  # sum a_i g_i
        self.sum_agx = 0.0  # sum a_i <g_i, x_i>
        self.sum_e = 0.0  # sum E_i
        self.w_dist2 = float((w - x0) @ (w - x0))

    def absorb(self, a: float, f_x: float, g_used: Vec, x: Vec, entry: LedgerEntry):
        self.sum_af += a * f_x
        self.sum_eb += entry.e_b
        self.sum_ag = self.sum_ag + a * g_used
        self.sum_agx += a * float(g_used @ x)
        self.sum_e += entry.total

    def certificate(self, state: AgdState, f_y: float) -> GapCertificate:
        A = state.A
        lower = (
            (self.sum_af + float(self.sum_ag @ state.v) - self.sum_agx) / A
            - self.sum_eb / A
            + float((state.v - self.x0) @ (state.v - self.x0)) / (2.0 * A)
            - self.w_dist2 / (2.0 * A)
        )
        gap_bound = f_y - lower
        rhs = (0.5 * self.w_dist2 + self.sum_e) / A
        return GapCertificate(k=state.k, gap_bound=gap_bound, rhs_bound=rhs)


def run_agd(
    func: BenchFunction | Oracle,
    feasible: FeasibleSet,
    x0,
    schedule: ScheduleConfig,
    mode: str | SmoothedMode = "exact",
    iters: int = 100,
    w: Vec | None = None,
    rng: RngStream | None = None,
    *,
    track_ledger: bool = True,
    ledger_samples: int = 2000,
    max_oracle_calls: int | None = None,
    stop_gap: float | None = None,
) -> AgdRun:
    """Run the accelerated method and record trajectory, ledger, and certificates.

    ``w`` is the fixed comparison point of the gap certificates (defaults to
    the catalog minimizer when available; without one, certificates are
    skipped and only objective values are reported).  In smoothed mode the
    oracle feeding the update is a minibatch of m ball-sample subgradients at
    radius r, counted as one parallel round per iteration, and the ledger's
    error terms are measured against Monte Carlo estimates of the smoothed
    objective using ``ledger_samples`` evaluations per estimate.
    """
    bench = func if isinstance(func, BenchFunction) else None
    raw_oracle = bench.oracle if bench is not None else func
    oracle = CountingOracle(raw_oracle)

    if w is None and bench is not None and bench.minimizer is not None:
        w = bench.minimizer
    w_vec = as_vec(w) if w is not None else None

    smoothed = isinstance(mode, SmoothedMode)
    if smoothed and rng is None:
        raise ValueError("smoothed mode needs an RngStream")
    if not smoothed and mode != "exact":
        raise ValueError(f"unknown gradient mode {mode!r}")

    state = initial_state(x0, feasible)
    ledger = ErrorLedger(w=w_vec if w_vec is not None else state.x0) if track_ledger else None
    tracker = _GapTracker(w_vec, state.x0) if w_vec is not None else None
    f_star = bench.f_star if bench is not None else None

    rows: list[AgdRow] = []
    certificates: list[GapCertificate] = []
    converged = False
    budget_exhausted = False
    prev_a: float | None = None

    for k in range(iters):
        if max_oracle_calls is not None and oracle.calls >= max_oracle_calls:
            budget_exhausted = True
            break

        halvings = 0
        pre_trial: _Trial | None = None
        if schedule.mode == "deterministic":
            a = det_step_size(state.A, schedule.eps, schedule.max_var, schedule.r)
        elif schedule.mode == "backtracking":
            proposal = (
                2.0 * prev_a
                if prev_a is not None
                else schedule.eps / (schedule.max_var**2)
            )
            pre_trial, halvings = _backtrack(oracle, state, proposal, schedule.eps, feasible)
            a = pre_trial.a
        else:
            a = stochastic_step_size(k, state.A, schedule.effective_beta())

        if smoothed:
            x_new = propose_query(state, a)
            g_used = minibatch_gradient(oracle, x_new, mode.r, mode.m, rng.child(k))
            new_state = agd_step(state, g_used, a, feasible)
            f_y, _ = raw_oracle.eval(new_state.y)
            entry = (
                _smoothed_ledger_entry(
                    raw_oracle,
                    new_state,
                    g_used,
                    ledger.w,
                    mode.r,
                    ledger_samples,
                    rng.child(10_000_019 + k),
                )
                if track_ledger
                else None
            )
        else:
            trial = pre_trial or _trial_step(oracle, state, a, feasible)
            new_state, f_y = trial.state, trial.f_y
            entry = (
                LedgerEntry(k=k, e_s=trial.e_s, e_b=0.0, e_v=0.0)
                if track_ledger
                else None
            )
            if tracker is not None:
                ref_entry = entry or LedgerEntry(k=k, e_s=trial.e_s, e_b=0.0, e_v=0.0)
                tracker.absorb(a, trial.f_x, trial.grad_x, new_state.x, ref_entry)
                certificates.append(tracker.certificate(new_state, f_y))

        if entry is not None and ledger is not None:
            ledger.append(entry)

        state = new_state
        prev_a = a
        rows.append(
            AgdRow(
                k=k,
                a=a,
                A=state.A,
                f_y=f_y,
                gap_bound=certificates[-1].gap_bound if (certificates and not smoothed) else math.nan,
                e_s=entry.e_s if entry else math.nan,
                e_b=entry.e_b if entry else math.nan,
                e_v=entry.e_v if entry else math.nan,
                oracle_calls=oracle.calls,
                rounds=oracle.rounds,
                halvings=halvings,
            )
        )

        if stop_gap is not None and f_star is not None and f_y - f_star <= stop_gap:
            converged = True
            break

    return AgdRun(
        rows=rows,
        state=state,
        ledger=ledger,
        certificates=certificates,
        oracle_calls=oracle.calls,
        rounds=oracle.rounds,
        outside_unit_ball=oracle.outside_unit_ball,
        converged=converged,
        budget_exhausted=budget_exhausted,
    )


def _smoothed_ledger_entry(
    raw_oracle: Oracle,
    state: AgdState,
    g_used: Vec,
    w: Vec,
    r: float,
    samples: int,
    rng: RngStream,
) -> LedgerEntry:
    """Error terms against the smoothed objective, with propagated noise."""
    est_fy = smoothed_value(raw_oracle, state.y, SmoothingConfig(r, samples, rng.child(0)))
    est_fx = smoothed_value(raw_oracle, state.x, SmoothingConfig(r, samples, rng.child(1)))
    est_g = ball_gradient_estimate(
        raw_oracle, state.x, SmoothingConfig(r, samples, rng.child(2))
    )
    grad_x = np.asarray(est_g.value)
    diff = state.y - state.x
    dist = float(np.linalg.norm(diff))
    e_s = state.A * (
        est_fy.value
        - est_fx.value
        - float(grad_x @ diff)
        - state.A / (2.0 * state.a**2) * float(diff @ diff)
    )
    e_b = state.a * float((g_used - grad_x) @ (w - state.x))
    e_v = state.a * float((grad_x - g_used) @ (state.v - state.x))
    return LedgerEntry(
        k=state.k,
        e_s=e_s,
        e_b=e_b,
        e_v=e_v,
        e_s_stderr=state.A * (est_fy.stderr + est_fx.stderr + dist * est_g.stderr),
        e_b_stderr=state.a * float(np.linalg.norm(w - state.x)) * est_g.stderr,
        e_v_stderr=state.a * float(np.linalg.norm(state.v - state.x)) * est_g.stderr,
    )
