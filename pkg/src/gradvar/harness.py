"""Experiment harness: schema-validated configs, seeded runs, CSV/JSONL outputs.

A config is flat JSON with a declared schema version; unknown keys are
rejected anywhere in the document before any computation starts.  Every run
writes, per seed, one trajectory CSV with fixed columns, plus one JSONL
summary line and a manifest recording the config hash and library version.
Reruns with identical config and seed produce byte-identical CSV bodies
(timestamps live only in the manifest).

Oracle accounting convention: ``total_oracle_calls`` counts evaluations the
algorithm consumes (gradient queries, line-search trials, descent tests);
``sequential_rounds`` counts dependent oracle interactions, where one
minibatch of any size is a single round.  Diagnostic evaluations used only
for reporting (objective values along the trajectory) are not charged.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .agd_plus import AgdRun, ScheduleConfig, SmoothedMode, run_agd
from .analysis import (
    estimate_max_variation,
    estimate_mean_oscillation,
    mean_width_mc,
    report_to_kv,
    sample_goldstein_cloud,
)
from .core import CountingOracle, RngStream, Vec, WholeSpace, as_vec
from .goldstein import IngdConfig, run_ingd, validate_certificate
from .testbed import BenchFunction, build_function, catalog_names

__all__ = [
    "ConfigError",
    "RoundsReport",
    "load_config",
    "run_experiment",
    "depth_comparison",
    "estimate_constants",
    "run_subgradient_baseline",
    "AGD_CSV_COLUMNS",
    "INGD_CSV_COLUMNS",
    "BASELINE_CSV_COLUMNS",
]

SCHEMA_VERSION = 1

AGD_CSV_COLUMNS = (
    "k,a_k,A_k,f_yk,gap_bound,E_s,E_b,E_v,oracle_calls_total,rounds_total,halvings"
)
INGD_CSV_COLUMNS = "k,f_xk,g_norm,inner_len,descent,oracle_calls_total"
BASELINE_CSV_COLUMNS = "k,f_xk,f_best,oracle_calls_total"


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class RoundsReport:
    """Sequential-depth accounting for one algorithm run."""

    sequential_rounds: int
    total_oracle_calls: int
    queries_outside_unit_ball: int

    def __post_init__(self):
        if self.total_oracle_calls < self.sequential_rounds:
            raise ValueError("total calls cannot be below sequential rounds")
        if self.queries_outside_unit_ball > self.total_oracle_calls:
            raise ValueError("outside-ball count cannot exceed total calls")


# ---------------------------------------------------------------------------
# Config parsing


def _require_keys(obj: dict, required: set[str], optional: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            cfg = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"{path}: schema_version must be {SCHEMA_VERSION}, got {cfg.get('schema_version')!r}"
        )
    return cfg


def _build_bench(cfg: dict) -> BenchFunction:
    fn = cfg["function"]
    _require_keys(fn, {"name"}, {"params"}, "function")
    name = fn["name"]
    if name not in catalog_names():
        raise ConfigError(f"unknown function {name!r}; see `gradvar list-functions`")
    try:
        return build_function(name, fn.get("params", {}))
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"function {name}: {exc}") from exc


def _resolve_x0(spec, dim: int) -> Vec:
    if isinstance(spec, list):
        x0 = as_vec(spec)
        if x0.shape[0] != dim:
            raise ConfigError(f"x0 has dimension {x0.shape[0]}, function needs {dim}")
        return x0
    if isinstance(spec, dict):
        _require_keys(spec, {"kind", "scale"}, set(), "x0")
        scale = float(spec["scale"])
        if spec["kind"] == "scaled-e1":
            x0 = np.zeros(dim)
            x0[0] = scale
            return x0
        if spec["kind"] == "scaled-ones":
            return np.full(dim, scale / math.sqrt(dim))
        raise ConfigError(f"x0.kind must be scaled-e1 or scaled-ones, got {spec['kind']!r}")
    raise ConfigError("x0 must be a list of floats or a kind/scale object")


def _validate_budgets(cfg: dict) -> tuple[int, int]:
    budgets = cfg.get("budgets", {})
    _require_keys(budgets, set(), {"iters", "oracle_calls"}, "budgets")
    iters = int(budgets.get("iters", 1000))
    calls = int(budgets.get("oracle_calls", 10_000_000))
    if iters < 1 or calls < 1:
        raise ConfigError("budgets must be positive")
    return iters, calls


def _format_float(x: float) -> str:
    return f"{x:.17g}"


def _write_atomic(path: str, body: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(body)
    os.replace(tmp, path)


def _config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_manifest(out_dir: str, cfg: dict) -> str:
    manifest = {
        "experiment_id": cfg["experiment_id"],
        "schema_version": SCHEMA_VERSION,
        "config_sha256": _config_hash(cfg),
        "library_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    path = os.path.join(out_dir, f"{cfg['experiment_id']}.manifest.json")
    _write_atomic(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# Subgradient baseline (textbook yardstick for the depth comparison)


@dataclass
class BaselineRun:
    rows: list[tuple[int, float, float, int]]  # k, f_x, f_best, calls
    best_f: float
    oracle_calls: int
    rounds: int
    outside_unit_ball: int
    converged: bool


def run_subgradient_baseline(
    func: BenchFunction,
    x0,
    eps: float,
    step: float | None = None,
    max_iters: int = 100_000,
    max_oracle_calls: int | None = None,
) -> BaselineRun:
    """Fixed-step subgradient descent, one oracle query per sequential round.

    The default step eps / M^2 makes the classical guarantee reach an eps gap
    within ceil(M^2 ||x0 - x*||^2 / eps^2) rounds; the run stops early once
    the metadata optimum certifies the gap.
    """
    if step is None:
        if func.lipschitz_M is None:
            raise ConfigError("baseline needs an explicit step when M is unknown")
        step = eps / func.lipschitz_M**2
    oracle = CountingOracle(func.oracle)
    x = as_vec(x0)
    best = math.inf
    rows: list[tuple[int, float, float, int]] = []
    converged = False
    for k in range(max_iters):
        if max_oracle_calls is not None and oracle.calls >= max_oracle_calls:
            break
        f_x, g = oracle.eval(x)
        best = min(best, f_x)
        rows.append((k, f_x, best, oracle.calls))
        if func.f_star is not None and best - func.f_star <= eps:
            converged = True
            break
        x = x - step * g
    return BaselineRun(
        rows=rows,
        best_f=best,
        oracle_calls=oracle.calls,
        rounds=oracle.rounds,
        outside_unit_ball=oracle.outside_unit_ball,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# run <config>


_TOP_KEYS_RUN = {"schema_version", "experiment_id", "function", "algorithm", "seeds",
                 "budgets", "outputs", "x0"}

_ALGO_PARAM_KEYS = {
    "agd-exact": ({"eps"}, {"r", "max_var", "schedule", "w", "stop_at_gap"}),
    "agd-smoothed": (
        {"eps", "r", "m"},
        {"beta", "lambda_r", "w", "ledger", "ledger_samples", "stop_at_gap"},
    ),
    "ingd": (
        {"delta", "eps", "lipschitz"},
        {"max_var", "failure_beta", "max_inner", "adaptive_p"},
    ),
    "subgradient-baseline": ({"eps"}, {"step"}),
}


def _validate_algo(name: str, params: dict) -> None:
    if name not in _ALGO_PARAM_KEYS:
        raise ConfigError(
            f"unknown algorithm {name!r}; expected one of {sorted(_ALGO_PARAM_KEYS)}"
        )
    required, optional = _ALGO_PARAM_KEYS[name]
    _require_keys(params, required, optional, f"{name} params")


def run_experiment(cfg: dict, out_dir: str | None = None, quiet: bool = False) -> list[dict]:
    """Execute one config across its seeds; returns the summary records.

    Writes per seed ``<id>.seed<seed>.csv``, plus ``<id>.summary.jsonl`` and
    ``<id>.manifest.json`` into the output directory.
    """
    _require_keys(cfg, _TOP_KEYS_RUN - {"budgets", "x0"}, {"budgets", "x0"}, "config")
    if not isinstance(cfg["experiment_id"], str) or not cfg["experiment_id"]:
        raise ConfigError("experiment_id must be a nonempty string")
    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds must be a nonempty list of integers")
    bench = _build_bench(cfg)
    iters, call_budget = _validate_budgets(cfg)
    algo = cfg["algorithm"]
    _require_keys(algo, {"name"}, {"params"}, "algorithm")
    params = algo.get("params", {})
    _validate_algo(algo["name"], params)  # reject before any output is written
    x0 = _resolve_x0(cfg.get("x0", {"kind": "scaled-e1", "scale": 1.0}), bench.dim)

    out = out_dir or cfg["outputs"]
    os.makedirs(out, exist_ok=True)
    _write_manifest(out, cfg)

    summaries = []
    for seed in seeds:
        body, summary = _run_one_seed(
            bench, algo["name"], params, x0, seed, iters, call_budget
        )
        csv_path = os.path.join(out, f"{cfg['experiment_id']}.seed{seed}.csv")
        _write_atomic(csv_path, body)
        summary.update(
            seed=seed,
            algorithm=algo["name"],
            function=bench.name,
            csv=os.path.basename(csv_path),
        )
        summaries.append(summary)
        if not quiet:
            gap = summary.get("final_gap")
            gap_text = "n/a" if gap is None else f"{gap:.3e}"
            print(
                f"seed {seed}: calls={summary['oracle_calls']} "
                f"rounds={summary['rounds']} gap={gap_text}"
            )

    lines = [json.dumps(s, sort_keys=True) for s in summaries]
    _write_atomic(
        os.path.join(out, f"{cfg['experiment_id']}.summary.jsonl"),
        "\n".join(lines) + "\n",
    )
    return summaries


def _run_one_seed(
    bench: BenchFunction,
    algo_name: str,
    params: dict,
    x0: Vec,
    seed: int,
    iters: int,
    call_budget: int,
) -> tuple[str, dict]:
    if algo_name == "agd-exact":
        return _run_agd_exact(bench, params, x0, iters, call_budget)
    if algo_name == "agd-smoothed":
        return _run_agd_smoothed(bench, params, x0, seed, iters, call_budget)
    if algo_name == "ingd":
        return _run_ingd_seed(bench, params, x0, seed, iters, call_budget)
    if algo_name == "subgradient-baseline":
        return _run_baseline_seed(bench, params, x0, iters, call_budget)
    raise ConfigError(
        f"unknown algorithm {algo_name!r}; expected agd-exact, agd-smoothed, "
        "ingd, or subgradient-baseline"
    )


def _agd_csv(run: AgdRun) -> str:
    lines = [AGD_CSV_COLUMNS]
    for row in run.rows:
        lines.append(
            ",".join(
                [
                    str(row.k),
                    _format_float(row.a),
                    _format_float(row.A),
                    _format_float(row.f_y),
                    _format_float(row.gap_bound),
                    _format_float(row.e_s),
                    _format_float(row.e_b),
                    _format_float(row.e_v),
                    str(row.oracle_calls),
                    str(row.rounds),
                    str(row.halvings),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _agd_summary(run: AgdRun, bench: BenchFunction) -> dict:
    best = min((r.f_y for r in run.rows), default=math.inf)
    summary = {
        "final_f": run.rows[-1].f_y if run.rows else math.nan,
        "best_f": best,
        "final_gap": (best - bench.f_star) if bench.f_star is not None else None,
        "oracle_calls": run.oracle_calls,
        "rounds": run.rounds,
        "queries_outside_unit_ball": run.outside_unit_ball,
        "converged": run.converged,
        "budget_exhausted": run.budget_exhausted,
        "iterations": len(run.rows),
    }
    if run.certificates:
        summary["last_gap_bound"] = run.certificates[-1].gap_bound
        summary["last_rhs_bound"] = run.certificates[-1].rhs_bound
    return summary


def _run_agd_exact(bench, params, x0, iters, call_budget):
    eps = float(params["eps"])
    r = float(params.get("r", eps))
    max_var = float(params.get("max_var", bench.variation_at(r)))
    schedule = ScheduleConfig(
        mode=params.get("schedule", "deterministic"), eps=eps, r=r, max_var=max_var
    )
    w = as_vec(params["w"]) if "w" in params else None
    run = run_agd(
        bench,
        WholeSpace(bench.dim),
        x0,
        schedule,
        mode="exact",
        iters=iters,
        w=w,
        max_oracle_calls=call_budget,
        stop_gap=eps if params.get("stop_at_gap") else None,
    )
    return _agd_csv(run), _agd_summary(run, bench)


def _run_agd_smoothed(bench, params, x0, seed, iters, call_budget):
    eps = float(params["eps"])
    schedule = ScheduleConfig(
        mode="stochastic-beta",
        eps=eps,
        beta=float(params["beta"]) if "beta" in params else None,
        lambda_r=float(params["lambda_r"]) if "lambda_r" in params else None,
    )
    w = as_vec(params["w"]) if "w" in params else None
    run = run_agd(
        bench,
        WholeSpace(bench.dim),
        x0,
        schedule,
        mode=SmoothedMode(r=float(params["r"]), m=int(params["m"])),
        iters=iters,
        w=w,
        rng=RngStream(seed),
        track_ledger=bool(params.get("ledger", False)),
        ledger_samples=int(params.get("ledger_samples", 2000)),
        max_oracle_calls=call_budget,
        stop_gap=eps if params.get("stop_at_gap") else None,
    )
    return _agd_csv(run), _agd_summary(run, bench)


def _run_ingd_seed(bench, params, x0, seed, iters, call_budget):
    delta = float(params["delta"])
    cfg = IngdConfig(
        delta=delta,
        eps=float(params["eps"]),
        lipschitz=float(params["lipschitz"]),
        max_var=float(params.get("max_var", bench.variation_at(2.0 * delta))),
        rng=RngStream(seed),
        max_outer=iters,
        max_inner=int(params["max_inner"]) if "max_inner" in params else None,
        failure_beta=float(params.get("failure_beta", 0.1)),
        adaptive_p=bool(params.get("adaptive_p", False)),
        max_oracle_calls=call_budget,
    )
    result = run_ingd(bench, x0, cfg)
    lines = [INGD_CSV_COLUMNS]
    for row in result.rows:
        lines.append(
            ",".join(
                [
                    str(row.k),
                    _format_float(row.f_x),
                    _format_float(row.g_norm),
                    str(row.inner_len),
                    str(int(row.descent)),
                    str(row.oracle_calls),
                ]
            )
        )
    cert = result.certificate
    cert_valid = False
    if result.converged:
        try:
            validate_certificate(bench, cert, delta, cfg.eps)
            cert_valid = True
        except AssertionError:
            cert_valid = False
    summary = {
        "final_f": result.rows[-1].f_x if result.rows else math.nan,
        "final_gap": None,
        "oracle_calls": cert.total_oracle_calls,
        "rounds": cert.total_oracle_calls,  # strictly sequential method
        "queries_outside_unit_ball": 0,
        "converged": result.converged,
        "certificate_valid": cert_valid,
        "descent_steps": cert.descent_steps,
        "g_out_norm": float(np.linalg.norm(cert.g_out)),
    }
    if bench.f_star is not None and result.rows:
        summary["final_gap"] = result.rows[-1].f_x - bench.f_star
    return "\n".join(lines) + "\n", summary


def _run_baseline_seed(bench, params, x0, iters, call_budget):
    run = run_subgradient_baseline(
        bench,
        x0,
        eps=float(params["eps"]),
        step=float(params["step"]) if "step" in params else None,
        max_iters=iters,
        max_oracle_calls=call_budget,
    )
    lines = [BASELINE_CSV_COLUMNS]
    for k, f_x, f_best, calls in run.rows:
        lines.append(
            ",".join([str(k), _format_float(f_x), _format_float(f_best), str(calls)])
        )
    summary = {
        "final_f": run.rows[-1][1] if run.rows else math.nan,
        "best_f": run.best_f,
        "final_gap": (run.best_f - bench.f_star) if bench.f_star is not None else None,
        "oracle_calls": run.oracle_calls,
        "rounds": run.rounds,
        "queries_outside_unit_ball": run.outside_unit_ball,
        "converged": run.converged,
    }
    return "\n".join(lines) + "\n", summary


# ---------------------------------------------------------------------------
# depth-compare <config>


_TOP_KEYS_DEPTH = {
    "schema_version", "experiment_id", "function", "eps", "x0", "seeds",
    "budgets", "outputs", "smoothed", "baseline",
}


def depth_comparison(
    cfg: dict, out_dir: str | None = None, quiet: bool = False
) -> tuple[RoundsReport, RoundsReport]:
    """Sequential rounds vs total queries: minibatched smoothed runs against
    the subgradient baseline on the same function, accuracy, and start point.

    Returns the aggregated (smoothed, baseline) reports and writes
    ``<id>.depth.json`` with per-seed details and the rounds ratio.
    """
    _require_keys(cfg, _TOP_KEYS_DEPTH - {"budgets", "baseline"}, {"budgets", "baseline"}, "config")
    bench = _build_bench(cfg)
    if bench.f_star is None:
        raise ConfigError("depth comparison needs a function with known optimum")
    eps = float(cfg["eps"])
    x0 = _resolve_x0(cfg["x0"], bench.dim)
    iters, call_budget = _validate_budgets(cfg)
    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("seeds must be a nonempty list")

    sm = cfg["smoothed"]
    _require_keys(sm, {"r", "m"}, {"beta", "lambda_r"}, "smoothed")
    base = cfg.get("baseline", {})
    _require_keys(base, set(), {"step"}, "baseline")

    per_seed = []
    totals = {"sm": [0, 0, 0], "bl": [0, 0, 0]}
    for seed in seeds:
        schedule = ScheduleConfig(
            mode="stochastic-beta",
            eps=eps,
            beta=float(sm["beta"]) if "beta" in sm else None,
            lambda_r=float(sm["lambda_r"]) if "lambda_r" in sm else None,
        )
        run = run_agd(
            bench,
            WholeSpace(bench.dim),
            x0,
            schedule,
            mode=SmoothedMode(r=float(sm["r"]), m=int(sm["m"])),
            iters=iters,
            rng=RngStream(seed),
            track_ledger=False,
            max_oracle_calls=call_budget,
            stop_gap=eps,
        )
        best_sm = min((r.f_y for r in run.rows), default=math.inf)
        bl = run_subgradient_baseline(
            bench,
            x0,
            eps=eps,
            step=float(base["step"]) if "step" in base else None,
            max_iters=iters,
            max_oracle_calls=call_budget,
        )
        per_seed.append(
            {
                "seed": seed,
                "smoothed_rounds": run.rounds,
                "smoothed_calls": run.oracle_calls,
                "smoothed_outside_unit_ball": run.outside_unit_ball,
                "smoothed_gap": best_sm - bench.f_star,
                "baseline_rounds": bl.rounds,
                "baseline_calls": bl.oracle_calls,
                "baseline_gap": bl.best_f - bench.f_star,
            }
        )
        totals["sm"][0] += run.rounds
        totals["sm"][1] += run.oracle_calls
        totals["sm"][2] += run.outside_unit_ball
        totals["bl"][0] += bl.rounds
        totals["bl"][1] += bl.oracle_calls
        totals["bl"][2] += bl.outside_unit_ball

    smoothed_report = RoundsReport(*totals["sm"])
    baseline_report = RoundsReport(*totals["bl"])
    ratio = (
        baseline_report.sequential_rounds / smoothed_report.sequential_rounds
        if smoothed_report.sequential_rounds
        else math.inf
    )
    out = out_dir or cfg["outputs"]
    os.makedirs(out, exist_ok=True)
    _write_manifest(out, cfg)
    payload = {
        "experiment_id": cfg["experiment_id"],
        "eps": eps,
        "per_seed": per_seed,
        "smoothed": smoothed_report.__dict__,
        "baseline": baseline_report.__dict__,
        "rounds_ratio_baseline_over_smoothed": ratio,
    }
    _write_atomic(
        os.path.join(out, f"{cfg['experiment_id']}.depth.json"),
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
    )
    if not quiet:
        print(
            f"rounds: smoothed={smoothed_report.sequential_rounds} "
            f"baseline={baseline_report.sequential_rounds} ratio={ratio:.2f}"
        )
    return smoothed_report, baseline_report


# ---------------------------------------------------------------------------
# estimate-constants <config>


_TOP_KEYS_EST = {
    "schema_version", "experiment_id", "function", "estimate", "seeds", "outputs",
}


def estimate_constants(cfg: dict, out_dir: str | None = None, quiet: bool = False) -> str:
    """Estimate regularity constants over a list of radii; writes kv blocks.

    The output text file holds one key=value block per radius, blocks
    separated by blank lines, in the line-oriented format the plotting tools
    consume.
    """
    _require_keys(cfg, _TOP_KEYS_EST, set(), "config")
    bench = _build_bench(cfg)
    est = cfg["estimate"]
    _require_keys(
        est,
        {"kind", "radii"},
        {"region_center", "region_radius", "n_pairs", "points", "rho_grid_size",
         "n_per_rho", "n"},
        "estimate",
    )
    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("seeds must be a nonempty list")
    rng = RngStream(int(seeds[0]))
    radii = [float(r) for r in est["radii"]]
    if not radii:
        raise ConfigError("estimate.radii must be nonempty")

    blocks = []
    for i, r in enumerate(radii):
        kind = est["kind"]
        if kind == "max-variation":
            center = as_vec(est.get("region_center", [0.0] * bench.dim))
            report = estimate_max_variation(
                bench.oracle,
                center,
                float(est.get("region_radius", 1.0)),
                r,
                int(est.get("n_pairs", 20_000)),
                rng.child(i),
            )
        elif kind == "mean-oscillation":
            points = [as_vec(p) for p in est.get("points", [[0.0] * bench.dim])]
            report = estimate_mean_oscillation(
                bench.oracle,
                points,
                r,
                rho_grid_size=int(est.get("rho_grid_size", 8)),
                n_per_rho=int(est.get("n_per_rho", 2000)),
                rng=rng.child(i),
            )
        elif kind == "goldstein-width":
            points = [as_vec(p) for p in est.get("points", [[0.0] * bench.dim])]
            cloud = sample_goldstein_cloud(
                bench.oracle, points[0], r, int(est.get("n", 4000)), rng.child(2 * i)
            )
            report = mean_width_mc(cloud, int(est.get("n", 4000)), rng.child(2 * i + 1))
        else:
            raise ConfigError(f"unknown estimate kind {kind!r}")
        block = f"function={bench.name}\nkind={kind}\nradius={_format_float(r)}\n"
        block += report_to_kv(report)
        blocks.append(block)

    out = out_dir or cfg["outputs"]
    os.makedirs(out, exist_ok=True)
    _write_manifest(out, cfg)
    path = os.path.join(out, f"{cfg['experiment_id']}.constants.txt")
    _write_atomic(path, "\n".join(blocks))
    if not quiet:
        print(f"wrote {path}")
    return path
