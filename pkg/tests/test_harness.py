import json
import os

import numpy as np
import pytest

from gradvar.cli import main as cli_main
from gradvar.harness import (
    ConfigError,
    RoundsReport,
    depth_comparison,
    estimate_constants,
    run_experiment,
    run_subgradient_baseline,
)
from gradvar.analysis import parse_kv
from gradvar.testbed import build_function


def base_config(tmp_path, **overrides):
    cfg = {
        "schema_version": 1,
        "experiment_id": "exp",
        "function": {"name": "smooth-quadratic", "params": {"d": 4, "curvature": 1.0}},
        "algorithm": {
            "name": "agd-exact",
            "params": {"eps": 0.05, "r": 1.0, "w": [0.0, 0.0, 0.0, 0.0]},
        },
        "seeds": [7],
        "budgets": {"iters": 120},
        "outputs": str(tmp_path / "out"),
        "x0": [1.0, 0.5, -0.5, 0.0],
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


# ---------------------------------------------------------------------------
# Validation


def test_rejects_unknown_keys(tmp_path):
    cfg = base_config(tmp_path)
    cfg["mystery"] = 1
    with pytest.raises(ConfigError):
        run_experiment(cfg)

    cfg = base_config(tmp_path)
    cfg["algorithm"]["params"]["bogus"] = True
    with pytest.raises(ConfigError):
        run_experiment(cfg)

    cfg = base_config(tmp_path)
    cfg["function"] = {"name": "smooth-quadratic", "params": {"d": 4}, "extra": 0}
    with pytest.raises(ConfigError):
        run_experiment(cfg)


def test_rejects_missing_function_and_bad_seeds(tmp_path):
    cfg = base_config(tmp_path)
    del cfg["function"]
    with pytest.raises(ConfigError):
        run_experiment(cfg)

    cfg = base_config(tmp_path, seeds=[])
    with pytest.raises(ConfigError):
        run_experiment(cfg)

    cfg = base_config(tmp_path, seeds=["a"])
    with pytest.raises(ConfigError):
        run_experiment(cfg)


def test_rejects_unknown_function_and_algorithm(tmp_path):
    cfg = base_config(tmp_path)
    cfg["function"]["name"] = "nope"
    with pytest.raises(ConfigError):
        run_experiment(cfg)

    cfg = base_config(tmp_path)
    cfg["algorithm"]["name"] = "sgd"
    with pytest.raises(ConfigError):
        run_experiment(cfg)


def test_x0_dimension_checked(tmp_path):
    cfg = base_config(tmp_path, x0=[1.0, 2.0])
    with pytest.raises(ConfigError):
        run_experiment(cfg)
    cfg = base_config(tmp_path, x0={"kind": "scaled-e1", "scale": 2.0})
    summaries = run_experiment(cfg, quiet=True)
    assert summaries[0]["iterations"] > 0


# ---------------------------------------------------------------------------
# run_experiment outputs


def test_agd_exact_end_to_end(tmp_path):
    cfg = base_config(tmp_path)
    summaries = run_experiment(cfg, quiet=True)
    assert len(summaries) == 1
    summary = summaries[0]
    out = tmp_path / "out"
    csv_path = out / "exp.seed7.csv"
    body = csv_path.read_text().splitlines()
    assert body[0] == "k,a_k,A_k,f_yk,gap_bound,E_s,E_b,E_v,oracle_calls_total,rounds_total,halvings"
    assert len(body) == 1 + summary["iterations"]
    # Certificate bound is honored by the actual gap.
    assert summary["final_gap"] <= summary["last_gap_bound"] + 1e-9
    assert (out / "exp.summary.jsonl").exists()
    manifest = json.loads((out / "exp.manifest.json").read_text())
    assert manifest["experiment_id"] == "exp"
    assert len(manifest["config_sha256"]) == 64


def test_rerun_is_byte_identical(tmp_path):
    cfg = base_config(
        tmp_path,
        algorithm={
            "name": "agd-smoothed",
            "params": {"eps": 0.1, "r": 0.3, "m": 4, "beta": 0.05},
        },
        budgets={"iters": 30},
    )
    run_experiment(cfg, quiet=True)
    first = (tmp_path / "out" / "exp.seed7.csv").read_bytes()
    run_experiment(cfg, quiet=True)
    second = (tmp_path / "out" / "exp.seed7.csv").read_bytes()
    assert first == second

    summary1 = (tmp_path / "out" / "exp.summary.jsonl").read_bytes()
    run_experiment(cfg, quiet=True)
    assert (tmp_path / "out" / "exp.summary.jsonl").read_bytes() == summary1


def test_ingd_experiment(tmp_path):
    cfg = base_config(
        tmp_path,
        function={"name": "quadratic-growth", "params": {"d": 5}},
        algorithm={
            "name": "ingd",
            "params": {"delta": 0.1, "eps": 0.1, "lipschitz": 3.0},
        },
        budgets={"iters": 2000},
        x0={"kind": "scaled-e1", "scale": 3.0},
        seeds=[1, 2],
    )
    summaries = run_experiment(cfg, quiet=True)
    assert all(s["converged"] for s in summaries)
    assert all(s["certificate_valid"] for s in summaries)
    body = (tmp_path / "out" / "exp.seed1.csv").read_text().splitlines()
    assert body[0] == "k,f_xk,g_norm,inner_len,descent,oracle_calls_total"


def test_baseline_experiment_round_bound(tmp_path):
    # From x0 = 1 on |x| with step eps/M^2 the classical bound is 100 rounds.
    cfg = base_config(
        tmp_path,
        function={"name": "abs", "params": {"d": 1}},
        algorithm={"name": "subgradient-baseline", "params": {"eps": 0.1}},
        budgets={"iters": 100_000},
        x0=[1.0],
    )
    summary = run_experiment(cfg, quiet=True)[0]
    assert summary["converged"]
    assert summary["rounds"] <= 100
    assert summary["rounds"] == summary["oracle_calls"]


def test_run_subgradient_baseline_requires_step_without_m():
    bench = build_function("quadratic-growth", {"d": 2})  # M unknown
    with pytest.raises(ConfigError):
        run_subgradient_baseline(bench, np.zeros(2), eps=0.1)


# ---------------------------------------------------------------------------
# depth-compare


def depth_config(tmp_path, m=32):
    return {
        "schema_version": 1,
        "experiment_id": "depth",
        "function": {"name": "linf", "params": {"d": 8}},
        "eps": 0.1,
        "x0": {"kind": "scaled-ones", "scale": 1.0},
        "seeds": [3],
        "budgets": {"iters": 400},
        "outputs": str(tmp_path / "out"),
        "smoothed": {"r": 0.15, "m": m, "beta": 0.02},
        "baseline": {},
    }


def test_depth_comparison_accounting(tmp_path):
    cfg = depth_config(tmp_path)
    smoothed, baseline = depth_comparison(cfg, quiet=True)
    assert isinstance(smoothed, RoundsReport)
    payload = json.loads((tmp_path / "out" / "depth.depth.json").read_text())
    per_seed = payload["per_seed"][0]
    # Reports reconcile exactly with per-seed counters.
    assert smoothed.sequential_rounds == per_seed["smoothed_rounds"]
    assert smoothed.total_oracle_calls == per_seed["smoothed_calls"]
    assert baseline.sequential_rounds == per_seed["baseline_rounds"]
    assert smoothed.total_oracle_calls == 32 * smoothed.sequential_rounds
    assert baseline.sequential_rounds == baseline.total_oracle_calls


def test_depth_comparison_batch_of_one(tmp_path):
    cfg = depth_config(tmp_path, m=1)
    smoothed, _ = depth_comparison(cfg, quiet=True)
    assert smoothed.sequential_rounds == smoothed.total_oracle_calls


def test_rounds_report_invariants():
    with pytest.raises(ValueError):
        RoundsReport(sequential_rounds=10, total_oracle_calls=5, queries_outside_unit_ball=0)
    with pytest.raises(ValueError):
        RoundsReport(sequential_rounds=1, total_oracle_calls=5, queries_outside_unit_ball=7)


# ---------------------------------------------------------------------------
# estimate-constants


def test_estimate_constants_kv_blocks(tmp_path):
    cfg = {
        "schema_version": 1,
        "experiment_id": "const",
        "function": {"name": "staircase", "params": {"d": 2, "pieces": 4}},
        "estimate": {
            "kind": "max-variation",
            "radii": [0.5, 1.0],
            "region_center": [0.5, 0.0],
            "region_radius": 1.5,
            "n_pairs": 5000,
        },
        "seeds": [5],
        "outputs": str(tmp_path / "out"),
    }
    path = estimate_constants(cfg, quiet=True)
    blocks = open(path).read().strip().split("\n\n")
    assert len(blocks) == 2
    first = parse_kv(blocks[0])
    assert first["kind"] == "max-variation"
    assert 0.0 < float(first["max_variation"]) <= 1.0


# ---------------------------------------------------------------------------
# CLI behavior


def test_cli_run_and_exit_codes(tmp_path, capsys):
    cfg = base_config(tmp_path, budgets={"iters": 20})
    path = write_config(tmp_path, cfg)
    assert cli_main(["run", path, "--quiet"]) == 0

    # Malformed config: missing function entirely; nothing is written.
    bad = base_config(tmp_path, outputs=str(tmp_path / "never"))
    del bad["function"]
    bad_path = write_config(tmp_path, bad, "bad.json")
    assert cli_main(["run", bad_path]) == 2
    assert not (tmp_path / "never").exists()

    # Bad algorithm params are rejected before any output is written.
    bad2 = base_config(tmp_path, outputs=str(tmp_path / "never2"))
    bad2["algorithm"] = {"name": "agd-exact", "params": {}}
    bad2_path = write_config(tmp_path, bad2, "bad2.json")
    assert cli_main(["run", bad2_path]) == 2
    assert not (tmp_path / "never2").exists()

    # Unreadable config path.
    assert cli_main(["run", str(tmp_path / "missing.json")]) == 2


def test_cli_seed_override_and_out(tmp_path):
    cfg = base_config(tmp_path, seeds=[1, 2, 3], budgets={"iters": 10})
    path = write_config(tmp_path, cfg)
    out2 = tmp_path / "elsewhere"
    assert cli_main(["run", path, "--seed-override", "9", "--out", str(out2), "--quiet"]) == 0
    files = sorted(os.listdir(out2))
    assert "exp.seed9.csv" in files
    assert not any("seed1" in f for f in files)


def test_cli_list_functions(capsys):
    assert cli_main(["list-functions"]) == 0
    out = capsys.readouterr().out
    assert "staircase" in out and "linf" in out


def test_cli_depth_and_estimate(tmp_path):
    path = write_config(tmp_path, depth_config(tmp_path, m=8), "depth.json")
    assert cli_main(["depth-compare", path, "--quiet"]) == 0
    est_cfg = {
        "schema_version": 1,
        "experiment_id": "c2",
        "function": {"name": "abs", "params": {"d": 3}},
        "estimate": {
            "kind": "goldstein-width",
            "radii": [1.0],
            "points": [[0.0, 0.0, 0.0]],
            "n": 4000,
        },
        "seeds": [1],
        "outputs": str(tmp_path / "out"),
    }
    path = write_config(tmp_path, est_cfg, "est.json")
    assert cli_main(["estimate-constants", path, "--quiet"]) == 0
    text = open(tmp_path / "out" / "c2.constants.txt").read()
    width = float(parse_kv(text)["width"])
    # Subgradient cloud of |x1| at the origin is {+-e1}; its mean width in
    # three dimensions is exactly 1.
    assert abs(width - 1.0) < 0.05
