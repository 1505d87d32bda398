"""Figure renderers for the four report kinds.

* ``convergence`` — objective values and the gap-certificate bound per
  iteration, from a trajectory CSV.
* ``ledger`` — the three per-iteration error terms as stacked traces.
* ``depth`` — sequential rounds of the smoothed method vs the subgradient
  baseline, one bar pair per target accuracy, from depth JSON reports.
* ``constants-profile`` — estimated regularity constants against the radius,
  from constants key=value blocks.

Inputs are the files the experiment harness writes; a referenced column that
does not exist fails loudly with the available columns listed.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["FigureSpec", "SpecError", "render", "FIGURE_KINDS"]

FIGURE_KINDS = ("convergence", "ledger", "depth", "constants-profile")

# Pinned style so reruns produce visually identical figures.
_RC = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


class SpecError(ValueError):
    """Invalid figure spec or input file (CLI exit code 2)."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    log_x: bool = False
    log_y: bool = False
    f_star: float | None = None
    title: str = ""

    @staticmethod
    def from_json(path: str) -> "FigureSpec":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise SpecError(f"{path}: figure spec must be an object")
        allowed = {"kind", "inputs", "input", "output", "log_x", "log_y", "f_star", "title"}
        unknown = set(raw) - allowed
        if unknown:
            raise SpecError(f"{path}: unknown keys {sorted(unknown)}")
        if "kind" not in raw or "output" not in raw:
            raise SpecError(f"{path}: spec needs 'kind' and 'output'")
        inputs = raw.get("inputs", [raw["input"]] if "input" in raw else [])
        if isinstance(inputs, str):
            inputs = [inputs]
        if not inputs:
            raise SpecError(f"{path}: spec needs at least one input file")
        spec = FigureSpec(
            kind=raw["kind"],
            inputs=tuple(inputs),
            output=raw["output"],
            log_x=bool(raw.get("log_x", False)),
            log_y=bool(raw.get("log_y", False)),
            f_star=float(raw["f_star"]) if "f_star" in raw else None,
            title=str(raw.get("title", "")),
        )
        if spec.kind not in FIGURE_KINDS:
            raise SpecError(f"unknown figure kind {spec.kind!r}; expected one of {FIGURE_KINDS}")
        return spec


def _read_csv_columns(path: str, columns: list[str]) -> dict[str, list[float]]:
    if not os.path.exists(path):
        raise SpecError(f"input file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise SpecError(
                f"{path}: missing columns {missing}; available: {header}"
            )
        out: dict[str, list[float]] = {c: [] for c in columns}
        for row in reader:
            for c in columns:
                out[c].append(float(row[c]))
    return out


def _parse_kv_blocks(path: str) -> list[dict[str, str]]:
    if not os.path.exists(path):
        raise SpecError(f"input file not found: {path}")
    blocks: list[dict[str, str]] = []
    current: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                if current:
                    blocks.append(current)
                    current = {}
                continue
            if "=" not in line:
                raise SpecError(f"{path}: malformed key=value line {line!r}")
            key, value = line.split("=", 1)
            current[key.strip()] = value.strip()
    if current:
        blocks.append(current)
    if not blocks:
        raise SpecError(f"{path}: no key=value blocks found")
    return blocks


def _finite(xs: list[float], ys: list[float]) -> tuple[list[float], list[float]]:
    keep = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
    return [x for x, _ in keep], [y for _, y in keep]


def _apply_axes(ax, spec: FigureSpec) -> None:
    if spec.log_x:
        ax.set_xscale("log")
    if spec.log_y:
        ax.set_yscale("log")
    if spec.title:
        ax.set_title(spec.title)


def _render_convergence(spec: FigureSpec, ax) -> None:
    data = _read_csv_columns(spec.inputs[0], ["k", "f_yk", "gap_bound"])
    offset = spec.f_star if spec.f_star is not None else 0.0
    values = [v - offset for v in data["f_yk"]]
    label = "f(y_k) - f*" if spec.f_star is not None else "f(y_k)"
    ax.plot(data["k"], values, label=label, lw=1.5)
    ks, bounds = _finite(data["k"], data["gap_bound"])
    if ks:
        ax.plot(ks, bounds, label="certificate bound", lw=1.2, ls="--")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective gap" if spec.f_star is not None else "objective")
    ax.legend()


def _render_ledger(spec: FigureSpec, fig) -> None:
    data = _read_csv_columns(spec.inputs[0], ["k", "E_s", "E_b", "E_v"])
    axes = fig.subplots(3, 1, sharex=True)
    for ax, column in zip(axes, ("E_s", "E_b", "E_v")):
        ks, vals = _finite(data["k"], data[column])
        ax.plot(ks, vals, lw=1.2)
        ax.set_ylabel(column)
        if spec.log_x:
            ax.set_xscale("log")
    axes[-1].set_xlabel("iteration")
    if spec.title:
        axes[0].set_title(spec.title)


def _render_depth(spec: FigureSpec, ax) -> None:
    entries = []
    for path in spec.inputs:
        if not os.path.exists(path):
            raise SpecError(f"input file not found: {path}")
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
        for key in ("eps", "smoothed", "baseline"):
            if key not in payload:
                raise SpecError(f"{path}: depth report missing {key!r}")
        entries.append(
            (
                payload["eps"],
                payload["smoothed"]["sequential_rounds"],
                payload["baseline"]["sequential_rounds"],
            )
        )
    entries.sort()
    positions = range(len(entries))
    width = 0.38
    ax.bar(
        [p - width / 2 for p in positions],
        [e[1] for e in entries],
        width,
        label="smoothed (minibatched)",
    )
    ax.bar(
        [p + width / 2 for p in positions],
        [e[2] for e in entries],
        width,
        label="subgradient baseline",
    )
    ax.set_xticks(list(positions))
    ax.set_xticklabels([f"{e[0]:g}" for e in entries])
    ax.set_xlabel("target accuracy")
    ax.set_ylabel("sequential rounds")
    ax.legend()


def _render_constants_profile(spec: FigureSpec, ax) -> None:
    series: dict[str, list[tuple[float, float]]] = {}
    for path in spec.inputs:
        for block in _parse_kv_blocks(path):
            if "radius" not in block:
                raise SpecError(f"{path}: constants block missing 'radius'")
            radius = float(block["radius"])
            for column in ("max_variation", "mean_oscillation", "width"):
                value = block.get(column)
                if value not in (None, "None"):
                    series.setdefault(column, []).append((radius, float(value)))
    if not series:
        raise SpecError("no constant estimates found in the inputs")
    for name, points in sorted(series.items()):
        points.sort()
        ax.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=name)
    ax.set_xlabel("radius")
    ax.set_ylabel("estimated constant")
    ax.legend()


def render(spec: FigureSpec) -> str:
    """Render one figure to ``spec.output``; returns the output path."""
    with plt.rc_context(_RC):
        fig = plt.figure()
        try:
            if spec.kind == "ledger":
                _render_ledger(spec, fig)
            else:
                ax = fig.subplots()
                if spec.kind == "convergence":
                    _render_convergence(spec, ax)
                elif spec.kind == "depth":
                    _render_depth(spec, ax)
                else:
                    _render_constants_profile(spec, ax)
                _apply_axes(ax, spec)
            fig.tight_layout()
            out_dir = os.path.dirname(spec.output)
            if out_dir:
                os.makedirs(out_dir, exist_ok=True)
            fig.savefig(spec.output)
        finally:
            plt.close(fig)
    return spec.output
