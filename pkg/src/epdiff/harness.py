"""Experiment commands: conservation, wave-front runs, convergence,
reversibility, and per-step cost benchmarks.

Every command writes schema-stable CSV files (fixed column order, header row,
17 significant digits) plus a ``summary.json``.  All numeric output except
the wall-clock column is byte-identical across reruns with the same
configuration and seed.
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, SchemeSelection
from .core import State
from .diagnostics import (
    RunRecord,
    convergence_study,
    fit_loglog_slope,
    invariant_stats,
    reversibility_test,
)
from .errors import ConfigError, NumericalFailureError
from .grid import GridSpec
from .profiles import FrontKind, WaveFrontSpec, default_spec, sine_profile, wavefront_profile
from .snapshots import write_snapshot
from .steppers import SchemeKind, integrate

__all__ = [
    "cmd_run",
    "cmd_conserve",
    "cmd_convergence",
    "cmd_reversibility",
    "cmd_bench",
    "run_command",
]

INVARIANTS_HEADER = "step,t,energy,momentum_x,momentum_y,corrector_iters,wall_seconds"

_FULL_SCALE_POINTS = 1025


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _front_spec(cfg: ExperimentConfig) -> WaveFrontSpec:
    kind = FrontKind(cfg.profile)
    return default_spec(
        kind,
        sigma=cfg.sigma,
        amplitude=cfg.amplitude,
        gaussian_cross_section=cfg.gaussian_cross_section,
    )


def _sigma_of(cfg: ExperimentConfig) -> float | None:
    if cfg.profile == "sine":
        return None
    return _front_spec(cfg).sigma


def _initial_state(cfg: ExperimentConfig, grid: GridSpec) -> State:
    if cfg.profile == "sine":
        return sine_profile(grid)
    return wavefront_profile(_front_spec(cfg), grid)


def _grid(cfg: ExperimentConfig, k: int | None = None, j: int | None = None) -> GridSpec:
    if cfg.full_scale and cfg.profile != "sine" and k is None:
        return GridSpec(_FULL_SCALE_POINTS, _FULL_SCALE_POINTS, cfg.alpha)
    return GridSpec(k or cfg.K, j or cfg.J, cfg.alpha)


def write_invariants_csv(path: Path, record: RunRecord) -> None:
    lines = [INVARIANTS_HEADER]
    for r in record.series:
        lines.append(
            ",".join(
                [
                    str(r.step),
                    _fmt(r.t),
                    _fmt(r.energy),
                    _fmt(r.momentum_x),
                    _fmt(r.momentum_y),
                    str(r.corrector_iters),
                    _fmt(r.wall_seconds),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")


def _scheme_summary(record: RunRecord) -> dict:
    iters = record.column("corrector_iters")
    out = {
        "status": "ok",
        "steps": int(record.series[-1].step),
        "mean_corrector_iters": float(iters[1:].mean()) if len(iters) > 1 else 0.0,
    }
    out.update(record.invariant_summary())
    return out


def _failure_summary(exc: Exception) -> dict:
    out = {"status": "failed", "error": str(exc)}
    residual = getattr(exc, "residual", None)
    if residual is not None:
        out["residual"] = residual
    return out


def _write_summary(cfg: ExperimentConfig, payload: dict) -> None:
    payload = {"command": cfg.command, "seed": cfg.seed, **payload}
    path = cfg.out_dir / "summary.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _integrate_schemes(cfg: ExperimentConfig, grid: GridSpec) -> tuple[dict, bool]:
    """Run every selected scheme on one grid; returns (summaries, any_failed)."""
    dt = cfg.resolve_dt(grid.dx)
    summaries: dict[str, dict] = {}
    failed = False
    for sel in cfg.schemes:
        scheme_dir = cfg.out_dir / sel.label
        scheme_dir.mkdir(parents=True, exist_ok=True)
        initial = _initial_state(cfg, grid)
        try:
            record = integrate(
                initial,
                sel.build(dt, cfg.bootstrap),
                initial.t + cfg.t_final,
                snapshot_every=cfg.snapshot_every,
            )
        except NumericalFailureError as exc:
            summaries[sel.label] = _failure_summary(exc)
            failed = True
            continue
        write_invariants_csv(scheme_dir / "invariants.csv", record)
        for index, (t, u) in enumerate(record.snapshots):
            write_snapshot(u, t, scheme_dir / f"snap_{index * cfg.snapshot_every:08d}.bin")
        summaries[sel.label] = _scheme_summary(record)
    return summaries, failed


def cmd_conserve(cfg: ExperimentConfig) -> int:
    """Long-run invariant tracking (defaults: 20x20 sine, dt = dx^2, T = 50)."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    grid = _grid(cfg)
    summaries, failed = _integrate_schemes(cfg, grid)
    _write_summary(
        cfg,
        {
            "grid": f"{grid.K}x{grid.J}",
            "alpha": grid.alpha,
            "dt": cfg.resolve_dt(grid.dx),
            "t_final": cfg.t_final,
            "profile": cfg.profile,
            "schemes": summaries,
        },
    )
    return 1 if failed else 0


def cmd_run(cfg: ExperimentConfig) -> int:
    """Free-form run (defaults: 128x128 plate, dt = dx/4) with snapshots."""
    return cmd_conserve(cfg)


def cmd_convergence(cfg: ExperimentConfig) -> int:
    """Self-convergence with dt = dx over nested grids against a fine reference."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    sizes = [k for k, j in cfg.grids]
    for k, j in cfg.grids:
        if k != j:
            raise ConfigError("convergence grids must be square (K = J)")
    ref = cfg.reference_grid or (256, 256)
    if ref[0] != ref[1]:
        raise ConfigError("reference grid must be square")
    reference = ref[0]
    for n in sizes:
        if n >= reference:
            raise ConfigError(
                f"grid {n} must be strictly coarser than the reference {reference}"
            )
        if reference % n != 0:
            raise ConfigError(f"grid {n} does not nest into reference {reference}")
    sel = cfg.schemes[0]
    template = sel.build(1.0, cfg.bootstrap)

    def profile(grid: GridSpec) -> State:
        return _initial_state(cfg, grid)

    try:
        points = convergence_study(
            profile, template, sizes, reference, cfg.t_final, cfg.alpha
        )
    except NumericalFailureError as exc:
        _write_summary(cfg, {"scheme": sel.label, **_failure_summary(exc)})
        return 1
    lines = ["h,error"]
    for h, err in points:
        lines.append(f"{_fmt(h)},{_fmt(err)}")
    (cfg.out_dir / "convergence.csv").write_text("\n".join(lines) + "\n")
    slope = fit_loglog_slope(points)
    _write_summary(
        cfg,
        {
            "scheme": sel.label,
            "profile": cfg.profile,
            "alpha": cfg.alpha,
            "t_final": cfg.t_final,
            "grids": sizes,
            "reference_grid": reference,
            "errors": {str(n): err for n, (_, err) in zip(sizes, points)},
            "fitted_slope": slope,
        },
    )
    return 0


def cmd_reversibility(cfg: ExperimentConfig) -> int:
    """Forward-reverse-return experiment; errors reported in percent."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    grid = _grid(cfg)
    dt = cfg.resolve_dt(grid.dx)
    sigma = _sigma_of(cfg)
    rows = ["scheme,profile,alpha_over_sigma,dt_over_dx,rel_error_percent"]
    summaries: dict[str, dict] = {}
    failed = False
    for sel in cfg.schemes:
        initial = _initial_state(cfg, grid)
        try:
            err = reversibility_test(initial, sel.build(dt, cfg.bootstrap), cfg.t_final)
        except NumericalFailureError as exc:
            summaries[sel.label] = _failure_summary(exc)
            failed = True
            continue
        ratio = grid.alpha / sigma if sigma else math.nan
        rows.append(
            ",".join(
                [
                    sel.label,
                    cfg.profile,
                    _fmt(ratio),
                    _fmt(dt / grid.dx),
                    _fmt(err * 100.0),
                ]
            )
        )
        summaries[sel.label] = {"status": "ok", "rel_error_percent": err * 100.0}
    (cfg.out_dir / "reversibility.csv").write_text("\n".join(rows) + "\n")
    _write_summary(
        cfg,
        {
            "grid": f"{grid.K}x{grid.J}",
            "alpha": grid.alpha,
            "sigma": sigma,
            "dt": dt,
            "dt_over_dx": dt / grid.dx,
            "t_final": cfg.t_final,
            "profile": cfg.profile,
            "schemes": summaries,
        },
    )
    return 1 if failed else 0


def _timed_steps(
    cfg: ExperimentConfig, sel: SchemeSelection, grid: GridSpec, warmup: int
) -> float:
    """Mean wall seconds per step over the timed window of one run."""
    dt = cfg.resolve_dt(grid.dx)
    initial = _initial_state(cfg, grid)
    t_final = initial.t + (warmup + cfg.bench_steps) * dt
    record = integrate(initial, sel.build(dt, cfg.bootstrap), t_final)
    per_step = [row.wall_seconds for row in record.series if row.step > warmup]
    return float(np.mean(per_step))


def cmd_bench(cfg: ExperimentConfig) -> int:
    """Per-step wall-clock cost across grids (median of reps, warmup excluded)."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    warmup = 5
    rows = ["grid_points,scheme,seconds_per_step"]
    summaries: dict[str, dict] = {}
    failed = False
    for sel in cfg.schemes:
        costs: list[tuple[int, float]] = []
        entry: dict = {"status": "ok", "seconds_per_step": {}}
        for k, j in cfg.grids:
            grid = GridSpec(k, j, cfg.alpha)
            try:
                reps = [
                    _timed_steps(cfg, sel, grid, warmup) for _ in range(cfg.bench_reps)
                ]
            except NumericalFailureError as exc:
                entry = _failure_summary(exc)
                failed = True
                break
            cost = float(np.median(reps))
            costs.append((k * j, cost))
            rows.append(f"{k * j},{sel.label},{_fmt(cost)}")
            entry["seconds_per_step"][f"{k}x{j}"] = cost
        if entry.get("status") == "ok":
            if len(costs) >= 2:
                entry["cost_exponent_vs_points"] = fit_loglog_slope(costs)
                entry["subquadratic"] = entry["cost_exponent_vs_points"] <= 1.3
            else:
                entry["cost_exponent_vs_points"] = None
                entry["exponent_fit_skipped"] = True
        summaries[sel.label] = entry
    (cfg.out_dir / "bench.csv").write_text("\n".join(rows) + "\n")
    _write_summary(
        cfg,
        {
            "grids": [f"{k}x{j}" for k, j in cfg.grids],
            "alpha": cfg.alpha,
            "profile": cfg.profile,
            "bench_steps": cfg.bench_steps,
            "bench_reps": cfg.bench_reps,
            "schemes": summaries,
        },
    )
    return 1 if failed else 0


def run_command(cfg: ExperimentConfig) -> int:
    dispatch = {
        "run": cmd_run,
        "conserve": cmd_conserve,
        "convergence": cmd_convergence,
        "reversibility": cmd_reversibility,
        "bench": cmd_bench,
    }
    return dispatch[cfg.command](cfg)
