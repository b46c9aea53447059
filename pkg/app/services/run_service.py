"""Run orchestration shared by the command line and the HTTP routes."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from app.core.env import Env, consumption_report
from app.core.errors import ConfigError, EnvError
from app.core.http import step
from app.core.schemas import EnvEntryModel, RunConfig
from app.services.format_service import (
    IterationRecord,
    ResultTable,
    render_csv,
    render_json,
    render_traces,
    sampled_variables,
    write_text,
)
from app.services.inference_service import (
    iterate_lw,
    iterate_mh,
    run_simulate,
    sampled_tags,
    tag_values,
)
from app.services.manifest_service import build_manifest, config_from_manifest, save_manifest
from app.services.registry_service import ModelSpec, get_model_spec, jsonable_result
from app.services.rng_service import iteration_rng
from app.services.target_service import default_output_name, resolve_target, sibling, validate_target_access

logger = logging.getLogger(__name__)

TRACES_SUFFIX = ".traces.jsonl"


@dataclass
class RunOutcome:
    config: RunConfig
    env: Env
    table: ResultTable
    diagnostics: dict[str, Any]
    steps: list[dict[str, Any]]
    results: list[Any] = field(default_factory=list)
    outputs: dict[str, str] = field(default_factory=dict)

    def header(self) -> dict[str, Any]:
        return {
            "model": self.config.model,
            "algo": self.config.algo,
            "seed": self.config.seed,
            "iterations": self.config.iterations,
        }


def load_env(raw: Optional[Sequence[Any]], spec: ModelSpec, inputs: Any) -> Env:
    if raw is None:
        return spec.default_env(inputs)
    try:
        entries = [item if isinstance(item, EnvEntryModel) else EnvEntryModel.model_validate(item) for item in raw]
        return Env.from_json(entry.model_dump() for entry in entries)
    except ValidationError as exc:
        raise ConfigError(f"malformed environment: {exc.errors(include_url=False)}") from exc
    except EnvError as exc:
        raise ConfigError(f"malformed environment: {exc}") from exc


def diagnose(env: Env, residual: Env, strace: dict[Any, Any]) -> dict[str, Any]:
    reports = consumption_report(env, residual, sampled_tags(strace))
    return {
        "variables": [report.to_dict() for report in reports],
        "unconsumed": [report.name for report in reports if report.surplus > 0],
        "exhausted": [report.name for report in reports if report.provided > 0 and report.defaulted_to_sample > 0],
    }


def _values(strace: dict[Any, Any], names: Sequence[str]) -> dict[str, list[Any]]:
    grouped = tag_values(strace)
    return {name: grouped.get(name, []) for name in names}


def execute(config: RunConfig) -> RunOutcome:
    """Run one configuration in memory: resolve the model, run the algorithm, collect records."""
    steps: list[dict[str, Any]] = []
    spec = get_model_spec(config.model)
    inputs = spec.parse_inputs(config.inputs)
    env = load_env(config.env, spec, inputs)
    if config.algo in ("lw", "mh") and config.iterations < 1:
        raise ConfigError(f"iterations must be >= 1 for {config.algo}, got {config.iterations}")
    config = config.model_copy(
        update={"model": spec.name, "inputs": inputs.model_dump(), "env": [EnvEntryModel(**e) for e in env.to_json()]}
    )
    steps.append(step("resolve", "ok", f"model {spec.name} resolved", {"variables": env.names}))

    m = spec.build(inputs)
    names = sampled_variables(env)
    table = ResultTable(config.algo, names)
    results: list[Any] = []
    residual, strace = env, {}
    started = time.perf_counter()

    if config.algo == "simulate":
        for iteration in range(config.iterations):
            run = run_simulate(env, m, iteration_rng(config.seed, iteration))
            table.records.append(IterationRecord(iteration, _values(run.strace, names), dict(run.strace)))
            results.append(jsonable_result(run.value))
            residual, strace = run.residual, run.strace
    elif config.algo == "lw":
        for iteration, run in enumerate(iterate_lw(config.iterations, m, env, config.seed, config.workers)):
            table.records.append(
                IterationRecord(iteration, _values(run.strace, names), dict(run.strace), log_weight=run.log_weight)
            )
            results.append(jsonable_result(run.value))
            residual, strace = run.residual, run.strace
    else:
        for state in iterate_mh(config.iterations, m, env, config.seed):
            table.records.append(
                IterationRecord(
                    state.iteration,
                    _values(state.strace, names),
                    dict(state.strace),
                    accepted=state.accepted,
                    proposal=state.proposal,
                    lptrace=dict(state.lptrace),
                )
            )
            results.append(jsonable_result(state.value))
            residual, strace = state.residual, state.strace

    elapsed = time.perf_counter() - started
    logger.info("%s on %s: %d iterations in %.3fs", config.algo, spec.name, config.iterations, elapsed)
    steps.append(step("run", "ok", f"{config.algo} finished", {"iterations": len(table.records)}))
    diagnostics = diagnose(env, residual, dict(strace))
    if diagnostics["unconsumed"] or diagnostics["exhausted"]:
        steps.append(
            step(
                "diagnose",
                "warning",
                "environment values were left unconsumed or exhausted",
                {"unconsumed": diagnostics["unconsumed"], "exhausted": diagnostics["exhausted"]},
            )
        )
    return RunOutcome(config, env, table, diagnostics, steps, results)


def run(config: RunConfig) -> RunOutcome:
    """Execute ``config`` and write the result table, the optional trace dump and the run manifest."""
    target = resolve_target(config.out, default_output_name(config.model, config.algo, config.seed, config.format))
    ok, reason = validate_target_access(target)
    if not ok:
        raise ConfigError(f"--out {target}: {reason}")
    outcome = execute(config)

    if config.format == "csv":
        write_text(target, render_csv(outcome.table))
    else:
        write_text(target, render_json(outcome.table, outcome.env, outcome.header(), outcome.results))
    outcome.outputs["result"] = str(target)
    outcome.steps.append(step("write", "ok", f"wrote {config.format} results", {"path": str(target)}))

    if config.dump_traces:
        traces = sibling(target, TRACES_SUFFIX)
        write_text(traces, render_traces(outcome.table.records))
        outcome.outputs["traces"] = str(traces)
        outcome.steps.append(step("traces", "ok", "wrote trace dump", {"path": str(traces)}))

    config_echo = outcome.config.model_dump(mode="json")
    config_echo["out"] = str(target)
    manifest = build_manifest(config_echo, outcome.steps, outcome.diagnostics, outcome.outputs)
    outcome.outputs["manifest"] = str(save_manifest(target, manifest))
    return outcome


@dataclass(frozen=True)
class BenchRow:
    model: str
    algo: str
    size: int
    seconds: float


@dataclass(frozen=True)
class BenchFit:
    model: str
    algo: str
    slope: float
    intercept: float
    r_squared: float
    monotone: bool


def linear_fit(sizes: Sequence[int], seconds: Sequence[float]) -> tuple[float, float, float]:
    xs = np.asarray(sizes, dtype=float)
    ys = np.asarray(seconds, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    predicted = slope * xs + intercept
    total = float(np.sum((ys - ys.mean()) ** 2))
    residual = float(np.sum((ys - predicted) ** 2))
    r_squared = 1.0 - residual / total if total > 0 else 1.0
    return float(slope), float(intercept), r_squared


def bench(
    models: Sequence[str],
    algos: Sequence[str],
    sizes: Sequence[int],
    seed: int = 0,
) -> tuple[list[BenchRow], list[BenchFit]]:
    """Wall-clock time of each (model, algorithm, iteration count) with the model's default inputs and env."""
    if not sizes or any(size < 1 for size in sizes):
        raise ConfigError(f"bench sizes must be positive, got {list(sizes)}")
    rows: list[BenchRow] = []
    fits: list[BenchFit] = []
    for name in models:
        spec = get_model_spec(name)
        for algo in algos:
            config = RunConfig(model=spec.name, algo=algo, iterations=1, seed=seed)
            timings: list[float] = []
            for size in sizes:
                started = time.perf_counter()
                execute(config.model_copy(update={"iterations": size}))
                timings.append(time.perf_counter() - started)
                rows.append(BenchRow(spec.name, algo, size, timings[-1]))
            monotone = all(later >= earlier for earlier, later in zip(timings, timings[1:]))
            if len(sizes) >= 2:
                slope, intercept, r_squared = linear_fit(sizes, timings)
                fits.append(BenchFit(spec.name, algo, slope, intercept, r_squared, monotone))
    return rows, fits


def render_bench(rows: Sequence[BenchRow], fits: Sequence[BenchFit]) -> str:
    lines = ["model,algo,size,seconds"]
    lines += [f"{row.model},{row.algo},{row.size},{row.seconds:.6f}" for row in rows]
    if fits:
        lines.append("")
        lines.append("model,algo,slope,intercept,r_squared,monotone")
        lines += [
            f"{fit.model},{fit.algo},{fit.slope:.6g},{fit.intercept:.6g},{fit.r_squared:.4f},{str(fit.monotone).lower()}"
            for fit in fits
        ]
    return "\n".join(lines) + "\n"


def rerun_config(manifest: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(config_from_manifest(manifest))
    except ValidationError as exc:
        raise ConfigError(f"manifest config is invalid: {exc.errors(include_url=False)}") from exc