from __future__ import annotations

from typing import Any

from fastapi import APIRouter

from app.core.constants import MAX_API_ITERATIONS
from app.core.errors import ConfigError, ModelError
from app.core.http import api_response, step
from app.core.schemas import BenchRequest, RunConfig, RunRequest
from app.services.registry_service import list_models
from app.services.run_service import bench, execute

router = APIRouter()


@router.get("/api/health")
async def health() -> dict[str, str]:
    return {"status": "ok"}


@router.get("/api/models")
async def models():
    steps: list[dict[str, Any]] = []
    try:
        listing = list_models()
        steps.append(step("registry", "ok", f"{len(listing)} models registered"))
        return api_response(
            status="ok",
            state="ready",
            message="models listed",
            details={"models": listing},
            steps=steps,
        )
    except Exception as exc:  # noqa: BLE001
        steps.append(step("registry", "error", str(exc)))
        return api_response(
            status="error",
            state="failed",
            message=str(exc),
            details={},
            steps=steps,
            status_code=500,
        )


@router.post("/api/run")
async def run_model(payload: RunRequest):
    steps: list[dict[str, Any]] = []
    try:
        if payload.iterations > MAX_API_ITERATIONS:
            steps.append(step("validate", "error", "too many iterations"))
            return api_response(
                status="error",
                state="invalid_config",
                message=f"iterations must be <= {MAX_API_ITERATIONS} over HTTP; use the command line for longer runs",
                details={"iterations": payload.iterations},
                next_action="reduce_iterations",
                steps=steps,
                status_code=400,
            )
        config = RunConfig(**payload.model_dump())
        outcome = execute(config)
        steps.extend(outcome.steps)
        return api_response(
            status="ok",
            state="completed",
            message=f"{outcome.config.algo} on {outcome.config.model} finished",
            details={
                **outcome.header(),
                "columns": outcome.table.columns,
                "rows": outcome.table.rows(),
                "samples": outcome.table.samples(outcome.env).to_json(),
                "results": outcome.results,
                "diagnostics": outcome.diagnostics,
                "config": outcome.config.model_dump(mode="json"),
            },
            steps=steps,
        )
    except (ConfigError, ModelError) as exc:
        steps.append(step("run", "error", str(exc)))
        return api_response(
            status="error",
            state="invalid_config" if isinstance(exc, ConfigError) else "model_error",
            message=str(exc),
            details={"error": type(exc).__name__},
            next_action="fix_request",
            steps=steps,
            status_code=400,
        )
    except Exception as exc:  # noqa: BLE001
        steps.append(step("run", "error", str(exc)))
        return api_response(
            status="error",
            state="failed",
            message=str(exc),
            details={"error": type(exc).__name__},
            steps=steps,
            status_code=500,
        )


@router.post("/api/bench")
async def run_bench(payload: BenchRequest):
    steps: list[dict[str, Any]] = []
    try:
        if max(payload.sizes) > MAX_API_ITERATIONS:
            raise ConfigError(f"bench sizes must be <= {MAX_API_ITERATIONS} over HTTP")
        rows, fits = bench(payload.models, payload.algos, payload.sizes, payload.seed)
        steps.append(step("bench", "ok", f"{len(rows)} timings collected"))
        return api_response(
            status="ok",
            state="completed",
            message="bench finished",
            details={
                "rows": [row.__dict__ for row in rows],
                "fits": [fit.__dict__ for fit in fits],
            },
            steps=steps,
        )
    except (ConfigError, ModelError) as exc:
        steps.append(step("bench", "error", str(exc)))
        return api_response(
            status="error",
            state="invalid_config",
            message=str(exc),
            details={},
            next_action="fix_request",
            steps=steps,
            status_code=400,
        )
    except Exception as exc:  # noqa: BLE001
        steps.append(step("bench", "error", str(exc)))
        return api_response(
            status="error",
            state="failed",
            message=str(exc),
            details={},
            steps=steps,
            status_code=500,
        )
