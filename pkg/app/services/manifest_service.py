from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from app.core.errors import ConfigError
from app.core.http import json_safe
from app.services.target_service import sibling

MANIFEST_SUFFIX = ".manifest.json"


def manifest_path(result_path: Path) -> Path:
    return sibling(result_path, MANIFEST_SUFFIX)


def load_manifest(result_path: Path) -> dict[str, Any]:
    manifest_file = manifest_path(result_path)
    if not manifest_file.exists():
        return {}
    try:
        with manifest_file.open("r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError):
        return {}
    if not isinstance(payload, dict):
        return {}
    return payload


def save_manifest(result_path: Path, manifest: dict[str, Any]) -> Path:
    manifest_file = manifest_path(result_path)
    manifest_file.parent.mkdir(parents=True, exist_ok=True)
    with manifest_file.open("w", encoding="utf-8") as fh:
        json.dump(json_safe(manifest), fh, ensure_ascii=True, indent=2, allow_nan=False)
        fh.write("\n")
    return manifest_file


def build_manifest(
    config: dict[str, Any],
    steps: list[dict[str, Any]],
    diagnostics: dict[str, Any],
    outputs: dict[str, str],
) -> dict[str, Any]:
    """Everything needed to rerun: the resolved config (env and inputs included) plus what happened."""
    return {
        "seed": config["seed"],
        "config": config,
        "steps": steps,
        "diagnostics": diagnostics,
        "outputs": outputs,
    }


def config_from_manifest(manifest: dict[str, Any]) -> dict[str, Any]:
    config = manifest.get("config")
    if not isinstance(config, dict):
        raise ConfigError("manifest has no config section")
    return dict(config)
