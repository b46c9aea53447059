from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

from app.core.constants import OUTPUT_DIR


def default_output_name(model: str, algo: str, seed: int, fmt: str) -> str:
    return f"{model}-{algo}-seed{seed}.{fmt}"


def resolve_target(target_path: Optional[str], default_name: str) -> Path:
    if not target_path:
        return (Path(OUTPUT_DIR) / default_name).expanduser().resolve()
    return Path(target_path).expanduser().resolve()


def sibling(target: Path, suffix: str) -> Path:
    return target.with_name(target.name + suffix)


def validate_target_access(target: Path) -> tuple[bool, str]:
    if target.exists() and target.is_dir():
        return False, "output path is a directory"
    parent = target.parent
    while not parent.exists():
        parent = parent.parent
    if not parent.is_dir():
        return False, f"output parent {parent} is not a directory"
    if not os.access(parent, os.W_OK | os.X_OK):
        return False, f"output directory {parent} is not writable"
    return True, "ok"
