"""Command line: ``python -m app {simulate,lw,mh} --model NAME ...`` and ``python -m app --bench``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import ValidationError

from app.core.constants import ALGORITHMS, BENCH_SIZES, DEFAULT_SEED, LW_WORKERS, OUTPUT_FORMATS
from app.core.errors import EXIT_INTERNAL, EXIT_OK, ConfigError, exit_code_for
from app.core.schemas import RunConfig
from app.services.registry_service import MODELS
from app.services.run_service import bench, render_bench, run

logger = logging.getLogger("app.cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m app", description="Run registry models under simulate, lw or mh.")
    parser.add_argument("algorithm", nargs="?", choices=ALGORITHMS, help="inference algorithm")
    parser.add_argument("--algo", choices=ALGORITHMS, help="same as the positional algorithm")
    parser.add_argument("--model", action="append", help=f"registry model ({', '.join(MODELS)}); repeat for --bench")
    parser.add_argument("--iterations", type=int, default=None, help="iterations (default 1 for simulate)")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--env", dest="env_file", help="environment JSON file: [{name, kind, values}]")
    parser.add_argument("--input", dest="inputs", help="model inputs as a JSON object")
    parser.add_argument("--out", help="result file (default: an auto-named file under the output directory)")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, default="csv")
    parser.add_argument("--dump-traces", action="store_true", help="also write <out>.traces.jsonl")
    parser.add_argument("--workers", type=int, default=LW_WORKERS, help="lw thread-pool width")
    parser.add_argument("--bench", action="store_true", help="time models x algorithms over --sizes")
    parser.add_argument("--sizes", help="comma-separated iteration counts for --bench")
    parser.add_argument("--list-models", action="store_true")
    parser.add_argument("--verbose", "-v", action="store_true")
    return parser


def _read_env(path: Optional[str]) -> Optional[list[Any]]:
    if not path:
        return None
    try:
        with Path(path).expanduser().open("r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"--env {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--env {path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(payload, list):
        raise ConfigError(f"--env {path}: expected a JSON array of {{name, kind, values}} entries")
    return payload


def _read_inputs(text: Optional[str]) -> dict[str, Any]:
    if not text:
        return {}
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--input: malformed JSON ({exc.msg})") from exc
    if not isinstance(payload, dict):
        raise ConfigError("--input: expected a JSON object")
    return payload


def _sizes(text: Optional[str]) -> list[int]:
    if not text:
        return list(BENCH_SIZES)
    try:
        return [int(size) for size in text.split(",") if size.strip()]
    except ValueError as exc:
        raise ConfigError(f"--sizes: expected comma-separated integers, got {text!r}") from exc


def config_from_args(args: argparse.Namespace) -> RunConfig:
    algo = args.algorithm or args.algo
    if args.algorithm and args.algo and args.algorithm != args.algo:
        raise ConfigError(f"conflicting algorithms: {args.algorithm} and --algo {args.algo}")
    if not algo:
        raise ConfigError("an algorithm is required: simulate, lw or mh")
    if not args.model or len(args.model) != 1:
        raise ConfigError("exactly one --model is required")
    iterations = args.iterations if args.iterations is not None else 1
    try:
        return RunConfig(
            model=args.model[0],
            algo=algo,
            iterations=iterations,
            seed=args.seed,
            env=_read_env(args.env_file),
            inputs=_read_inputs(args.inputs),
            out=args.out,
            format=args.format,
            dump_traces=args.dump_traces,
            workers=args.workers,
        )
    except ValidationError as exc:
        fields = ", ".join(".".join(str(part) for part in error["loc"]) + f": {error['msg']}" for error in exc.errors())
        raise ConfigError(f"invalid configuration: {fields}") from exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.list_models:
            for spec in MODELS.values():
                print(f"{spec.name}\t{spec.description}")
            return EXIT_OK
        if args.bench:
            models = args.model or ["linregr", "hmm"]
            algos = [args.algorithm or args.algo] if (args.algorithm or args.algo) else ["simulate", "lw"]
            rows, fits = bench(models, algos, _sizes(args.sizes), args.seed)
            text = render_bench(rows, fits)
            if args.out:
                Path(args.out).expanduser().parent.mkdir(parents=True, exist_ok=True)
                Path(args.out).expanduser().write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
            return EXIT_OK
        outcome = run(config_from_args(args))
        for step in outcome.steps:
            logger.info("%s: %s", step["state"], step["message"])
        print(outcome.outputs["result"])
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001
        code = exit_code_for(exc)
        if code == EXIT_INTERNAL:
            logger.exception("internal error")
        print(f"error: {exc}", file=sys.stderr)
        return code
