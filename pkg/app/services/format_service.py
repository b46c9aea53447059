"""Result tables, CSV/JSON serialisation and per-iteration trace dumps."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

from app.core.env import Env
from app.core.http import json_safe
from app.core.model import Addr


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    values: dict[str, list[Any]]
    strace: dict[Addr, Any]
    log_weight: Optional[float] = None
    accepted: Optional[bool] = None
    proposal: Optional[Addr] = None
    lptrace: Optional[dict[Addr, float]] = None


@dataclass
class ResultTable:
    algo: str
    variables: list[str]
    records: list[IterationRecord] = field(default_factory=list)

    @property
    def columns(self) -> list[str]:
        lead = {"lw": ["log_weight"], "mh": ["accepted"]}.get(self.algo, [])
        return ["iter", *lead, *self.variables]

    def rows(self) -> list[dict[str, Any]]:
        rows: list[dict[str, Any]] = []
        for record in self.records:
            row: dict[str, Any] = {"iter": record.iteration}
            if self.algo == "lw":
                row["log_weight"] = record.log_weight
            elif self.algo == "mh":
                row["accepted"] = record.accepted
            for name in self.variables:
                row[name] = [_plain(value) for value in record.values.get(name, [])]
            rows.append(row)
        return rows

    def samples(self, env: Env) -> Env:
        """Sampled values of every variable concatenated across iterations."""
        merged: dict[str, list[Any]] = {entry.name: [] for entry in env}
        for record in self.records:
            for name, values in record.values.items():
                if name in merged:
                    merged[name].extend(values)
        return env.with_values(merged)


def sampled_variables(env: Env) -> list[str]:
    return [entry.name for entry in env if not entry.values]


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain(item) for item in value]
    return value


def _cell(value: Any) -> str:
    if isinstance(value, list):
        if len(value) == 1 and not isinstance(value[0], list):
            return _scalar(value[0])
        return json.dumps(value, separators=(",", ":"))
    return _scalar(value)


def _scalar(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return json.dumps(_plain(value), separators=(",", ":"))
    return str(value)


def render_csv(table: ResultTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows():
        writer.writerow([_cell(row[column]) for column in table.columns])
    return buffer.getvalue()


def render_json(table: ResultTable, env: Env, header: dict[str, Any], results: Optional[list[Any]] = None) -> str:
    payload = {
        **header,
        "columns": table.columns,
        "rows": table.rows(),
        "samples": table.samples(env).to_json(),
    }
    if results is not None:
        payload["results"] = results
    return json.dumps(json_safe(payload), ensure_ascii=True, indent=2, allow_nan=False)


def _addr_items(trace: dict[Addr, Any], key: str) -> list[dict[str, Any]]:
    return [{"tag": addr.tag, "occurrence": addr.occurrence, key: _plain(value)} for addr, value in trace.items()]


def trace_record(record: IterationRecord) -> dict[str, Any]:
    payload: dict[str, Any] = {"iteration": record.iteration}
    if record.accepted is not None:
        payload["accepted"] = record.accepted
        payload["proposal_addr"] = (
            {"tag": record.proposal.tag, "occurrence": record.proposal.occurrence} if record.proposal else None
        )
    payload["strace"] = _addr_items(record.strace, "value")
    if record.lptrace is not None:
        payload["lptrace"] = _addr_items(record.lptrace, "lp")
    if record.log_weight is not None:
        payload["log_weight"] = record.log_weight
    return payload


def render_traces(records: Iterable[IterationRecord]) -> str:
    lines = (json.dumps(json_safe(trace_record(record)), ensure_ascii=True, allow_nan=False) for record in records)
    return "".join(line + "\n" for line in lines)


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)
