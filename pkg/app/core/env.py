"""Model environments: ordered, kind-checked records of observable variables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Mapping, Optional, Sequence, Union

from app.core.dist import PrimKind, kind_of
from app.core.errors import EnvError


@dataclass(frozen=True)
class ObsVar:
    name: str

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise EnvError("observable variable name must be a non-empty string")

    def __str__(self) -> str:
        return self.name


VarName = Union[str, ObsVar]


def var_name(var: VarName) -> str:
    return ObsVar(var).name if isinstance(var, str) else var.name


@dataclass(frozen=True)
class EnvEntry:
    name: str
    kind: PrimKind
    values: tuple[Any, ...]


def _entry(name: str, values: Sequence[Any], kind: Optional[Union[PrimKind, str]]) -> EnvEntry:
    declared = PrimKind(kind) if kind is not None else None
    kinds = {kind_of(value) for value in values}
    if None in kinds:
        bad = next(value for value in values if kind_of(value) is None)
        raise EnvError(f"variable {name}: value {bad!r} is not a primitive value")
    if declared is None:
        if not values:
            raise EnvError(f"variable {name}: an empty value list needs an explicit kind")
        if kinds == {PrimKind.INT, PrimKind.REAL}:
            declared = PrimKind.REAL
        elif len(kinds) != 1:
            raise EnvError(f"variable {name}: values mix kinds {sorted(k.value for k in kinds)}")
        else:
            declared = kinds.pop()
    for kind in kinds:
        if not declared.accepts(kind):
            raise EnvError(f"variable {name}: expected values of kind {declared.value}, got {kind.value}")
    return EnvEntry(name, declared, tuple(declared.coerce(value) for value in values))


def _widened(name: str, values: Sequence[Any], kind: PrimKind) -> EnvEntry:
    if kind is PrimKind.INT and any(kind_of(value) is PrimKind.REAL for value in values):
        kind = PrimKind.REAL
    return _entry(name, values, kind)


@dataclass(frozen=True)
class Env:
    entries: tuple[EnvEntry, ...] = ()

    def __post_init__(self) -> None:
        names = [entry.name for entry in self.entries]
        if len(set(names)) != len(names):
            raise EnvError(f"duplicate variable names in environment: {names}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[EnvEntry]:
        return iter(self.entries)

    def __contains__(self, var: object) -> bool:
        name = var.name if isinstance(var, ObsVar) else var
        return any(entry.name == name for entry in self.entries)

    @property
    def names(self) -> list[str]:
        return [entry.name for entry in self.entries]

    def entry(self, var: VarName) -> EnvEntry:
        name = var_name(var)
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise EnvError(f"variable {name} is not in the environment (known: {self.names})")

    def get(self, var: VarName) -> list[Any]:
        return list(self.entry(var).values)

    def kind(self, var: VarName) -> PrimKind:
        return self.entry(var).kind

    def set(self, var: VarName, values: Sequence[Any]) -> Env:
        current = self.entry(var)
        replaced = _entry(current.name, list(values), current.kind)
        return Env(tuple(replaced if entry.name == current.name else entry for entry in self.entries))

    def with_values(self, values: Mapping[str, Sequence[Any]]) -> Env:
        """Same variables, in order, holding ``values[name]`` (empty when absent).

        An int entry receiving real values is widened to real.
        """
        return Env(tuple(_widened(entry.name, list(values.get(entry.name, ())), entry.kind) for entry in self.entries))

    def to_json(self) -> list[dict[str, Any]]:
        return [
            {"name": entry.name, "kind": entry.kind.value, "values": [_jsonable(value) for value in entry.values]}
            for entry in self.entries
        ]

    @classmethod
    def from_json(cls, payload: Iterable[Mapping[str, Any]]) -> Env:
        entries: list[EnvEntry] = []
        for item in payload:
            name = var_name(item["name"])
            entries.append(_entry(name, list(item.get("values", [])), item["kind"]))
        return cls(tuple(entries))


NIL = Env()


def _jsonable(value: Any) -> Any:
    if isinstance(value, tuple):
        return list(value)
    return value


def env_cons(
    var: VarName,
    values: Sequence[Any],
    rest: Env = NIL,
    kind: Optional[Union[PrimKind, str]] = None,
) -> Env:
    name = var_name(var)
    if name in rest:
        raise EnvError(f"variable {name} is already in the environment")
    return Env((_entry(name, list(values), kind),) + rest.entries)


def env_of(*items: tuple[Any, ...]) -> Env:
    """Build an environment left to right from ``(name, values)`` or ``(name, values, kind)`` tuples."""
    env = NIL
    for item in reversed(items):
        env = env_cons(*item[:2], env, *item[2:])
    return env


@dataclass(frozen=True)
class VarReport:
    name: str
    provided: int
    consumed: int
    surplus: int
    defaulted_to_sample: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "provided": self.provided,
            "consumed": self.consumed,
            "surplus": self.surplus,
            "defaulted_to_sample": self.defaulted_to_sample,
        }


def consumption_report(env_in: Env, residual: Env, sampled_tags: Mapping[str, int]) -> list[VarReport]:
    """Per variable: values provided, consumed by Ask, left unconsumed, and runtime hits that fell back to sampling."""
    reports: list[VarReport] = []
    for entry in env_in:
        left = len(residual.entry(entry.name).values) if entry.name in residual else 0
        provided = len(entry.values)
        reports.append(
            VarReport(
                name=entry.name,
                provided=provided,
                consumed=provided - left,
                surplus=left,
                defaulted_to_sample=int(sampled_tags.get(entry.name, 0)),
            )
        )
    return reports
