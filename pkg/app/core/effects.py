from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Generic, TypeVar

from app.core.errors import InternalError
from app.core.prog import (
    Continuation,
    Effect,
    EffectSignature,
    Leaf,
    Node,
    Operation,
    Program,
    Right,
    call,
    discharge_head,
)

S = TypeVar("S")
W = TypeVar("W")

STATE = Effect("State")
WRITER = Effect("Writer")


def _unit(value: Any) -> None:
    if value is not None:
        raise InternalError(f"unit operation answered with {value!r}")
    return None


@dataclass(frozen=True)
class Modify(Operation, Generic[S]):
    update: Callable[[S], S]
    effect: Effect = STATE

    def accept(self, value: Any) -> None:
        return _unit(value)


@dataclass(frozen=True)
class Tell(Operation, Generic[W]):
    chunk: W
    effect: Effect = WRITER

    def accept(self, value: Any) -> None:
        return _unit(value)


@dataclass(frozen=True)
class Monoid(Generic[W]):
    empty: W
    combine: Callable[[W, W], W]


def _concat(left: Any, right: Any) -> Any:
    return tuple(left) + tuple(right)


TUPLE_MONOID: Monoid[tuple] = Monoid(empty=(), combine=_concat)


def modify(update: Callable[[S], S], sig: EffectSignature, effect: Effect = STATE) -> Program:
    return call(Modify(update, effect), sig)


def tell(chunk: W, sig: EffectSignature, effect: Effect = WRITER) -> Program:
    return call(Tell(chunk, effect), sig)


def handle_state(initial: S, prog: Program, effect: Effect = STATE) -> Program:
    state = initial
    while isinstance(prog, Node):
        routed = discharge_head(prog.request, effect)
        resume = prog.resume
        if isinstance(routed, Right):
            state = routed.value.update(state)
            prog = resume(None)
            continue
        return Node(routed.value, Continuation.of(lambda x, s=state, k=resume: handle_state(s, k(x), effect)))
    return Leaf((prog.value, state))


def handle_writer(prog: Program, monoid: Monoid = TUPLE_MONOID, effect: Effect = WRITER) -> Program:
    return _handle_writer(monoid.empty, prog, monoid, effect)


def _handle_writer(acc: Any, prog: Program, monoid: Monoid, effect: Effect) -> Program:
    while isinstance(prog, Node):
        routed = discharge_head(prog.request, effect)
        resume = prog.resume
        if isinstance(routed, Right):
            acc = monoid.combine(acc, routed.value.chunk)
            prog = resume(None)
            continue
        return Node(
            routed.value,
            Continuation.of(lambda x, a=acc, k=resume: _handle_writer(a, k(x), monoid, effect)),
        )
    return Leaf((prog.value, acc))
