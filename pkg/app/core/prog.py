"""Effect trees: programs as ``Leaf``/``Node`` values over an ordered effect signature.

A ``Node`` holds one pending request and a ``Continuation``. The continuation is a
catenable queue of arrows, so ``bind`` never walks the tree and applying a
continuation never recurses through the bound functions. Handlers are written as
loops over nodes and forward foreign requests lazily.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Generic, Optional, TypeVar, Union

from app.core.errors import InternalError, MembershipError

A = TypeVar("A")
B = TypeVar("B")
T = TypeVar("T")


@dataclass(frozen=True)
class Effect:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, init=False)
class EffectSignature:
    effects: tuple[Effect, ...]

    def __init__(self, *effects: Effect) -> None:
        seen: set[Effect] = set()
        for effect in effects:
            if effect in seen:
                raise InternalError(f"duplicate effect {effect} in signature")
            seen.add(effect)
        object.__setattr__(self, "effects", tuple(effects))

    def __len__(self) -> int:
        return len(self.effects)

    def __contains__(self, effect: object) -> bool:
        return effect in self.effects

    def __iter__(self):
        return iter(self.effects)

    def __str__(self) -> str:
        return "[" + ", ".join(str(effect) for effect in self.effects) + "]"

    @property
    def head(self) -> Effect:
        if not self.effects:
            raise InternalError("empty signature has no head effect")
        return self.effects[0]

    @property
    def rest(self) -> EffectSignature:
        return EffectSignature(*self.effects[1:])

    def prepend(self, effect: Effect) -> EffectSignature:
        return EffectSignature(effect, *self.effects)

    def index_of(self, effect: Effect) -> int:
        try:
            return self.effects.index(effect)
        except ValueError:
            raise MembershipError(f"effect {effect} is not a member of {self}") from None


class Operation:
    """Payload of one effect request. ``accept`` re-tags the handler's answer."""

    effect: Effect

    def accept(self, value: Any) -> Any:
        return value


@dataclass(frozen=True)
class EffectRequest:
    signature: EffectSignature
    index: int
    payload: Operation

    def __post_init__(self) -> None:
        if not 0 <= self.index < len(self.signature):
            raise InternalError(f"effect index {self.index} outside signature {self.signature}")
        if self.signature.effects[self.index] != self.payload.effect:
            raise InternalError(
                f"payload of effect {self.payload.effect} placed at index of {self.signature.effects[self.index]}"
            )

    @property
    def effect(self) -> Effect:
        return self.signature.effects[self.index]


@dataclass(frozen=True)
class Left(Generic[T]):
    value: T


@dataclass(frozen=True)
class Right(Generic[T]):
    value: T


def inject(op: Operation, sig: EffectSignature) -> EffectRequest:
    return EffectRequest(sig, sig.index_of(op.effect), op)


def project(req: EffectRequest, target: Effect) -> Optional[Operation]:
    if req.effect == target:
        return req.payload
    return None


def discharge(req: EffectRequest) -> Union[Left[EffectRequest], Right[Operation]]:
    if req.index == 0:
        return Right(req.payload)
    return Left(EffectRequest(req.signature.rest, req.index - 1, req.payload))


def discharge_head(req: EffectRequest, effect: Effect) -> Union[Left[EffectRequest], Right[Operation]]:
    """``discharge`` for a handler of ``effect``; the signature must have it at the head."""
    if req.signature.head != effect:
        raise InternalError(f"handler for {effect} applied to a program over {req.signature}")
    return discharge(req)


@dataclass(frozen=True)
class _Cat:
    left: Any
    right: Any


class Continuation:
    __slots__ = ("_tree",)

    def __init__(self, tree: Any) -> None:
        self._tree = tree

    @classmethod
    def of(cls, arrow: Callable[[Any], Program]) -> Continuation:
        return cls(arrow)

    def then(self, arrow: Callable[[Any], Program]) -> Continuation:
        return Continuation(_Cat(self._tree, arrow))

    def _then_tree(self, tree: Any) -> Continuation:
        return Continuation(_Cat(self._tree, tree))

    def __call__(self, value: Any) -> Program:
        pending: list[Any] = []
        node = self._tree
        while True:
            while isinstance(node, _Cat):
                pending.append(node.right)
                node = node.left
            result = node(value)
            if not pending:
                return result
            if isinstance(result, Leaf):
                value = result.value
                node = pending.pop()
                continue
            remaining = pending[0]
            for tree in pending[1:]:
                remaining = _Cat(tree, remaining)
            return Node(result.request, result.resume._then_tree(remaining))


@dataclass(frozen=True)
class Leaf(Generic[A]):
    value: A


@dataclass(frozen=True, eq=False)
class Node:
    request: EffectRequest
    resume: Continuation


Program = Union[Leaf, Node]


def bind(prog: Program, f: Callable[[Any], Program]) -> Program:
    if isinstance(prog, Leaf):
        return f(prog.value)
    return Node(prog.request, prog.resume.then(f))


def fmap(prog: Program, f: Callable[[Any], Any]) -> Program:
    return bind(prog, lambda value: Leaf(f(value)))


def call(op: Operation, sig: EffectSignature) -> Program:
    return Node(inject(op, sig), Continuation.of(lambda value: Leaf(op.accept(value))))


def forward(req: EffectRequest, resume: Callable[[Any], Program]) -> Node:
    return Node(req, Continuation.of(resume))


def count_nodes(prog: Program, answer: Callable[[Operation], Any] = lambda op: None) -> int:
    """Walk a program, answering every request with ``answer``, and count the nodes visited."""
    count = 0
    while isinstance(prog, Node):
        count += 1
        prog = prog.resume(answer(prog.request.payload))
    return count


def run_pure(prog: Program) -> Any:
    if isinstance(prog, Node):
        raise InternalError(f"unhandled {prog.request.effect} request left in a program expected to be pure")
    return prog.value
