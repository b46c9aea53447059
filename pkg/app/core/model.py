"""Models, smart constructors and the specialisation handlers.

A ``Model`` is a builder from an effect signature to a program, so one model can
be run under any signature that contains ``ObsReader`` and ``Dist``. Models are
written either by chaining ``bind`` or as generator functions decorated with
``@model``, where each ``yield`` runs a sub-model and receives its result::

    @model
    def coin_flip():
        p = yield uniform(0, 1, "p")
        y = yield bernoulli(p, "y")
        return y
"""

from __future__ import annotations

import functools
import sys
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Generator, Generic, Iterable, Mapping, NamedTuple, Optional, Sequence, TypeVar

import numpy as np

from app.core.dist import (
    DIST,
    Bernoulli,
    Beta,
    Binomial,
    Dirichlet,
    Discrete,
    Dist,
    Gamma,
    Normal,
    Poisson,
    PrimKind,
    Uniform,
    kind_of,
)
from app.core.effects import TUPLE_MONOID, WRITER, Monoid, Tell, handle_writer
from app.core.env import Env, EnvEntry, VarName, var_name
from app.core.errors import EnvError, InternalError
from app.core.prog import (
    Continuation,
    Effect,
    EffectSignature,
    Leaf,
    Node,
    Operation,
    Program,
    Right,
    bind,
    call,
    discharge_head,
    fmap,
    inject,
    project,
)

A = TypeVar("A")
B = TypeVar("B")

OBS_READER = Effect("ObsReader")
SAMPLE = Effect("Sample")
OBSERVE = Effect("Observe")

Site = tuple[str, int, int]


class Addr(NamedTuple):
    tag: str
    occurrence: int

    def __str__(self) -> str:
        return f"{self.tag}#{self.occurrence}"


@dataclass(frozen=True)
class Ask(Operation):
    name: str
    kind: PrimKind
    effect: Effect = field(default=OBS_READER, repr=False)

    def accept(self, value: Any) -> Any:
        if value is None:
            return None
        kind = kind_of(value)
        if kind is None or not self.kind.accepts(kind):
            raise InternalError(f"Ask({self.name}) answered with {value!r}, expected kind {self.kind.value}")
        return value


@dataclass(frozen=True)
class Sample(Operation):
    dist: Dist
    addr: Addr
    effect: Effect = field(default=SAMPLE, repr=False)

    def accept(self, value: Any) -> Any:
        return self.dist.accept(value)


@dataclass(frozen=True)
class Observe(Operation):
    dist: Dist
    value: Any
    addr: Addr
    effect: Effect = field(default=OBSERVE, repr=False)

    def accept(self, value: Any) -> Any:
        return self.dist.accept(value)


class Model(Generic[A]):
    __slots__ = ("_build",)

    def __init__(self, build: Callable[[EffectSignature], Program]) -> None:
        self._build = build

    def run(self, sig: EffectSignature) -> Program:
        if OBS_READER not in sig or DIST not in sig:
            raise InternalError(f"models need ObsReader and Dist in the signature, got {sig}")
        return self._build(sig)

    def bind(self, f: Callable[[A], Model[B]]) -> Model[B]:
        return Model(lambda sig: bind(self._build(sig), lambda value: f(value)._build(sig)))

    def map(self, f: Callable[[A], B]) -> Model[B]:
        return Model(lambda sig: fmap(self._build(sig), f))

    def then(self, other: Model[B]) -> Model[B]:
        return self.bind(lambda _: other)

    @classmethod
    def pure(cls, value: A) -> Model[A]:
        return cls(lambda sig: Leaf(value))


def run_model(m: Model[A], sig: EffectSignature) -> Program:
    return m.run(sig)


def _drive(gen: Generator[Model[Any], Any, A], sig: EffectSignature) -> Program:
    def advance(value: Any) -> Program:
        while True:
            try:
                sub = gen.send(value)
            except StopIteration as stop:
                return Leaf(stop.value)
            if not isinstance(sub, Model):
                raise TypeError(f"model generators must yield Model values, got {type(sub).__name__}")
            prog = sub._build(sig)
            if isinstance(prog, Leaf):
                value = prog.value
                continue
            return bind(prog, advance)

    return advance(None)


def model(fn: Callable[..., Generator[Model[Any], Any, A]]) -> Callable[..., Model[A]]:
    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Model[A]:
        return Model(lambda sig: _drive(fn(*args, **kwargs), sig))

    return wrapper


def kleisli(f: Callable[[A], Model[B]], g: Callable[[B], Model[Any]]) -> Callable[[A], Model[Any]]:
    return lambda x: f(x).bind(g)


def fold_kleisli(arrows: Iterable[Callable[[Any], Model[Any]]]) -> Callable[[Any], Model[Any]]:
    """Left fold of Kleisli composition starting from ``Model.pure``; built without nesting."""
    chain = tuple(arrows)

    def composed(x: Any) -> Model[Any]:
        def build(sig: EffectSignature) -> Program:
            prog: Program = Leaf(x)
            for arrow in chain:
                prog = bind(prog, lambda value, f=arrow: f(value)._build(sig))
            return prog

        return Model(build)

    return composed


def replicate(n: int, arrow: Callable[[Any], Model[Any]]) -> list[Callable[[Any], Model[Any]]]:
    return [arrow] * n


def _call_site() -> Site:
    frame = sys._getframe(2)
    return (frame.f_code.co_filename, frame.f_lineno, frame.f_lasti)


def _observable(template: Dist, var: VarName) -> Model[Any]:
    name = var_name(var)
    tagged = replace(template, tag=name)
    ask = Ask(name, tagged.kind)

    def build(sig: EffectSignature) -> Program:
        def emit(obs: Any) -> Program:
            return call(tagged if obs is None else replace(tagged, obs=obs), sig)

        return bind(call(ask, sig), emit)

    return Model(build)


def _latent(template: Dist) -> Model[Any]:
    return Model(lambda sig: call(template, sig))


def normal(mu: float, sigma: float, var: VarName) -> Model[float]:
    return _observable(Normal(mu, sigma, site=_call_site()), var)


def normal_(mu: float, sigma: float) -> Model[float]:
    return _latent(Normal(mu, sigma, site=_call_site()))


def uniform(lo: float, hi: float, var: VarName) -> Model[float]:
    return _observable(Uniform(lo, hi, site=_call_site()), var)


def uniform_(lo: float, hi: float) -> Model[float]:
    return _latent(Uniform(lo, hi, site=_call_site()))


def bernoulli(p: float, var: VarName) -> Model[bool]:
    return _observable(Bernoulli(p, site=_call_site()), var)


def bernoulli_(p: float) -> Model[bool]:
    return _latent(Bernoulli(p, site=_call_site()))


def binomial(n: int, p: float, var: VarName) -> Model[int]:
    return _observable(Binomial(n, p, site=_call_site()), var)


def binomial_(n: int, p: float) -> Model[int]:
    return _latent(Binomial(n, p, site=_call_site()))


def beta(a: float, b: float, var: VarName) -> Model[float]:
    return _observable(Beta(a, b, site=_call_site()), var)


def beta_(a: float, b: float) -> Model[float]:
    return _latent(Beta(a, b, site=_call_site()))


def gamma(shape: float, scale: float, var: VarName) -> Model[float]:
    return _observable(Gamma(shape, scale, site=_call_site()), var)


def gamma_(shape: float, scale: float) -> Model[float]:
    return _latent(Gamma(shape, scale, site=_call_site()))


def poisson(rate: float, var: VarName) -> Model[int]:
    return _observable(Poisson(rate, site=_call_site()), var)


def poisson_(rate: float) -> Model[int]:
    return _latent(Poisson(rate, site=_call_site()))


def discrete(outcomes: Sequence[tuple[Any, float]], var: VarName) -> Model[Any]:
    return _observable(Discrete(tuple(outcomes), site=_call_site()), var)


def discrete_(outcomes: Sequence[tuple[Any, float]]) -> Model[Any]:
    return _latent(Discrete(tuple(outcomes), site=_call_site()))


def dirichlet(alphas: Sequence[float], var: VarName) -> Model[tuple[float, ...]]:
    return _observable(Dirichlet(tuple(alphas), site=_call_site()), var)


def dirichlet_(alphas: Sequence[float]) -> Model[tuple[float, ...]]:
    return _latent(Dirichlet(tuple(alphas), site=_call_site()))


def tell(chunk: Any) -> Model[None]:
    return Model(lambda sig: call(Tell(chunk), sig))


def with_writer(m: Model[A], monoid: Monoid = TUPLE_MONOID) -> Model[tuple[A, Any]]:
    """Interpret the model's ``tell`` operations before specialisation; result is ``(value, output)``."""
    return Model(lambda sig: handle_writer(m._build(sig.prepend(WRITER)), monoid))


def handle_read(env: Env, prog: Program) -> Program:
    """Answer ``Ask`` from ``env`` front to back; the result is paired with the residual environment."""
    return _handle_read(env, {}, prog)


def _handle_read(env: Env, cursors: Mapping[str, int], prog: Program) -> Program:
    while isinstance(prog, Node):
        routed = discharge_head(prog.request, OBS_READER)
        resume = prog.resume
        if isinstance(routed, Right):
            ask = routed.value
            entry = env.entry(ask.name)
            if not ask.kind.accepts(entry.kind):
                raise EnvError(f"variable {ask.name} holds {entry.kind.value} values but is read as {ask.kind.value}")
            if ask.kind is not entry.kind and not entry.values:
                raise EnvError(
                    f"variable {ask.name} is declared {entry.kind.value} with no values but is read as {ask.kind.value}"
                )
            position = cursors.get(ask.name, 0)
            value = None
            if position < len(entry.values):
                value = entry.values[position]
                cursors = {**cursors, ask.name: position + 1}
            prog = resume(value)
            continue
        return Node(routed.value, Continuation.of(lambda x, c=cursors, k=resume: _handle_read(env, c, k(x))))
    return Leaf((prog.value, residual_env(env, cursors)))


def residual_env(env: Env, cursors: Mapping[str, int]) -> Env:
    return Env(tuple(EnvEntry(e.name, e.kind, e.values[cursors.get(e.name, 0):]) for e in env))


@dataclass(frozen=True)
class AddrBook:
    """Runtime address assignment for one specialisation run.

    Untagged sites are labelled ``family!k``; ``k`` numbers the distinct call sites of
    a family in the order they are first hit.
    """

    occurrences: Mapping[str, int] = field(default_factory=dict)
    labels: Mapping[Any, str] = field(default_factory=dict)
    families: Mapping[str, int] = field(default_factory=dict)

    def assign(self, d: Dist) -> tuple[Addr, AddrBook]:
        labels, families = self.labels, self.families
        if d.tag is not None:
            tag = d.tag
        else:
            key = (d.family, d.site)
            tag = labels.get(key)
            if tag is None:
                k = families.get(d.family, 0)
                tag = f"{d.family}!{k}"
                labels = {**labels, key: tag}
                families = {**families, d.family: k + 1}
        occurrence = self.occurrences.get(tag, 0)
        book = AddrBook({**self.occurrences, tag: occurrence + 1}, labels, families)
        return Addr(tag, occurrence), book


def handle_dist(prog: Program) -> Program:
    """Rewrite each ``Dist`` request into ``Observe`` (value present) or ``Sample`` with a runtime address."""
    return _handle_dist(AddrBook(), prog)


def _handle_dist(book: AddrBook, prog: Program) -> Program:
    if isinstance(prog, Leaf):
        return prog
    routed = discharge_head(prog.request, DIST)
    resume = prog.resume
    if not isinstance(routed, Right):
        return Node(routed.value, Continuation.of(lambda x: _handle_dist(book, resume(x))))
    d = routed.value
    addr, book = book.assign(d)
    op = Sample(d, addr) if d.obs is None else Observe(d, d.obs, addr)
    rest = prog.request.signature.rest
    return Node(inject(op, rest), Continuation.of(lambda x: _handle_dist(book, resume(op.accept(x)))))


CORE_REST = EffectSignature(OBSERVE, SAMPLE)


def handle_core(env: Env, m: Model[A], rest: EffectSignature = CORE_REST) -> Program:
    """Specialise ``m`` under ``env``: a program over ``rest`` yielding ``(value, residual env)``."""
    if OBSERVE not in rest or SAMPLE not in rest:
        raise InternalError(f"specialised programs need Observe and Sample, got {rest}")
    sig = EffectSignature(OBS_READER, DIST, *rest)
    return handle_dist(handle_read(env, m.run(sig)))


@dataclass(frozen=True)
class NodeView:
    addr: Addr
    op: str
    dist: Dist
    obs: Optional[Any]


def describe(
    prog: Program,
    rng: Optional[np.random.Generator] = None,
    choose: Optional[Callable[[Dist], Any]] = None,
) -> tuple[list[NodeView], Any]:
    """Walk a specialised program, observing values and drawing samples; return its nodes and result."""
    if choose is None:
        generator = rng if rng is not None else np.random.default_rng(0)
        choose = lambda d: d.draw(generator)  # noqa: E731
    views: list[NodeView] = []
    while isinstance(prog, Node):
        op = project(prog.request, OBSERVE)
        if op is not None:
            views.append(NodeView(op.addr, "observe", op.dist, op.value))
            prog = prog.resume(op.value)
            continue
        op = project(prog.request, SAMPLE)
        if op is None:
            raise InternalError(f"describe expects a specialised program, found a {prog.request.effect} request")
        views.append(NodeView(op.addr, "sample", op.dist, None))
        prog = prog.resume(choose(op.dist))
    return views, prog.value


def render_nodes(views: Sequence[NodeView]) -> str:
    return "\n".join(f"{view.addr}\t{view.op}\t{view.dist!r}\tobs={view.obs!r}" for view in views)
