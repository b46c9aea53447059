"""Example models: linear regression, HMMs, the SIR family, coin flip and LDA."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Callable, Sequence, TypeVar

from app.core.errors import ModelError
from app.core.model import (
    Model,
    bernoulli,
    bernoulli_,
    beta,
    binomial,
    binomial_,
    dirichlet,
    discrete,
    discrete_,
    fold_kleisli,
    gamma,
    model,
    normal,
    poisson,
    replicate,
    tell,
    uniform,
    with_writer,
)

P = TypeVar("P")
L = TypeVar("L")

TransModel = Callable[[Any, Any], Model[Any]]
ObsModel = Callable[[Any, Any], Model[Any]]


@model
def lin_regr(x: float):
    mu = yield normal(0, 3, "mu")
    c = yield normal(0, 2, "c")
    sigma = yield uniform(1, 3, "sigma")
    y = yield normal(mu * x + c, sigma, "y")
    return y


@model
def lin_regr_many(xs: Sequence[float]):
    """One slope, intercept and noise level shared by every data point."""
    mu = yield normal(0, 3, "mu")
    c = yield normal(0, 2, "c")
    sigma = yield uniform(1, 3, "sigma")
    ys = []
    for x in xs:
        y = yield normal(mu * x + c, sigma, "y")
        ys.append(y)
    return ys


@model
def coin_flip():
    p = yield uniform(0, 1, "p")
    y = yield bernoulli(p, "y")
    return y


@model
def hmm_monolithic(n: int, x0: int):
    dx = yield uniform(0, 1, "dx")
    dy = yield uniform(0, 1, "dy")
    x = x0
    for _ in range(n):
        step = yield bernoulli_(dx)
        x = x + int(step)
        yield binomial(x, dy, "y")
    return x


def trans_model(dx: float, x: int) -> Model[int]:
    return bernoulli_(dx).map(lambda step: x + int(step))


def obs_model(dy: float, x: int) -> Model[int]:
    return binomial(x, dy, "y")


def hmm_node(dx: float, dy: float) -> Callable[[int], Model[int]]:
    def node(x: int) -> Model[int]:
        return trans_model(dx, x).bind(lambda x_next: obs_model(dy, x_next).map(lambda _: x_next))

    return node


@model
def hmm_modular(n: int, x0: int):
    dx = yield uniform(0, 1, "dx")
    dy = yield uniform(0, 1, "dy")
    x = yield fold_kleisli(replicate(n, hmm_node(dx, dy)))(x0)
    return x


@model
def hmm(
    trans_prior: Model[P],
    obs_prior: Model[Any],
    trans: TransModel,
    obs: ObsModel,
    n: int,
    x0: L,
):
    """Higher-order HMM: parameters from the priors, then ``n`` transition/observation nodes."""
    theta = yield trans_prior
    phi = yield obs_prior

    def node(x: L) -> Model[L]:
        return trans(theta, x).bind(lambda x_next: obs(phi, x_next).map(lambda _: x_next))

    x = yield fold_kleisli(replicate(n, node))(x0)
    return x


def hmm_generic(n: int, x0: int) -> Model[int]:
    """The discrete HMM expressed through the higher-order ``hmm``."""
    return hmm(uniform(0, 1, "dx"), uniform(0, 1, "dy"), trans_model, obs_model, n, x0)


@dataclass(frozen=True)
class Popl:
    s: int
    i: int
    r: int
    v: int = 0

    def __post_init__(self) -> None:
        if min(self.s, self.i, self.r, self.v) < 0:
            raise ModelError(f"population counts must be nonnegative, got {self}")

    @property
    def total(self) -> int:
        return self.s + self.i + self.r + self.v


@dataclass(frozen=True)
class TransParams:
    beta: float
    gamma: float
    eta: float = 0.0
    omega: float = 0.0


def trans_si(contact: float, popl: Popl) -> Model[Popl]:
    n = popl.total
    p = 1.0 - math.exp(-contact * popl.i / n) if n > 0 else 0.0
    return binomial_(popl.s, p).map(lambda d: replace(popl, s=popl.s - d, i=popl.i + d))


def trans_ir(recovery: float, popl: Popl) -> Model[Popl]:
    return binomial_(popl.i, 1.0 - math.exp(-recovery)).map(lambda d: replace(popl, i=popl.i - d, r=popl.r + d))


def trans_rs(resusceptible: float, popl: Popl) -> Model[Popl]:
    return binomial_(popl.r, 1.0 - math.exp(-resusceptible)).map(lambda d: replace(popl, s=popl.s + d, r=popl.r - d))


def trans_sv(vaccination: float, popl: Popl) -> Model[Popl]:
    return binomial_(popl.s, 1.0 - math.exp(-vaccination)).map(lambda d: replace(popl, s=popl.s - d, v=popl.v + d))


def _stages(params: TransParams, extensions: Sequence[str]) -> list[Callable[[Popl], Model[Popl]]]:
    stages = [lambda popl: trans_si(params.beta, popl), lambda popl: trans_ir(params.gamma, popl)]
    if "rs" in extensions:
        stages.append(lambda popl: trans_rs(params.eta, popl))
    if "sv" in extensions:
        stages.append(lambda popl: trans_sv(params.omega, popl))
    return stages


def trans_sir(params: TransParams, popl: Popl, extensions: Sequence[str] = (), record: bool = False) -> Model[Popl]:
    """One day: s->i then i->r, optionally r->s and s->v; ``record`` tells each new population."""
    day = fold_kleisli(_stages(params, extensions))(popl)
    if record:
        return day.bind(lambda popl_next: tell((popl_next,)).map(lambda _: popl_next))
    return day


def obs_sir(rho: float, popl: Popl) -> Model[int]:
    return poisson(rho * popl.i, "xi")


@model
def trans_prior_sir(extensions: Sequence[str] = ()):
    contact = yield gamma(2, 1, "beta")
    recovery = yield gamma(1, 1 / 8, "gamma")
    resusceptible = 0.0
    vaccination = 0.0
    if "rs" in extensions:
        resusceptible = yield gamma(1, 1 / 8, "eta")
    if "sv" in extensions:
        vaccination = yield gamma(1, 1 / 8, "omega")
    return TransParams(contact, recovery, resusceptible, vaccination)


def obs_prior_sir() -> Model[float]:
    return beta(2, 7, "rho")


def hmm_sir(n: int, sir0: Popl, extensions: Sequence[str] = (), record: bool = False) -> Model[Popl]:
    return hmm(
        trans_prior_sir(tuple(extensions)),
        obs_prior_sir(),
        lambda params, popl: trans_sir(params, popl, extensions, record),
        obs_sir,
        n,
        sir0,
    )


def hmm_sirs(n: int, sir0: Popl) -> Model[Popl]:
    return hmm_sir(n, sir0, ("rs",))


def hmm_sirsv(n: int, sir0: Popl) -> Model[Popl]:
    return hmm_sir(n, sir0, ("rs", "sv"))


def hmm_sir_recorded(n: int, sir0: Popl, extensions: Sequence[str] = ()) -> Model[tuple[Popl, tuple[Popl, ...]]]:
    """SIR HMM returning ``(final population, population after each day)``."""
    return with_writer(hmm_sir(n, sir0, extensions, record=True))


@model
def lda(vocabulary: Sequence[Any], topic_count: int, doc_length: int):
    """Smoothed LDA for one document; words are drawn from ``vocabulary``."""
    size = len(vocabulary)
    phis = []
    for _ in range(topic_count):
        phi = yield dirichlet([1.0] * size, "phi")
        phis.append(phi)
    if topic_count == 1:
        theta = (1.0,)
    else:
        theta = yield dirichlet([1.0] * topic_count, "theta")
    words = []
    for _ in range(doc_length):
        topic = yield discrete_(list(zip(range(topic_count), theta)))
        word = yield discrete(list(zip(range(size), phis[topic])), "w")
        words.append(vocabulary[word])
    return words
