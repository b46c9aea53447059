"""Primitive distribution families.

Each family is a frozen dataclass validated on construction. ``obs`` is checked
against the family's base kind only: an observed value outside the support is
legal and scores ``-inf``.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar, Optional

import numpy as np
from scipy.special import betaln, gammaln, xlog1py, xlogy

from app.core.constants import BINOMIAL_MAX_N, SIMPLEX_TOLERANCE
from app.core.errors import DistParamError, InternalError
from app.core.prog import Effect, Operation

DIST = Effect("Dist")
NEG_INF = float("-inf")
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class PrimKind(str, Enum):
    REAL = "real"
    INT = "int"
    BOOL = "bool"
    VEC = "vec"

    def accepts(self, other: PrimKind) -> bool:
        return self is other or (self is PrimKind.REAL and other is PrimKind.INT)

    def coerce(self, value: Any) -> Any:
        if self is PrimKind.REAL:
            return float(value)
        if self is PrimKind.INT:
            return int(value)
        if self is PrimKind.BOOL:
            return bool(value)
        return tuple(float(x) for x in value)


def kind_of(value: Any) -> Optional[PrimKind]:
    if isinstance(value, (bool, np.bool_)):
        return PrimKind.BOOL
    if isinstance(value, numbers.Integral):
        return PrimKind.INT
    if isinstance(value, numbers.Real):
        return PrimKind.REAL
    if isinstance(value, (tuple, list, np.ndarray)):
        if all(kind_of(x) in (PrimKind.REAL, PrimKind.INT) for x in value):
            return PrimKind.VEC
    return None


def _log(x: float) -> float:
    return math.log(x) if x > 0 else NEG_INF


def _real(name: str, value: Any, family: str) -> float:
    if kind_of(value) not in (PrimKind.REAL, PrimKind.INT) or not math.isfinite(value):
        raise DistParamError(f"{family}: parameter {name} must be a finite real, got {value!r}")
    return float(value)


def _probability(name: str, value: Any, family: str) -> float:
    p = _real(name, value, family)
    if not 0.0 <= p <= 1.0:
        raise DistParamError(f"{family}: parameter {name} must lie in [0, 1], got {p}")
    return p


def _positive(name: str, value: Any, family: str) -> float:
    x = _real(name, value, family)
    if x <= 0.0:
        raise DistParamError(f"{family}: parameter {name} must be > 0, got {x}")
    return x


@dataclass(frozen=True, kw_only=True)
class Dist(Operation):
    obs: Optional[Any] = None
    tag: Optional[str] = None
    site: Optional[tuple[str, int]] = field(default=None, compare=False, repr=False)

    family: ClassVar[str] = "dist"
    base_kind: ClassVar[PrimKind] = PrimKind.REAL
    effect: ClassVar[Effect] = DIST

    def __post_init__(self) -> None:
        self.validate()
        if self.obs is not None:
            kind = kind_of(self.obs)
            if kind is None or not self.kind.accepts(kind):
                raise DistParamError(
                    f"{self.family}: observed value {self.obs!r} for {self.tag or 'untagged site'} is not of kind {self.kind.value}"
                )
            object.__setattr__(self, "obs", self.kind.coerce(self.obs))

    @property
    def kind(self) -> PrimKind:
        return self.base_kind

    def validate(self) -> None:
        pass

    def draw(self, rng: np.random.Generator) -> Any:
        raise NotImplementedError

    def log_density(self, value: Any) -> float:
        raise NotImplementedError

    def accept(self, value: Any) -> Any:
        kind = kind_of(value)
        if kind is None or not self.kind.accepts(kind):
            raise InternalError(f"{self.family} request answered with {value!r}, expected kind {self.kind.value}")
        return value


@dataclass(frozen=True)
class Normal(Dist):
    mu: float
    sigma: float
    family: ClassVar[str] = "normal"

    def validate(self) -> None:
        _real("mu", self.mu, self.family)
        _positive("sigma", self.sigma, self.family)

    def draw(self, rng: np.random.Generator) -> float:
        return float(rng.normal(self.mu, self.sigma))

    def log_density(self, value: float) -> float:
        z = (value - self.mu) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - _HALF_LOG_2PI


@dataclass(frozen=True)
class Uniform(Dist):
    lo: float
    hi: float
    family: ClassVar[str] = "uniform"

    def validate(self) -> None:
        lo = _real("lo", self.lo, self.family)
        hi = _real("hi", self.hi, self.family)
        if not lo < hi:
            raise DistParamError(f"{self.family}: lo must be < hi, got lo={lo} hi={hi}")

    def draw(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.lo, self.hi))

    def log_density(self, value: float) -> float:
        if self.lo <= value <= self.hi:
            return -math.log(self.hi - self.lo)
        return NEG_INF


@dataclass(frozen=True)
class Bernoulli(Dist):
    p: float
    family: ClassVar[str] = "bernoulli"
    base_kind: ClassVar[PrimKind] = PrimKind.BOOL

    def validate(self) -> None:
        _probability("p", self.p, self.family)

    def draw(self, rng: np.random.Generator) -> bool:
        return bool(rng.random() < self.p)

    def log_density(self, value: bool) -> float:
        return _log(self.p) if value else _log(1.0 - self.p)


@dataclass(frozen=True)
class Binomial(Dist):
    n: int
    p: float
    family: ClassVar[str] = "binomial"
    base_kind: ClassVar[PrimKind] = PrimKind.INT

    def validate(self) -> None:
        if kind_of(self.n) is not PrimKind.INT or self.n < 0:
            raise DistParamError(f"{self.family}: parameter n must be a nonnegative integer, got {self.n!r}")
        if self.n > BINOMIAL_MAX_N:
            raise DistParamError(f"{self.family}: parameter n={self.n} exceeds the supported maximum {BINOMIAL_MAX_N}")
        _probability("p", self.p, self.family)

    def draw(self, rng: np.random.Generator) -> int:
        return int(rng.binomial(self.n, self.p))

    def log_density(self, value: int) -> float:
        if value < 0 or value > self.n:
            return NEG_INF
        n, k = self.n, value
        return float(
            gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1) + xlogy(k, self.p) + xlog1py(n - k, -self.p)
        )


@dataclass(frozen=True)
class Beta(Dist):
    a: float
    b: float
    family: ClassVar[str] = "beta"

    def validate(self) -> None:
        _positive("a", self.a, self.family)
        _positive("b", self.b, self.family)

    def draw(self, rng: np.random.Generator) -> float:
        return float(rng.beta(self.a, self.b))

    def log_density(self, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            return NEG_INF
        return float(xlogy(self.a - 1.0, value) + xlog1py(self.b - 1.0, -value) - betaln(self.a, self.b))


@dataclass(frozen=True)
class Gamma(Dist):
    shape: float
    scale: float
    family: ClassVar[str] = "gamma"

    def validate(self) -> None:
        _positive("shape", self.shape, self.family)
        _positive("scale", self.scale, self.family)

    def draw(self, rng: np.random.Generator) -> float:
        return float(rng.gamma(self.shape, self.scale))

    def log_density(self, value: float) -> float:
        if value < 0.0:
            return NEG_INF
        return float(
            xlogy(self.shape - 1.0, value) - value / self.scale - gammaln(self.shape) - self.shape * math.log(self.scale)
        )


@dataclass(frozen=True)
class Poisson(Dist):
    rate: float
    family: ClassVar[str] = "poisson"
    base_kind: ClassVar[PrimKind] = PrimKind.INT

    def validate(self) -> None:
        rate = _real("rate", self.rate, self.family)
        if rate < 0.0:
            raise DistParamError(f"{self.family}: parameter rate must be >= 0, got {rate}")

    def draw(self, rng: np.random.Generator) -> int:
        if self.rate == 0:
            return 0
        return int(rng.poisson(self.rate))

    def log_density(self, value: int) -> float:
        if value < 0:
            return NEG_INF
        return float(xlogy(value, self.rate) - self.rate - gammaln(value + 1))


@dataclass(frozen=True)
class Discrete(Dist):
    outcomes: tuple[tuple[Any, float], ...]
    probs: tuple[float, ...] = field(init=False, repr=False, compare=False)
    family: ClassVar[str] = "discrete"

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcomes", tuple((value, weight) for value, weight in self.outcomes))
        super().__post_init__()

    @property
    def kind(self) -> PrimKind:
        return kind_of(self.outcomes[0][0])

    def validate(self) -> None:
        if not self.outcomes:
            raise DistParamError(f"{self.family}: needs at least one outcome")
        kinds = {kind_of(value) for value, _ in self.outcomes}
        if len(kinds) != 1 or None in kinds:
            raise DistParamError(f"{self.family}: outcome values must share one primitive kind, got {sorted(map(str, kinds))}")
        weights = [_real("weight", weight, self.family) for _, weight in self.outcomes]
        if any(weight < 0.0 for weight in weights):
            raise DistParamError(f"{self.family}: weights must be >= 0, got {weights}")
        total = math.fsum(weights)
        if total <= 0.0:
            raise DistParamError(f"{self.family}: weights must not all be zero")
        object.__setattr__(self, "probs", tuple(weight / total for weight in weights))

    def draw(self, rng: np.random.Generator) -> Any:
        index = int(rng.choice(len(self.outcomes), p=self.probs))
        return self.outcomes[index][0]

    def log_density(self, value: Any) -> float:
        mass = math.fsum(prob for (candidate, _), prob in zip(self.outcomes, self.probs) if candidate == value)
        return _log(mass)


@dataclass(frozen=True)
class Dirichlet(Dist):
    alphas: tuple[float, ...]
    family: ClassVar[str] = "dirichlet"
    base_kind: ClassVar[PrimKind] = PrimKind.VEC

    def __post_init__(self) -> None:
        object.__setattr__(self, "alphas", tuple(self.alphas))
        super().__post_init__()

    def validate(self) -> None:
        if len(self.alphas) < 2:
            raise DistParamError(f"{self.family}: needs at least two concentration parameters")
        for alpha in self.alphas:
            _positive("alpha", alpha, self.family)

    def draw(self, rng: np.random.Generator) -> tuple[float, ...]:
        return tuple(float(x) for x in rng.dirichlet(self.alphas))

    def log_density(self, value: Any) -> float:
        xs = np.asarray(value, dtype=float)
        if xs.shape != (len(self.alphas),) or np.any(xs < 0.0) or abs(xs.sum() - 1.0) > SIMPLEX_TOLERANCE:
            return NEG_INF
        alphas = np.asarray(self.alphas, dtype=float)
        return float(gammaln(alphas.sum()) - gammaln(alphas).sum() + xlogy(alphas - 1.0, xs).sum())


def sample(d: Dist, rng: np.random.Generator) -> Any:
    return d.draw(rng)


def log_prob(d: Dist, value: Any) -> float:
    kind = kind_of(value)
    if kind is None or not d.kind.accepts(kind):
        raise DistParamError(f"{d.family}: cannot score {value!r}, expected a value of kind {d.kind.value}")
    return d.log_density(value)


def get_obs(d: Dist) -> Optional[Any]:
    return d.obs
