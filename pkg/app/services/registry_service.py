from __future__ import annotations

from dataclasses import asdict, dataclass, is_dataclass
from typing import Any, Callable, Mapping, Optional

from pydantic import BaseModel, ValidationError

from app.core.dist import PrimKind
from app.core.env import Env, env_of
from app.core.errors import ConfigError
from app.core.model import Model
from app.core.schemas import CoinFlipInputs, EnvEntryModel, HmmInputs, LdaInputs, LinRegrInputs, SirInputs
from app.services.zoo_service import (
    Popl,
    coin_flip,
    hmm_modular,
    hmm_sir,
    hmm_sirs,
    hmm_sirsv,
    lda,
    lin_regr_many,
)

REAL, INT, BOOL, VEC = PrimKind.REAL, PrimKind.INT, PrimKind.BOOL, PrimKind.VEC


@dataclass(frozen=True)
class ModelSpec:
    name: str
    description: str
    inputs: type[BaseModel]
    build: Callable[[Any], Model[Any]]
    default_env: Callable[[Any], Env]

    def parse_inputs(self, raw: Optional[Mapping[str, Any]]) -> BaseModel:
        try:
            return self.inputs.model_validate(dict(raw or {}))
        except ValidationError as exc:
            raise ConfigError(f"invalid inputs for model {self.name}: {exc.errors(include_url=False)}") from exc

    def env_schema(self) -> dict[str, Any]:
        variables = [{"name": entry.name, "kind": entry.kind.value} for entry in self.default_env(self.inputs())]
        return {
            "type": "array",
            "items": EnvEntryModel.model_json_schema(),
            "variables": variables,
        }

    def describe(self) -> dict[str, Any]:
        defaults = self.inputs()
        return {
            "name": self.name,
            "description": self.description,
            "inputs_schema": self.inputs.model_json_schema(),
            "default_inputs": defaults.model_dump(),
            "default_env": self.default_env(defaults).to_json(),
            "env_schema": self.env_schema(),
        }


def _popl(inputs: SirInputs) -> Popl:
    return Popl(inputs.s, inputs.i, inputs.r, inputs.v)


def _sir_env(*extra: tuple[Any, ...]) -> Callable[[Any], Env]:
    def build(_: Any) -> Env:
        return env_of(
            ("beta", [0.7], REAL),
            ("gamma", [0.009], REAL),
            *extra,
            ("rho", [0.3], REAL),
            ("xi", [], INT),
        )

    return build


MODELS: dict[str, ModelSpec] = {
    spec.name: spec
    for spec in (
        ModelSpec(
            name="linregr",
            description="Linear regression y ~ N(mu * x + c, sigma) over the input points xs",
            inputs=LinRegrInputs,
            build=lambda inputs: lin_regr_many(inputs.xs),
            default_env=lambda inputs: env_of(("mu", [], REAL), ("c", [], REAL), ("sigma", [], REAL), ("y", [], REAL)),
        ),
        ModelSpec(
            name="hmm",
            description="Discrete HMM: latent counter stepping by Bernoulli(dx), observed through Binomial(x, dy)",
            inputs=HmmInputs,
            build=lambda inputs: hmm_modular(inputs.n, inputs.x0),
            default_env=lambda inputs: env_of(("dx", [0.5], REAL), ("dy", [0.8], REAL), ("y", [], INT)),
        ),
        ModelSpec(
            name="sir",
            description="SIR epidemic HMM with Poisson-reported infections xi",
            inputs=SirInputs,
            build=lambda inputs: hmm_sir(inputs.n, _popl(inputs)),
            default_env=_sir_env(),
        ),
        ModelSpec(
            name="sirs",
            description="SIR with resusceptibility (recovered return to susceptible at rate eta)",
            inputs=SirInputs,
            build=lambda inputs: hmm_sirs(inputs.n, _popl(inputs)),
            default_env=_sir_env(("eta", [0.05], REAL)),
        ),
        ModelSpec(
            name="sirsv",
            description="SIRS with vaccination (susceptible become vaccinated at rate omega)",
            inputs=SirInputs,
            build=lambda inputs: hmm_sirsv(inputs.n, _popl(inputs)),
            default_env=_sir_env(("eta", [0.05], REAL), ("omega", [0.02], REAL)),
        ),
        ModelSpec(
            name="coinflip",
            description="p ~ Uniform(0, 1); y ~ Bernoulli(p)",
            inputs=CoinFlipInputs,
            build=lambda inputs: coin_flip(),
            default_env=lambda inputs: env_of(("p", [], REAL), ("y", [], BOOL)),
        ),
        ModelSpec(
            name="lda",
            description="Latent Dirichlet allocation for one document over a fixed vocabulary",
            inputs=LdaInputs,
            build=lambda inputs: lda(inputs.vocabulary, inputs.topic_count, inputs.doc_length),
            default_env=lambda inputs: env_of(("phi", [], VEC), ("theta", [], VEC), ("w", [], INT)),
        ),
    )
}


def get_model_spec(name: str) -> ModelSpec:
    spec = MODELS.get(name.strip().lower())
    if spec is None:
        raise ConfigError(f"unknown model {name!r}; available: {', '.join(sorted(MODELS))}")
    return spec


def list_models() -> list[dict[str, Any]]:
    return [spec.describe() for spec in MODELS.values()]


def jsonable_result(value: Any) -> Any:
    if is_dataclass(value) and not isinstance(value, type):
        return asdict(value)
    if isinstance(value, (list, tuple)):
        return [jsonable_result(item) for item in value]
    if isinstance(value, dict):
        return {str(key): jsonable_result(item) for key, item in value.items()}
    return value
