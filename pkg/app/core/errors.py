from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODEL = 3
EXIT_INTERNAL = 4


class ConfigError(ValueError):
    """Invalid run configuration: unknown model, bad flags, malformed env JSON."""


class ModelError(ValueError):
    """A model could not be executed under the given environment."""


class DistParamError(ModelError):
    pass


class EnvError(ModelError):
    pass


class NothingToInferError(ModelError):
    def __init__(self, message: str = "nothing to infer: the model has no sample sites under this environment") -> None:
        super().__init__(message)


class InternalError(RuntimeError):
    """A handler stack or program invariant was violated. Never caused by user input."""


class MembershipError(InternalError):
    pass


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, ModelError):
        return EXIT_MODEL
    return EXIT_INTERNAL
