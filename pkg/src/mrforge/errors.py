"""Exception hierarchy shared by the library and the command line."""


class MRForgeError(RuntimeError):
    exit_code = 1

    def as_dict(self) -> dict:
        return {
            "error": self.__class__.__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class ConfigError(MRForgeError):
    exit_code = 2


class IncompatibleRuns(ConfigError):
    pass


class CorpusError(MRForgeError):
    exit_code = 3

    def __init__(self, message: str, lines: list[int] | None = None):
        super().__init__(message)
        self.lines = lines or []

    def as_dict(self) -> dict:
        return super().as_dict() | {"lines": self.lines}


class ExecutorError(MRForgeError):
    exit_code = 4


class ExecutorUnavailable(ExecutorError):
    pass


class MalformedResponse(ExecutorError):
    pass


# perturb


class PerturbationError(MRForgeError):
    pass


class UnknownPerturbation(PerturbationError, KeyError):
    pass


class EmptyInput(PerturbationError, ValueError):
    pass


class IntensityOutOfRange(PerturbationError, ValueError):
    pass


class EmptyResultError(PerturbationError):
    """The text is too short for the edit to leave anything behind."""


# mrspace


class CompositionFailed(MRForgeError):
    pass


class InsufficientCatalog(MRForgeError):
    pass


class InvalidGroup(MRForgeError, ValueError):
    pass


# fitness / search / analysis


class EmptyEvaluation(MRForgeError):
    pass


class EmptyPopulation(MRForgeError):
    pass


class CacheConflict(MRForgeError):
    pass


class PointBeyondReference(MRForgeError, ValueError):
    pass


class DegenerateSamples(MRForgeError):
    pass


class CacheCorruption(MRForgeError):
    pass


class DegenerateEmbedding(MRForgeError):
    pass
