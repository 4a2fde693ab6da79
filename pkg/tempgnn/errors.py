class TempGNNError(Exception):
    exit_code = 2

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ConfigError(TempGNNError):
    pass


class DataError(TempGNNError):

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = "line {}: {}".format(line, message)
        super().__init__(message)
        self.line = line


class EmptyCorpusError(DataError):
    pass


class AllTestError(DataError):
    pass


class VocabularyError(DataError):
    pass


class CheckpointError(TempGNNError):
    pass


class DimensionError(TempGNNError, ValueError):
    pass


class DomainError(TempGNNError, ValueError):
    pass


class DegenerateInputError(TempGNNError, ValueError):
    pass


class NumericalAbort(TempGNNError):
    exit_code = 3


class EvaluationError(NumericalAbort):
    pass


class BucketWarning(UserWarning):
    pass
