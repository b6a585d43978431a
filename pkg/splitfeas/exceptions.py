class Error(Exception):
    pass


class SplitFeasibilityWarning(UserWarning):
    pass


class InterfaceError(Error):
    pass


class DimensionError(InterfaceError, ValueError):
    def __init__(self, what, expected, actual):
        self.what = what
        self.expected = expected
        self.actual = actual
        super(DimensionError, self).__init__(
            "Dimension mismatch for {0}: expected length {1}, got {2}".format(
                what, expected, actual
            )
        )


class DataError(Error, ValueError):
    pass


class SetSpecError(DataError):
    pass


class ProblemFormatError(DataError):
    pass


class ConfigError(Error, ValueError):
    pass


class RequirementError(Error):
    def __init__(self, message, report=None):
        self.report = report
        super(RequirementError, self).__init__(message)


class NumericalError(Error):
    pass


class SubproblemError(NumericalError):
    def __init__(self, subproblem, message):
        self.subproblem = subproblem
        super(SubproblemError, self).__init__(
            "{0} subproblem: {1}".format(subproblem, message)
        )


class GeneratorError(Error, ValueError):
    pass


class CertificateError(Error):
    pass
