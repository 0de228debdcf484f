"""Exception types shared by the qite_lab modules.

main.py maps them onto exit codes: input and configuration problems exit
with status 2, numerical aborts with status 1.
"""


class QiteError(Exception):
    """Base class for every error raised by qite_lab."""


class ConfigError(QiteError, ValueError):
    """Invalid, unknown or missing run-configuration value."""


class InputFormatError(QiteError, ValueError):
    """A data file (Pauli text, FCIDUMP) could not be parsed."""


class PauliParseError(InputFormatError):
    pass


class FcidumpError(InputFormatError):
    pass


class DimensionError(QiteError, ValueError):
    """Qubit counts or matrix shapes do not agree."""


class NumericalError(QiteError, RuntimeError):
    """A numerical procedure cannot continue with the requested parameters."""


class SeriesNotConverged(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NormEstimateError(NumericalError):
    pass


class SingularOverlapError(NumericalError):
    pass
