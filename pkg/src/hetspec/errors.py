"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
2 for configuration problems, 3 for parameters outside the model's regime
of validity, 4 for numerical failures.
"""


class HetspecError(Exception):
    exit_code = 4


class ConfigError(HetspecError, ValueError):
    exit_code = 2


class RegimeError(HetspecError, ValueError):
    """Inputs outside the regime where the linearized theory applies."""

    exit_code = 3


class NumericalError(HetspecError, RuntimeError):
    exit_code = 4


class NonPositiveRate(RegimeError):
    pass


class NonPositiveTemperature(RegimeError):
    pass


class RegimeViolation(RegimeError):
    def __init__(self, name, value, bound, message=None):
        self.name = name
        self.value = value
        self.bound = bound
        super().__init__(message or f"{name}={value!r} violates bound {bound}")


class DetuningNotZeroForClosedForm(RegimeError):
    pass


class BackactionTooLarge(RegimeError):
    pass


class AntiDamping(RegimeError):
    pass


class StepTooLarge(RegimeError):
    pass


class UnsupportedCombo(RegimeError):
    pass


class AsymmetricGrid(HetspecError, ValueError):
    exit_code = 2


class GridMismatch(HetspecError, ValueError):
    exit_code = 2


class WindowOutOfRange(HetspecError, ValueError):
    exit_code = 2


class MissingOutputTrace(HetspecError, ValueError):
    exit_code = 2


class DegenerateFit(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class UnstableDrift(NumericalError):
    pass


class TooFewSamples(NumericalError):
    pass
