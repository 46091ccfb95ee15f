"""Exception types raised across the package."""


class DampedOscillatorError(Exception):
    """Base class for every error raised by dampedosc."""


class InvalidParameter(DampedOscillatorError, ValueError):
    pass


class UncertaintyViolation(DampedOscillatorError, ValueError):
    """The state has sigma < hbar^2/4 beyond tolerance, i.e. it is unphysical."""


class DegenerateState(DampedOscillatorError, ValueError):
    pass


class MissingBathData(DampedOscillatorError, ValueError):
    pass


class OverdampedRegime(DampedOscillatorError, ValueError):
    """No diffusion coefficients keep a state pure when omega <= |mu|."""


class CoefficientUndefined(DampedOscillatorError, ValueError):
    pass


class ConstantCoefficientsRequired(DampedOscillatorError, ValueError):
    pass


class UndampedModel(DampedOscillatorError, ValueError):
    pass


class NoSteadyState(DampedOscillatorError, ValueError):
    pass


class StepRejected(DampedOscillatorError, RuntimeError):
    pass


class AdmissibilityLost(DampedOscillatorError, RuntimeError):
    pass


class NotPure(DampedOscillatorError, ValueError):
    pass


class UnknownVariant(DampedOscillatorError, TypeError):
    pass


class InsufficientSamples(DampedOscillatorError, ValueError):
    pass


class ConfigParseError(DampedOscillatorError, ValueError):
    pass


class ConfigValidationError(DampedOscillatorError, ValueError):
    pass
