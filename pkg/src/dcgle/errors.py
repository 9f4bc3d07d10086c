"""Exception and warning types raised across the package."""


class DcgleError(Exception):
    """Base class for all package errors."""


class NoRealAmplitude(DcgleError, ValueError):
    """The requested point has no real nonnegative plane-wave amplitude."""


class DegenerateSpectrum(DcgleError, ValueError):
    """A pseudo-continuous spectrum was requested with zero feedback."""


class DegenerateBranch(DcgleError, ValueError):
    """The long-wave expansion is singular (C1 = 0)."""


class InadmissibleWavenumber(DcgleError, ValueError):
    """Wavenumber is not an integer multiple of 2*pi/L."""


class StepSizeUnderflow(DcgleError, RuntimeError):
    """Adaptive step size collapsed below the allowed minimum."""


class NonFiniteField(DcgleError, FloatingPointError):
    """Integration produced NaN or Inf; ``last_state`` holds the last good field."""

    def __init__(self, message, t=None, last_state=None):
        super().__init__(message)
        self.t = t
        self.last_state = last_state


class ConfigError(DcgleError, ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownKey(ConfigError):
    def __init__(self, key, section=None):
        where = f" in [{section}]" if section else ""
        super().__init__(f"unknown key {key!r}{where}")
        self.key = key


class RangeError(ConfigError):
    def __init__(self, key, value, reason):
        super().__init__(f"{key} = {value!r}: {reason}")
        self.key = key


class SchemaMismatch(DcgleError, ValueError):
    """CSV columns do not match what a plot script expects."""


class ResolutionWarning(UserWarning):
    """Root scan may have missed a closely spaced pair of roots."""


class SeedingWarning(UserWarning):
    """Most Newton seeds collapsed onto the same root."""
