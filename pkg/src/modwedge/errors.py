"""Exception types raised by modwedge."""


class ModwedgeError(Exception):
    """Base class for all library errors."""


class InvalidGluing(ModwedgeError):
    pass


class EmptyComplex(ModwedgeError):
    pass


class DegreeOutOfRange(ModwedgeError):
    pass


class DegreeMismatch(ModwedgeError):
    pass


class TopDegree(ModwedgeError):
    pass


class UnsupportedBoundary(ModwedgeError):
    """Operation needs a fully periodic, uniformly spaced complex."""


class TorsionClass(ModwedgeError):
    """The class vanishes in real homology (torsion or zero)."""


class SingularPairing(ModwedgeError):
    pass


class UnsupportedClass(ModwedgeError):
    pass


class Disconnected(ModwedgeError):
    pass


class ResolutionTooCoarse(ModwedgeError):
    pass


class UnknownScene(ModwedgeError):
    pass


class ConfigError(ModwedgeError):
    pass


class NoConvergence(ModwedgeError):
    """Raised only in strict mode; carries the unconverged result."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
