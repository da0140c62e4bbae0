"""Exception types shared across the package."""


class BolabError(Exception):
    """Base class for all package errors."""


class RealPole(BolabError, ValueError):
    pass


class DegreeViolation(BolabError, ValueError):
    pass


class PoleHit(BolabError, ValueError):
    pass


class NonDecaying(BolabError, ValueError):
    pass


class PoleCollision(BolabError, ValueError):
    pass


class DegreeCollapse(BolabError, ValueError):
    pass


class NoConvergence(BolabError, RuntimeError):
    """Root iteration did not converge; ``partial`` holds the last iterate."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class SingularSystem(BolabError, RuntimeError):
    pass


class DegenerateSystem(BolabError, RuntimeError):
    pass


class NoNegativeEigenvalue(BolabError, RuntimeError):
    pass


class BlowUp(BolabError, RuntimeError):
    pass
