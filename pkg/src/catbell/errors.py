"""Exception hierarchy shared by every catbell module."""


class CatBellError(Exception):
    """Base class for all catbell errors."""


class DegenerateState(CatBellError, ValueError):
    """The two branches of the cat superposition cancel; no normalizable state."""


class CutoffTooSmall(CatBellError, ValueError):
    """The Fock cutoff cannot represent the requested displacements accurately."""


class DimensionMismatch(CatBellError, ValueError):
    pass


class EmptyScan(CatBellError, ValueError):
    pass


class DegenerateRegion(CatBellError, ValueError):
    """Every optimizer start point lies on a degenerate state."""


class ConsistencyError(CatBellError, ArithmeticError):
    """A hard numerical bound was breached. This signals a bug, not physics."""


class TsirelsonViolation(ConsistencyError):
    pass


class CertificationError(ConsistencyError):
    """Closed form and Fock oracle disagree on a reported optimum."""
