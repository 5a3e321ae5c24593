"""Exception types shared across the package."""


class SacError(Exception):
    pass


class DimensionMismatch(SacError, ValueError):
    pass


class InvalidParticleSet(SacError, ValueError):
    """Hidden-particle coordinates violate the unit-norm constraint."""


class NonPhysicalState(SacError, ValueError):
    """A reconstructed density matrix has eigenvalues below tolerance."""


class NotUnitary(SacError, ValueError):
    pass


class NotHermitian(SacError, ValueError):
    pass


class InvariantViolation(SacError, RuntimeError):
    """A conserved quantity drifted beyond tolerance during a run."""
