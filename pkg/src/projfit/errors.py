"""Exception types shared across the package."""


class ProjfitError(Exception):
    """Base class for all package-specific errors."""


class InvalidDispersion(ProjfitError):
    """Dispersion ratio must exceed 1 (the equidispersed limit is excluded)."""


class InvalidGrid(ProjfitError):
    """A parameter grid is empty or does not cover the family box."""


class InvalidSet(ProjfitError):
    """A set operation received an empty parameter set."""


class InsufficientData(ProjfitError):
    """Too few observations for the requested operation."""


class BoundViolation(ProjfitError):
    """A statistic value exceeds the declared uniform bound (or is not finite)."""


class DegenerateVariance(ProjfitError):
    """Studentized rule with zero empirical spread and no corruption noise."""


class InvalidSplit(ProjfitError):
    """Variance-estimation budget must be strictly smaller than the test level."""


class NumericalError(ProjfitError):
    """A numerical search failed to converge; carries diagnostics in args."""


class UnsupportedDomain(ProjfitError):
    """Distribution support is incompatible with the requested operation."""


class InvalidCenter(ProjfitError):
    """Ray-search center lies outside the family's parameter box."""
