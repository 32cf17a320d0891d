"""Exception types shared across the package."""


class PetforestError(Exception):
    """Base class for errors raised by this package."""


class DataError(PetforestError):
    """A dataset could not be loaded, filtered, or split as requested."""


class ModelFormatError(PetforestError):
    """A model file is corrupt, truncated, or has an unsupported version."""


class UsageError(PetforestError):
    """Command-line arguments are missing, malformed, or contradictory."""
