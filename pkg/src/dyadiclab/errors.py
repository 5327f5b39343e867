"""Exception types shared across the package."""


class AmbientRangeError(ValueError):
    """Geometry fell outside the ambient cube or the level range."""


class MeshDepthError(ValueError):
    """An operation required scales finer than the mesh resolves."""


class ResourceLimitError(RuntimeError):
    """An exhaustive enumeration would exceed its configured cap."""


class DegenerateInputError(ValueError):
    """A zero-norm input where a ratio is required."""


class SparsityError(ValueError):
    """A cube collection violated the sparseness contract."""


class AdaptednessError(ValueError):
    """A function family violated support, constancy, or cancellation."""


class InsufficientDataError(RuntimeError):
    """Too few usable data points for a fit."""
