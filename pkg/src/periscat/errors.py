"""Exception types shared across the package."""


class PeriscatError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(PeriscatError):
    """Invalid or inconsistent configuration (bad schema, singular Gram matrix, ...)."""


class GeometryError(PeriscatError):
    """Geometric preconditions violated (artificial boundary too low, degenerate map, ...)."""


class InvalidPerturbationError(GeometryError):
    """Perturbation makes the domain transformation lose bijectivity."""


class SolverError(PeriscatError):
    """Linear or outer solver failed to reach its tolerance."""

    def __init__(self, message, residual=None, alpha_index=None):
        super().__init__(message)
        self.residual = residual
        self.alpha_index = alpha_index


class AnomalyError(PeriscatError):
    """Parameter combination hits (or grazes) a Wood anomaly."""


class InterfaceError(PeriscatError):
    """Mismatched discrete interfaces (abscissas, node sets, stale caches)."""


class AmbiguousLocatorError(PeriscatError):
    """Cell locator found several cells tied for the indicator maximum."""

    def __init__(self, message, tied_cells=()):
        super().__init__(message)
        self.tied_cells = tuple(tied_cells)
