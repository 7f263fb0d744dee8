class NumericalFailure(RuntimeError):
    """A numerical kernel did not converge or produced an inconsistent result."""


class GeometryError(RuntimeError):
    """Exact tiling geometry violated an edge-to-edge or dedup contract."""
