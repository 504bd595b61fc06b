"""Exception types raised across katolab."""


class KatolabError(ValueError):
    """Base class for every error raised on invalid numerical input."""


class SpectralError(KatolabError):
    """Spectral hypotheses (gaps, endpoints, degeneracy) are violated."""


class HypothesisError(KatolabError):
    """A theorem's hypothesis does not hold for the supplied data."""


class IntegratorError(KatolabError):
    """Time stepping lost unitarity or otherwise diverged."""
