"""Exception types raised by the market simulation layers.

Everything derives from :class:`MarketError` so callers can catch the
whole family at once; the CLI maps subfamilies onto exit codes.
"""


class MarketError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveInput(MarketError):
    """A budget or valuation entry was zero or negative."""


class DimensionMismatch(MarketError):
    """Array shapes are inconsistent with the market dimensions."""


class ZeroPrice(MarketError):
    """An operation that divides by prices saw a zero price."""


class ZeroUtility(MarketError):
    """A buyer received zero utility where positive utility is required."""


class ZeroUtilityRow(MarketError):
    """A buyer's bid update had no positive weight on any item."""


class NonPositiveBid(MarketError):
    """A bid entry was zero or negative where positivity is required."""


class NonPositivePrice(MarketError):
    """A price entry was zero or negative where positivity is required."""


class SupportMismatch(MarketError):
    """Divergence between distributions with incompatible supports."""


class ConvergenceFailure(MarketError):
    """An iterative solve hit its iteration cap before reaching tolerance.

    Carries the last residual seen (``last_residual``) when available.
    """

    def __init__(self, message, last_residual=None):
        super().__init__(message)
        self.last_residual = last_residual


class InvalidModelParams(MarketError):
    """Noise-model parameters are outside their valid ranges."""


class BaselineMismatch(MarketError):
    """Trajectory and equilibrium were computed against different baselines."""


class IndexOutOfRange(MarketError, IndexError):
    """A buyer or item index fell outside the market's dimensions."""


class NonPositiveSeries(MarketError):
    """Log-log fitting needs strictly positive inputs."""


class ConfigError(MarketError):
    """Experiment configuration is missing, malformed, or inconsistent."""
