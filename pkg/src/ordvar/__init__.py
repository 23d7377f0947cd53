"""Improved estimation of ordered normal scale parameters under bowl-shaped losses."""

__version__ = "0.1.0"

from .errors import BracketError, ConvergenceError, DomainError, OrdvarError  # noqa: E402
from .losses import ENTROPY, QUADRATIC, SYMMETRIC, LossSpec, custom_loss, linex, parse_loss  # noqa: E402
from .constants import baee_constant, equivariant_constant, stein_constants  # noqa: E402
from .estimators import Target, TwoSampleSummary, Variant, estimate  # noqa: E402

__all__ = [
    "__version__", "OrdvarError", "DomainError", "BracketError", "ConvergenceError",
    "LossSpec", "QUADRATIC", "ENTROPY", "SYMMETRIC", "linex", "custom_loss", "parse_loss",
    "equivariant_constant", "baee_constant", "stein_constants",
    "Target", "TwoSampleSummary", "Variant", "estimate",
]
