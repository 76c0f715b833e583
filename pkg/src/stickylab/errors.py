"""Exception hierarchy for stickylab.

Everything raised on purpose derives from :class:`StickyLabError`, so callers
can catch the package's failures without swallowing genuine bugs.  Subclasses
also inherit from the closest builtin (ValueError / ArithmeticError) to keep
``except ValueError`` style code working.
"""

from __future__ import annotations


class StickyLabError(Exception):
    """Base class for all stickylab errors."""


class InvalidModel(StickyLabError, ValueError):
    """A model description is structurally invalid (bad weights, bad domain)."""


class CollarTooDeep(InvalidModel):
    """Requested collar depth reaches past half the domain thickness."""


class NonIntegrable(StickyLabError, ArithmeticError):
    """A quadrature did not settle under refinement; the integral is suspect."""


class NormalDerivativeMismatch(StickyLabError, ValueError):
    """A candidate collar function does not have unit inward slope at the sticky boundary."""


class MissingConstants(StickyLabError, ValueError):
    """A composition needs comparison constants that were not supplied."""


class NonFinite(StickyLabError, ArithmeticError):
    """A quantity that must be finite came out inf or nan."""


class GridTooCoarse(StickyLabError, ValueError):
    """Too few cells to resolve the requested discretisation."""


class NegativeRate(StickyLabError, ValueError):
    """A rate function evaluated to a negative or non-monotone table."""


class Unclassified(StickyLabError, ValueError):
    """A rate function's long-run behaviour cannot be read off its form."""


class PhiNotDecaying(StickyLabError, ValueError):
    """A tail profile supplied for inversion is not strictly decreasing."""


class XiNotDecaying(StickyLabError, ValueError):
    """A decay profile supplied for inversion is not strictly decreasing."""


class NotUltra(StickyLabError, ArithmeticError):
    """The tail integral diverges: no ultracontractive bound follows."""


class Disconnected(StickyLabError, ArithmeticError):
    """The discrete energy graph is disconnected; spectral gaps are meaningless."""


class NonConvergent(StickyLabError, ArithmeticError):
    """An iterative solver exhausted its budget without meeting tolerance."""


class InsufficientSpan(StickyLabError, ValueError):
    """A scaling fit was asked for on a grid spanning less than one decade."""


class AbsorbingState(StickyLabError, ValueError):
    """A state with zero exit rate makes the jump chain undefined."""


class ConfigError(StickyLabError, ValueError):
    """A CLI/JSON configuration could not be parsed or validated."""
