"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: input/usage problems give 2, numerical
breakdowns give 3.
"""


class FFError(Exception):
    """Base class for all package errors."""


class InputError(FFError, ValueError):
    """Invalid arguments or data (bad chart, empty set, path in exclusion disk)."""


class RangeError(InputError):
    """Requested momentum-map value is outside the image of F."""


class ClassificationError(FFError):
    """Critical point is not of focus-focus type."""


class NumericalFailure(FFError, RuntimeError):
    """An iterative method (Newton, ODE integration, return detection) failed."""


class DetectionError(NumericalFailure):
    """No lattice structure could be fitted to a spectrum window."""


class TransitionError(NumericalFailure):
    """Two charts are not related by an integral affine map on their overlap."""


class StructuralError(FFError):
    """Monodromy or lattice data incompatible with a single focus-focus point."""
