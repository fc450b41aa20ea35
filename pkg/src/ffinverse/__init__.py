"""Inverse spectral problem for focus-focus singularities.

Joint spectra of quantum integrable systems, lattice charts and monodromy,
and recovery of the Taylor series invariant from either the spectrum or the
classical Hamiltonian flows.
"""

from .errors import (ClassificationError, DetectionError, FFError, InputError, NumericalFailure,
                     RangeError, StructuralError, TransitionError)
from .models import ChampagneBottle, CoupledSpins, NormalFormLocal, Value2

__all__ = ["ChampagneBottle", "ClassificationError", "CoupledSpins", "DetectionError", "FFError",
           "InputError", "NormalFormLocal", "NumericalFailure", "RangeError", "StructuralError",
           "TransitionError", "Value2"]
