"""Dynamics and arithmetic of plane polynomial automorphisms of Henon type."""
from .automorphism import (
    PolyAuto,
    affine_auto,
    elementary_auto,
    henon_auto,
    is_henon_type,
    is_regular,
    jung_decompose,
    make_auto,
    reversible_henon,
    to_regular_form,
)
from .errors import HenonLabError, InputError
from .polyalg import X, Y, BivarPoly, UnivarPoly, rat

__version__ = "0.1.0"

__all__ = [
    "BivarPoly",
    "HenonLabError",
    "InputError",
    "PolyAuto",
    "UnivarPoly",
    "X",
    "Y",
    "affine_auto",
    "elementary_auto",
    "henon_auto",
    "is_henon_type",
    "is_regular",
    "jung_decompose",
    "make_auto",
    "rat",
    "reversible_henon",
    "to_regular_form",
]
