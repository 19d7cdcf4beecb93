"""Brownian motion on metric trees: potential theory, spectra, recurrence."""

from ._core import (
    InvalidArgument,
    NumericalError,
    ParseError,
    Tree,
    box_counting_dimension,
    classify_kary,
    effective_resistance,
    kary_tree,
)

__all__ = [
    "InvalidArgument",
    "NumericalError",
    "ParseError",
    "Tree",
    "box_counting_dimension",
    "classify_kary",
    "effective_resistance",
    "kary_tree",
]
