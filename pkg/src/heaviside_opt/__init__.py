"""Modeling and stationarity tools for optimization with Heaviside-composite terms."""

from .functions import FunctionHandle, affine, constant, coordinate, maximum, minimum, quadratic
from .model import Flavor, HeavisideTerm, PolyhedralSet, ProblemSpec

__all__ = [
    "Flavor", "FunctionHandle", "HeavisideTerm", "PolyhedralSet", "ProblemSpec",
    "affine", "constant", "coordinate", "maximum", "minimum", "quadratic",
]
__version__ = "0.1.0"
