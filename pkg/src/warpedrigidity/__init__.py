"""Numerical checks for solution spaces of ``Hess w = w q`` on warped products."""

from .errors import GeometryError
from .geomkit import Chart, MetricChart, ScalarField, VectorField, curvature
from .rigidity import EinsteinPairSpec, WedgeElement, classify_theoremC
from .solspace import OneDProblem, SolutionSpace, classify_1d
from .spaceforms import SpaceFormSpec, make_space_form
from .warp import BaseSpace, build_warped

__all__ = [
    "BaseSpace",
    "Chart",
    "EinsteinPairSpec",
    "GeometryError",
    "MetricChart",
    "OneDProblem",
    "ScalarField",
    "SolutionSpace",
    "SpaceFormSpec",
    "VectorField",
    "WedgeElement",
    "build_warped",
    "classify_1d",
    "classify_theoremC",
    "curvature",
    "make_space_form",
]
__version__ = "0.1.0"
