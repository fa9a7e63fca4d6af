"""Numerical laboratory for a mean-field nematic alignment model on the circle.

Submodules
----------
circle_field  grids, densities, order parameters, nonlocal functionals
equilibria    von-Mises steady states and their compatibility conditions
fp_solver     time steppers for constant and multiplicative noise
particles     Euler-Maruyama particle ensembles
diagnostics   free energy, entropies, envelopes, rate fits
config, cli   experiment configuration and the ``nematic-lab`` command
"""

from __future__ import annotations

from ._accel import backend_name
from .circle_field import (
    AngleGrid,
    AngularDensity,
    AngularField,
    ModelParams,
    NoiseKind,
    OrderParameter,
    PsiTable,
    order_parameter,
)
from .errors import (
    AliasedMode,
    IncompatibleTriple,
    InsufficientData,
    NematicLabError,
    NonPositiveMass,
    ParseError,
    R2TooSmall,
    SupportMismatch,
    UnstableStep,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "AliasedMode",
    "AngleGrid",
    "AngularDensity",
    "AngularField",
    "IncompatibleTriple",
    "InsufficientData",
    "ModelParams",
    "NematicLabError",
    "NoiseKind",
    "NonPositiveMass",
    "OrderParameter",
    "ParseError",
    "PsiTable",
    "R2TooSmall",
    "SupportMismatch",
    "UnstableStep",
    "ValidationError",
    "backend_name",
    "order_parameter",
]
