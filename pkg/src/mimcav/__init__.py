"""Optical spectra and optomechanical couplings of multi-membrane cavities."""

from .errors import (
    ConfigError,
    DomainError,
    GeometryError,
    NumericalError,
    SingularPointError,
    StencilContaminationError,
)
from .model import (
    CavityGeometry,
    CollectiveCoordinates,
    MechanicalParams,
    char_transfer_matrix,
    char_two_membrane,
    membrane_angle,
    mode_phase,
)

__version__ = "0.1.0"

__all__ = [
    "CavityGeometry",
    "CollectiveCoordinates",
    "MechanicalParams",
    "ConfigError",
    "DomainError",
    "GeometryError",
    "NumericalError",
    "SingularPointError",
    "StencilContaminationError",
    "char_transfer_matrix",
    "char_two_membrane",
    "membrane_angle",
    "mode_phase",
    "__version__",
]
