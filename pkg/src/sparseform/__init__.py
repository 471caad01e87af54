"""Numerical toolkit for two-weight bounds of sparse bilinear forms on the dyadic grid."""
from .dyadic import Cube, Grid, StepFn
from .exceptions import (
    CapacityError,
    ConfigError,
    DegenerateWeightError,
    DomainError,
    NumericError,
    ParameterError,
    SparseformError,
    StructuralError,
)
from .forms import ExponentConfig, WeightSetting, derive_config
from .sparse import SparseFamily, random_sparse_family

__version__ = "0.1.0"
