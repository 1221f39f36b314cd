"""Computable hyperreals over a lazily decided ultrafilter, hyperfinite sets,
bounded transfer, and Galerkin ultrafunction spaces."""

from .errors import LambdaError
from .hyperreal import Field, Hyperreal, Kind, SequenceRep
from .internal import HyperfiniteSet, RealSetDescriptor
from .oracle import SetDescriptor, UltrafilterOracle

__version__ = "0.1.0"

__all__ = [
    "Field",
    "HyperfiniteSet",
    "Hyperreal",
    "Kind",
    "LambdaError",
    "RealSetDescriptor",
    "SequenceRep",
    "SetDescriptor",
    "UltrafilterOracle",
    "__version__",
]
