"""Explicit polynomial maps from closed balls onto semialgebraic sets."""

from .polycore import MultiPoly, PolyMap, UniPoly, compose, taylor_jet

__version__ = "0.1.0"

__all__ = ["MultiPoly", "PolyMap", "UniPoly", "compose", "taylor_jet", "__version__"]
