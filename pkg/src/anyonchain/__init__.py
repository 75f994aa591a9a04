"""Exact numerics for the non-Hermitian anyon-Hubbard chain."""
from .fock import FockBasis, enumerate_basis, sector_dimension
from .model import ModelParams, build_hamiltonian

__version__ = "0.1.0"

__all__ = ["FockBasis", "ModelParams", "build_hamiltonian", "enumerate_basis",
           "sector_dimension", "__version__"]
