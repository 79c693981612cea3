"""Finite-volume schemes for scalar conservation laws with BV diagnostics.

Modules:

``mesh``      nonuniform Cartesian grids (2D/3D) and polygonal mesh families
``physics``   fluxes, Godunov numerical flux, velocity fields, built-in cases
``fv2d``      upwind scheme on nonuniform Cartesian grids
``fvnl``      split scheme for fully nonlinear fluxes ``F(t, x, a)``
``fv3d``      the 3D analogue
``fvpoly``    upwind scheme on general polygonal meshes
``metrics``   BV seminorms, error norms, convergence rates
``harness``   refinement studies and CSV tables (CLI: ``python -m bvfv``)
"""
from .fv2d import CFLError
from .mesh import MeshError
from .physics import MonotonicityError

__version__ = "0.1.0"

__all__ = ["CFLError", "MeshError", "MonotonicityError", "__version__"]
