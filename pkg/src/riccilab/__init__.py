"""Numerical laboratory for Ricci flow entropy functionals on model
manifolds: flat-conformal tori and round spheres."""

from ._kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
