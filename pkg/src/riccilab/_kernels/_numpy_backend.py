"""Pure-numpy periodic stencil kernels (fallback backend).

Arrays are (N1, N2) with axis 0 along x and axis 1 along y; all stencils
wrap periodically.  The compiled backend in ``_stencils.pyx`` implements
the same signatures.
"""
import numpy as np


def lap5(f, h1, h2):
    """Flat 5-point Laplacian on the periodic grid."""
    return (
        (np.roll(f, -1, 0) - 2.0 * f + np.roll(f, 1, 0)) / (h1 * h1)
        + (np.roll(f, -1, 1) - 2.0 * f + np.roll(f, 1, 1)) / (h2 * h2)
    )


def diff_x(f, h1):
    return (np.roll(f, -1, 0) - np.roll(f, 1, 0)) / (2.0 * h1)


def diff_y(f, h2):
    return (np.roll(f, -1, 1) - np.roll(f, 1, 1)) / (2.0 * h2)


def diff_xx(f, h1):
    return (np.roll(f, -1, 0) - 2.0 * f + np.roll(f, 1, 0)) / (h1 * h1)


def diff_yy(f, h2):
    return (np.roll(f, -1, 1) - 2.0 * f + np.roll(f, 1, 1)) / (h2 * h2)


def diff_xy(f, h1, h2):
    fpp = np.roll(np.roll(f, -1, 0), -1, 1)
    fpm = np.roll(np.roll(f, -1, 0), 1, 1)
    fmp = np.roll(np.roll(f, 1, 0), -1, 1)
    fmm = np.roll(np.roll(f, 1, 0), 1, 1)
    return (fpp - fpm - fmp + fmm) / (4.0 * h1 * h2)


def dirichlet_energy(f, h1, h2):
    """Edge-based Dirichlet energy sum |grad f|^2 dx dy on the flat grid.

    Conformally invariant in 2-d, so this is also the curved-metric
    Dirichlet integral for any conformal factor.
    """
    dx = (np.roll(f, -1, 0) - f) / h1
    dy = (np.roll(f, -1, 1) - f) / h2
    return (np.sum(dx * dx) + np.sum(dy * dy)) * h1 * h2
