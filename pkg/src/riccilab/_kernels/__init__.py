"""Stencil kernel backend selection.

The compiled Cython extension is preferred; the numpy fallback is used
when the extension is unavailable or ``RICCILAB_BACKEND=python`` is set.
Both backends are exercised against each other in the test suite.
"""
import os

_force = os.environ.get("RICCILAB_BACKEND", "").lower()

if _force == "python":
    from ._numpy_backend import (  # noqa: F401
        lap5, diff_x, diff_y, diff_xx, diff_yy, diff_xy, dirichlet_energy,
    )
    BACKEND = "python"
else:
    try:
        from ._stencils import (  # noqa: F401
            lap5, diff_x, diff_y, diff_xx, diff_yy, diff_xy, dirichlet_energy,
        )
        BACKEND = "cython"
    except ImportError:
        if _force == "cython":
            raise
        from ._numpy_backend import (  # noqa: F401
            lap5, diff_x, diff_y, diff_xx, diff_yy, diff_xy, dirichlet_energy,
        )
        BACKEND = "python"
