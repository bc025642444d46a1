"""Build script for the optional compiled stencil kernels.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile is not fatal for `pip install`.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "riccilab._kernels._stencils",
                ["src/riccilab/_kernels/_stencils.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
