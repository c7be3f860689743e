"""Builds the optional compiled episode kernel.

The package works without the extension (a pure-Python kernel is selected
at import time), so a failed build is downgraded to a warning.
"""

import warnings

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "liqsim._kernel_cy",
                ["src/liqsim/_kernel_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError as exc:
    warnings.warn(f"Cython/numpy unavailable, skipping compiled kernel: {exc}")

setup(ext_modules=ext_modules)
