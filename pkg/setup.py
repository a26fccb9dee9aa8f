"""Build the compiled kernel extension.

The pure-Python fallback in momipde._kernels.pyfallback mirrors the same
arithmetic in the same order; -ffp-contract=off keeps the compiler from
fusing multiply-adds so both backends round identically.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "momipde._kernels._core",
    sources=["src/momipde/_kernels/_core.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], language_level="3"))
