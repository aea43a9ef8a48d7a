"""Build the compiled kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed build only costs speed. Set MHGMM_SKIP_EXT=1 to
skip compilation explicitly.
"""

import os

import numpy
from setuptools import setup

if os.environ.get("MHGMM_SKIP_EXT") == "1":
    ext_modules = []
else:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/mhgmm/kernels/_cyk.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
    for ext in ext_modules:
        ext.extra_compile_args = ["-O3"]

setup(
    ext_modules=ext_modules,
    include_dirs=[numpy.get_include()],
)
