"""Build the optional Cython kernel core.

The package works without it; ``freebrown._kernels`` falls back to the
pure-Python implementations when ``_core`` cannot be imported.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FREEBROWN_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "freebrown._kernels._core",
                    ["src/freebrown/_kernels/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
