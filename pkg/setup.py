"""Build the optional compiled summarization core.

The package works without it (pure-Python fallback), so a failed or
skipped compile is not fatal.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("ATTRSUMM_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "attrsumm._core",
                    ["src/attrsumm/_core.pyx"],
                    include_dirs=[np.get_include()],
                    language="c++",
                    # no -ffast-math / contraction: the core must reproduce the
                    # fallback's floating-point results bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off", "-std=c++17"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
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
