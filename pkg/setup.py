"""Build the optional Cython kernels.

The package works without them: ``rehabfuzz._accel`` falls back to the numpy
implementations when the extension is missing. Set ``REHABFUZZ_NO_EXT=1`` to
skip compilation entirely.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("REHABFUZZ_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "rehabfuzz._kernels",
                    ["src/rehabfuzz/_kernels.pyx"],
                    extra_compile_args=["-O3"],
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

setup(ext_modules=ext_modules)
