"""Build script for the optional compiled kernels.

The package works without the extension: quantrank._kernels falls back to the
pure-Python implementation when the compiled module is absent. Extension is
marked optional so a missing compiler never breaks installation.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext = Extension(
        "quantrank._kernels._native",
        sources=["src/quantrank/_kernels/_native.pyx"],
        optional=True,
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": 3})
except ImportError:
    pass

setup(ext_modules=ext_modules)
