"""Builds the optional compiled kernel extension.

The package works without it: monocat.kernels falls back to the numpy
implementation when the extension is missing (or when MONOCAT_PURE=1).
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/monocat/kernels/_ckernels.pyx",
        compiler_directives={"language_level": 3},
    )
    include_dirs = [numpy.get_include()]
except ImportError:
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
