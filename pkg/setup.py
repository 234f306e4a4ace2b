"""Builds the optional compiled greedy-assignment kernel.

The package works without it (a numpy fallback is selected at import time);
install with a working C compiler + Cython to get the fast kernel.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "gtnlab.kernels._greedy_cy",
                ["src/gtnlab/kernels/_greedy_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
