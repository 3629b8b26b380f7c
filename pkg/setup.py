import numpy
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/verbtraj/_kernels_cy.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
except ImportError:
    # The package runs on the pure-numpy kernels when the extension is absent.
    ext_modules = []

setup(ext_modules=ext_modules, include_dirs=[numpy.get_include()])
