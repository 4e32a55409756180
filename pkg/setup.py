"""Builds the optional compiled correlation kernel.

The package works without it: qselftest.kernels falls back to a numpy
implementation when the extension is missing, so the extension is marked
optional and a failed compile does not fail the install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "qselftest._corekernel",
        ["src/qselftest/_corekernel.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level="3")
except ImportError:
    pass

setup(ext_modules=ext_modules)
