"""Build the compiled filtering kernels.

The package works without the extension (a pure-NumPy fallback is selected
at import time), so a missing compiler only costs speed.
"""

import sys

from setuptools import Extension, setup


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as err:
        print(f"kpderev: skipping compiled kernels ({err})", file=sys.stderr)
        return []
    ext = Extension(
        "kpderev._core",
        sources=["src/kpderev/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-fcx-limited-range", "-fno-math-errno"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions())
