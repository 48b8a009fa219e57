"""Build script for the optional Cython acceleration kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a missing compiler or Cython only downgrades
performance.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    # -ffp-contract=off: no FMA contraction, so kernel arithmetic matches the
    # numpy fallback operation-for-operation.
    ext_modules = cythonize(
        [
            Extension(
                "qhmlab.engine._accel",
                ["src/qhmlab/engine/_accel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
