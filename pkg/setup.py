"""Build the optional Cython kernel core.

The pure-Python fallback in ``gpinfluence._kernels_py`` is used whenever the
extension is missing, so a failed compile is not fatal.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "gpinfluence._kernels_ext",
                ["src/gpinfluence/_kernels_ext.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
