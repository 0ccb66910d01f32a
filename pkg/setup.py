import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is None or os.environ.get("MMTOP_SKIP_EXT"):
    # Package still works without the extension: mmtop._kernels falls back
    # to the NumPy implementations at import time.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "mmtop._kernels._core",
                ["src/mmtop/_kernels/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
