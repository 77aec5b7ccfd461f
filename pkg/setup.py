"""Build script: compiles the optional lattice-action kernel extension.

Set NLSEPDF_NO_EXT=1 to skip the extension; the package then runs on the
pure-numpy fallback kernels.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("NLSEPDF_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "nlsepdf._kernels._core",
                    ["src/nlsepdf/_kernels/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
