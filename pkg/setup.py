"""Build hook for the optional compiled kernels.

The package is fully functional without the extension; if Cython (or a C
compiler) is unavailable the build silently falls back to the pure-Python
kernels. Set LSMJOIN_PURE_BUILD=1 to skip the extension on purpose.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("LSMJOIN_PURE_BUILD"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "lsmjoin._kernels._ext",
                    ["src/lsmjoin/_kernels/_ext.pyx"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
