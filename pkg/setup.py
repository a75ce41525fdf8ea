"""Build script: compiles the token-machine kernel when Cython is available.

Without Cython (or without a C compiler) the package still installs and
falls back to the pure-Python run loop.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("GOIM_PURE"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("goim._kernel", ["src/goim/_kernel.pyx"], extra_compile_args=["-O2"])],
            compiler_directives={"language_level": 3},
            quiet=True,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
