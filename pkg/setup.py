"""Build script.

Compiles the optional similarity-kernel extension. If Cython or a C compiler
is unavailable the build degrades to a pure-Python install; the package then
uses the fallback kernels selected at import time in entres.kernels.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "entres._kernels",
                ["src/entres/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
