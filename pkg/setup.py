import os

from setuptools import setup

ext_modules = []
if os.environ.get("RMGLAB_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("rmglab._ckernels", ["src/rmglab/_ckernels.pyx"], extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # no Cython: the package falls back to the numpy kernels
        ext_modules = []

setup(ext_modules=ext_modules)
