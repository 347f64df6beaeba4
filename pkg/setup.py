import os

from setuptools import setup

ext_modules = []
if os.environ.get("CUTPLAY_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "cutplay.solvers._ckernels",
                    ["src/cutplay/solvers/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:  # no Cython: pure-Python kernels only
        ext_modules = []

setup(ext_modules=ext_modules)
