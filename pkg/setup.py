import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MINMAXLAB_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "minmaxlab._kernels",
                    ["src/minmaxlab/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-march=native", "-fopenmp"],
                    extra_link_args=["-fopenmp"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # pure-python install still works; backend.py falls back to numpy
        ext_modules = []

setup(ext_modules=ext_modules)
