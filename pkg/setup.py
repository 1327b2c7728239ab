import numpy
from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "bubbletower._accel",
                ["src/bubbletower/_accel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # pure-Python fallback in bubbletower._reference is used at import time
    ext_modules = []

setup(ext_modules=ext_modules)
