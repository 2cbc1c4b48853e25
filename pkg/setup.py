"""Build the optional compiled kernel; the package falls back to pure Python without it."""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SMCLAB_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            Extension("smclab._kernel", ["src/smclab/_kernel.pyx"],
                      include_dirs=[np.get_include()]),
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
