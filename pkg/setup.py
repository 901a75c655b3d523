import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/curvpic/kernels/_core.pyx"],
        compiler_directives={"language_level": 3},
    )
    for ext in ext_modules:
        ext.include_dirs.append(np.get_include())
        ext.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
except ImportError:
    # pure-python fallback is selected at import time
    ext_modules = []

setup(ext_modules=ext_modules)
