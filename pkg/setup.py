import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "certimeasure._kernels",
    ["src/certimeasure/_kernels.pyx"],
    include_dirs=[np.get_include()],
    # keep a*b + c as two rounded operations, matching the error model
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], compiler_directives={"language_level": 3}))
