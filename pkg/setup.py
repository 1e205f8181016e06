from setuptools import Extension, setup
from Cython.Build import cythonize

# The compiled kernels are optional: if the build fails the package falls
# back to the pure-numpy implementations selected at import time.
ext = Extension(
    "qrsim._kernels_cy",
    ["src/qrsim/_kernels_cy.pyx"],
    extra_compile_args=["-O3"],
)
ext.optional = True

setup(ext_modules=cythonize([ext], language_level=3))
