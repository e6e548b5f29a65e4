import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "cddsim._kernels._cykernel",
        ["src/cddsim/_kernels/_cykernel.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-ffast-math"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
