import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("WGOSSIP_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "wgossip._kernels",
                ["src/wgossip/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    print("building without the compiled kernels; numpy fallback will be used")

setup(ext_modules=ext_modules)
