import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps the kernels bit-identical to the numpy fallback.
compile_args = ["-O3", "-ffp-contract=off"]

extensions = [
    Extension(
        "delivery_detect._ext.mog",
        ["src/delivery_detect/_ext/mog.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        optional=True,
    ),
    Extension(
        "delivery_detect._ext.ccl",
        ["src/delivery_detect/_ext/ccl.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        optional=True,
    ),
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
