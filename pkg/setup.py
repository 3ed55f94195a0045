import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps the C arithmetic bit-identical to the pure-Python
# fallback (no FMA contraction), which the kernel equivalence tests rely on.
ext_modules = [
    Extension(
        "groundtrack._native",
        ["src/groundtrack/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(ext_modules, compiler_directives={"language_level": 3}),
)
