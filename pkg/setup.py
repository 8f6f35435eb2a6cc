"""Build script: compiles the optional projection kernel.

The package is pure Python except for one Cython extension holding the hot
spectrahedron-projection loop. If Cython or a C toolchain is unavailable the
install still succeeds and the numpy fallback is used at import time.
"""

from setuptools import Extension, setup


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "irsnoma._kernels._spectra",
        ["src/irsnoma/_kernels/_spectra.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
