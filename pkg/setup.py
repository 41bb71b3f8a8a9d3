"""Build the optional compiled geodesy kernel.

The package works without it: fieldmon.geo falls back to the numpy kernel
when the extension is absent (or FIELDMON_PURE_GEO=1 is set).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fieldmon.geo._ckernel",
                ["src/fieldmon/geo/_ckernel.pyx"],
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
