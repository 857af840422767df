"""Build script: compiles the Cython kernel extension when possible.

The package works without the extension (a pure-Python fallback is selected
at import time), so a failed compile downgrades to a warning instead of
aborting the install.  Set ACCUPREC_PURE_PYTHON=1 to skip the build entirely.
"""
import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            sys.stderr.write(f"warning: extension build failed ({exc}); "
                             "installing with pure-Python kernels\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            sys.stderr.write(f"warning: building {ext.name} failed ({exc}); "
                             "pure-Python kernels will be used\n")


def extensions():
    if os.environ.get("ACCUPREC_PURE_PYTHON"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        sys.stderr.write("warning: Cython/numpy unavailable at build time; "
                         "installing with pure-Python kernels\n")
        return []
    ext = Extension(
        "accuprec._kernels._ckernels",
        ["src/accuprec/_kernels/_ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
