"""Build script for the optional compiled kernels.

The package is fully functional without the extension; when Cython and a C
compiler are available, the hot loops in ``chapkit._kernels`` are compiled.
Set CHAPKIT_NO_EXTENSION=1 to skip the build entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the speedups if possible; fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "WARNING: building chapkit._kernels._speedups failed "
            f"({exc}); the pure-Python kernels will be used instead"
        )


def extensions():
    if os.environ.get("CHAPKIT_NO_EXTENSION"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "chapkit._kernels._speedups",
        sources=["src/chapkit/_kernels/_speedups.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
