"""Build script for the optional compiled kernels.

The extension only speeds up inner loops; if Cython or a C compiler is
missing the install still succeeds and the package uses its numpy
fallback (see veriface/kernels.py).
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """build_ext that degrades to a warning instead of failing the install."""

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
        print(f"WARNING: compiled kernels were not built ({exc}); "
              "the pure-numpy fallback will be used")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "veriface._speedups",
                ["src/veriface/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # Cython unavailable: install without the extension
    print(f"WARNING: Cython unavailable ({exc}); skipping compiled kernels")
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
