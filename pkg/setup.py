"""Build script for the optional compiled kernels.

The extension is optional: without Cython or a C compiler the package still
installs and runs on the pure-Python kernels.
"""
from setuptools import Extension, setup


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        return []
    ext = Extension(
        "aoipower._ckernels",
        ["src/aoipower/_ckernels.pyx"],
        extra_compile_args=["-O3"],
        optional=True,
    )
    try:
        return cythonize(
            [ext],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except Exception as exc:  # pragma: no cover
        print(f"warning: skipping compiled kernels ({exc})")
        return []


setup(ext_modules=_extensions())
