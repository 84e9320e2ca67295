"""Build the optional Cython kernel.

The package works without it: ``fictplay._backend`` falls back to the
pure-Python kernel when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FICTPLAY_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension(
                "fictplay._kernel",
                ["src/fictplay/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
