"""Build script: compiles the optional fast-kernel extension.

The package works without the extension (pure-numpy fallbacks are selected
at import time), so a missing compiler or Cython only costs speed. Set
BOXPINN_NO_EXT=1 to skip the extension build entirely.

Floating-point note: the extension is compiled with -ffp-contract=off so
its results stay bitwise identical to the numpy fallbacks (no FMA
contraction); the parity tests in tests/test_kernels.py rely on this.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("BOXPINN_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "boxpinn._corekern",
                    ["src/boxpinn/_corekern.pyx"],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
