import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SIGNFLOW_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("signflow._kernel._fast", ["src/signflow/_kernel/_fast.pyx"])],
            language_level=3,
        )
    except ImportError:
        # Cython missing: install the pure-Python package; the runtime
        # falls back to the interpreted kernel automatically.
        ext_modules = []

setup(ext_modules=ext_modules)
