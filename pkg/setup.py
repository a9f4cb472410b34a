from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "photonmux.montecarlo._kernel",
                ["src/photonmux/montecarlo/_kernel.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-Python install still works; the simulator falls back to the
    # vectorized numpy backend at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
