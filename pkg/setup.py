from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "rank1glm._kernels._core",
        ["src/rank1glm/_kernels/_core.pyx"],
    )
    # The package falls back to the numpy kernel if the build fails.
    ext.optional = True
    ext_modules = cythonize(ext, language_level=3)

setup(ext_modules=ext_modules)
