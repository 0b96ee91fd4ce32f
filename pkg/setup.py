import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "freshquery.sim._simkernel",
    ["src/freshquery/sim/_simkernel.pyx"],
    include_dirs=[np.get_include()],
)

setup(ext_modules=cythonize(ext, language_level=3))
