import os
from glob import glob

from pybind11.setup_helpers import ParallelCompile, Pybind11Extension, build_ext
from setuptools import setup

# The compiled module rebuilds the core sources directly; the CMake build
# remains the canonical one for the C++ library, CLI, and test suites.


def eigen_include() -> str:
    env = os.environ.get("EIGEN3_INCLUDE_DIR")
    if env:
        return env
    for candidate in ("/usr/include/eigen3", "/usr/local/include/eigen3"):
        if os.path.isdir(candidate):
            return candidate
    raise RuntimeError("Eigen3 headers not found; set EIGEN3_INCLUDE_DIR")


ParallelCompile("NPY_NUM_BUILD_JOBS").install()

ext = Pybind11Extension(
    "lpalign._core",
    sorted(glob("src/*.cpp")) + ["bindings/module.cpp"],
    include_dirs=["include", "vendor", eigen_include()],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
