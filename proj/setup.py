"""Builds the _core extension by delegating to the project's CMake setup."""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source = Path(__file__).resolve().parent
        build = Path(self.build_temp).resolve() / "cmake"
        out = Path(self.get_ext_fullpath(ext.name)).resolve().parent

        cmakedir = subprocess.run(
            [sys.executable, "-m", "pybind11", "--cmakedir"],
            check=True,
            capture_output=True,
            text=True,
        ).stdout.strip()
        subprocess.run(
            [
                "cmake",
                "-S",
                str(source),
                "-B",
                str(build),
                "-DCMAKE_BUILD_TYPE=" + os.environ.get("GAM_BUILD_TYPE", "Release"),
                "-DGAM_BUILD_TESTS=OFF",
                "-DGAM_BUILD_PYTHON=ON",
                "-Dpybind11_DIR=" + cmakedir,
                "-DPython_EXECUTABLE=" + sys.executable,
                "-DPython3_EXECUTABLE=" + sys.executable,
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build), "--target", "_core", "--parallel"],
            check=True,
        )

        built = sorted((build / "python" / "gam").glob("_core.*"))
        if not built:
            raise RuntimeError("cmake did not produce the _core module")
        out.mkdir(parents=True, exist_ok=True)
        self.copy_file(str(built[-1]), str(out / built[-1].name))


setup(
    packages=["gam"],
    package_dir={"": "python"},
    ext_modules=[CMakeExtension("gam._core")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
