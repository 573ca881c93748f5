#!/usr/bin/env python3

import io
import os
import re

from setuptools import find_packages, setup


# Get version
def read(*names, **kwargs):
    with io.open(os.path.join(os.path.dirname(__file__), *names), encoding=kwargs.get("encoding", "utf8")) as fp:
        return fp.read()


def find_version(*file_paths):
    version_file = read(*file_paths)
    version_match = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]", version_file, re.M)
    if version_match:
        return version_match.group(1)
    raise RuntimeError("Unable to find version string.")


readme = read("README.md")
version = find_version("spikequant", "__init__.py")


torch_min = "2.0"
install_requires = [">=".join(["torch", torch_min])]
# if a recent dev version of PyTorch is installed, no need to install stable
try:
    import torch

    if torch.__version__ >= torch_min:
        install_requires = []
except ImportError:
    pass


# Run the setup
setup(
    name="spikequant",
    version=version,
    description="Spike-aware mixed-precision quantization of LLaMA-style decoders in PyTorch",
    long_description=readme,
    long_description_content_type="text/markdown",
    license="MIT",
    classifiers=["Development Status :: 3 - Alpha", "Programming Language :: Python :: 3"],
    packages=find_packages(exclude=["test", "test.*", "examples", "examples.*"]),
    package_data={"spikequant.data": ["corpus.txt"]},
    python_requires=">=3.8",
    install_requires=install_requires,
    entry_points={"console_scripts": ["spikequant=spikequant.cli:run"]},
    extras_require={
        "dev": ["black", "twine"],
        "docs": ["sphinx", "sphinx_rtd_theme"],
        "test": ["flake8", "flake8-print", "hypothesis"],
    },
)
