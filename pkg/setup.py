# -*- coding: utf-8 -*-
from setuptools import setup, find_namespace_packages

setup(
    name="tilesplat",
    version="0.1",
    author="andriusdc",
    packages=find_namespace_packages(include=["src", "src.*"]),
    install_requires=[
        "numpy",
        "scipy",
        "plyfile",
        "Pillow",
        "scikit-image",
        "click",
    ],
    extras_require={
        "dev": [
            "pytest",
            "hypothesis",
            "black",
            "flake8",
            "flake8-docstrings",
            "flake8-complexity",
            "pre-commit",
        ],
    },
    entry_points={"console_scripts": ["tilesplat=src.main:main"]},
)
