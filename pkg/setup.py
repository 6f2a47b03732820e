#!/usr/bin/env python3
# setup.py - Installs the densops modules and console script
from setuptools import setup

from version import VERSION, APP_NAME, APP_DESCRIPTION, APP_AUTHOR

MODULES = [
    "charts",
    "check_ops",
    "checkfile",
    "config_manager",
    "connections",
    "densities",
    "diffops",
    "errors",
    "expr_parser",
    "logging_config",
    "main",
    "odd_symplectic",
    "pencils",
    "riemann_line",
    "runner",
    "samples",
    "symexpr",
    "version",
]

with open("requirements.txt") as f:
    requirements = [line.strip() for line in f if line.strip() and not line.startswith("#")]

setup(
    name=APP_NAME,
    version=VERSION,
    description=APP_DESCRIPTION,
    author=APP_AUTHOR,
    python_requires=">=3.8",
    py_modules=MODULES,
    install_requires=[r for r in requirements if r.startswith("sympy")],
    extras_require={"test": [r for r in requirements if not r.startswith("sympy")]},
    data_files=[("share/densops", ["paper-suite.check"])],
    entry_points={"console_scripts": ["densops=main:main"]},
)
