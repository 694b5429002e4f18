"""Quantitative algebra workbench - metric term algebras, quantitative equations and their monads."""

from importlib.metadata import version, PackageNotFoundError

try:
    __version__ = version("quantitative-algebra-workbench")
except PackageNotFoundError:
    __version__ = "0.0.0-dev"
