"""Benchmark toolkit for minority-class text augmentation in imbalanced classification."""

__version__ = "0.1.0"

from ._kernels import BACKEND

__all__ = ["BACKEND", "__version__"]
