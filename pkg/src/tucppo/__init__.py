"""Spatial public goods games with team utility-constrained PPO."""

from .kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
