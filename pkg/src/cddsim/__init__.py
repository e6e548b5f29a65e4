"""Continuous dynamical decoupling simulator for a nuclear spin coupled to a
stochastically decaying electron spin (two-level defect or NV triplet)."""

from ._kernels import KERNEL_NAME
from .model import DriveSpec, SystemSpec
from .noise import NoiseSpec, OUParams

__version__ = "0.1.0"

__all__ = ["SystemSpec", "DriveSpec", "NoiseSpec", "OUParams", "KERNEL_NAME", "__version__"]
