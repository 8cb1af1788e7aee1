"""
Maxwell's equations in Havriliak-Negami dispersive media.

Modules
-------
prabhakar
    Three-parameter Mittag-Leffler evaluation, kernels and convolution weights.
fastconv
    Contour-ladder compression of the polarization history.
timestepper
    Energy-stable implicit scheme, generic in the spatial operators.
spectral2d
    Legendre-Gauss-Lobatto spectral spatial operators on a rectangle.
fdtd1d
    One-dimensional FDTD solver in SI units.
recovery
    Permittivity, transfer function and reflection from probe series.
harness
    Experiment drivers and the ``hn`` command line.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .prabhakar import KernelSpec, kernel_e, laplace_symbol, ml3, weight_sum, weights
from .timestepper import FieldState, MediumParams, TimeStepper, run

__all__ = [
    "FieldState",
    "KernelSpec",
    "MediumParams",
    "TimeStepper",
    "__version__",
    "kernel_e",
    "laplace_symbol",
    "ml3",
    "run",
    "weight_sum",
    "weights",
]
