"""
Reference problems on (-1, 1)² for the 2D solver.

The manufactured solution uses w(x, y) = (-cos πx sin πy, sin πx cos πy), which
is divergence free, tangential-free on the boundary and satisfies
curl w = 2π cos πx cos πy and curl(cos πx cos πy) = π w.  With

    E = t⁴/24 w,   P = Δε e^β_{α,αβ+5}(t; -1) w,
    H = (4 ε∞ t³ / (24π) + (Δε/π) e^β_{α,αβ+4}(t; -1)) cos πx cos πy,

the E-equation holds without a source and the H-equation needs

    g = (2π t⁴/24 + 12 ε∞ t² / (24π) + (Δε/π) e^β_{α,αβ+3}(t; -1)) cos πx cos πy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .prabhakar import kernel_e
from .spectral2d import SpectralOps, SpectralSpace
from .timestepper import FieldState, MediumParams

__all__ = ["ManufacturedSolution", "decay_initial_data", "field_errors"]


def _e(medium: MediumParams, mu: float, t: float) -> float:
    if t <= 0:
        return 0.0
    return float(kernel_e(medium.kernel, mu, medium.beta, t))


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact fields and the H-equation source for a given medium."""

    medium: MediumParams

    def _ab(self) -> float:
        return self.medium.alpha * self.medium.beta

    def w(self, X: NDArray, Y: NDArray) -> tuple[NDArray, NDArray]:
        pi = math.pi
        return -np.cos(pi * X) * np.sin(pi * Y), np.sin(pi * X) * np.cos(pi * Y)

    def E(self, X, Y, t):
        wx, wy = self.w(X, Y)
        a = t**4 / 24.0
        return a * wx, a * wy

    def P(self, X, Y, t):
        wx, wy = self.w(X, Y)
        a = self.medium.delta_eps * _e(self.medium, self._ab() + 5, t)
        return a * wx, a * wy

    def H(self, X, Y, t):
        m = self.medium
        a = 4 * m.eps_inf * t**3 / (24 * math.pi) + m.delta_eps / math.pi * _e(m, self._ab() + 4, t)
        return a * np.cos(math.pi * X) * np.cos(math.pi * Y)

    def g(self, X, Y, t):
        m = self.medium
        a = (
            2 * math.pi * t**4 / 24
            + 12 * m.eps_inf * t**2 / (24 * math.pi)
            + m.delta_eps / math.pi * _e(m, self._ab() + 3, t)
        )
        return a * np.cos(math.pi * X) * np.cos(math.pi * Y)

    def g_amplitude(self, t: NDArray) -> NDArray:
        """Time factor of g, vectorized over t > 0."""
        m = self.medium
        t = np.asarray(t, dtype=float)
        mem = kernel_e(m.kernel, self._ab() + 3, m.beta, t)
        return 2 * math.pi * t**4 / 24 + 12 * m.eps_inf * t**2 / (24 * math.pi) + m.delta_eps / math.pi * mem

    def sources(self, space: SpectralSpace, dt: float, nsteps: int):
        """Callback for :func:`hnmaxwell.timestepper.run` on a fixed step grid."""
        X, Y = space.grid
        shape = (np.cos(math.pi * X) * np.cos(math.pi * Y)).ravel()
        amp = self.g_amplitude(dt * np.arange(1, nsteps + 1)) if nsteps > 0 else np.zeros(0)

        def src(k: int, t: float):
            return None, amp[k - 1] * shape

        return src


def decay_initial_data(X: NDArray, Y: NDArray) -> tuple[NDArray, NDArray]:
    """Initial E of the homogeneous energy-decay experiment (H starts at zero)."""
    s = 1 / math.sqrt(2)
    pi = math.pi
    return s * np.cos(pi * X) * np.sin(pi * Y), -s * np.sin(pi * X) * np.cos(pi * Y)


def field_errors(
    space: SpectralSpace, state: FieldState, exact: ManufacturedSolution
) -> dict[str, float]:
    """Discrete L² errors of E, H and P at the state's time."""
    X, Y = space.grid
    t = state.t
    Ex, Ey = space.unpack_e(state.E)
    Px, Py = space.unpack_e(state.P)
    ex, ey = exact.E(X, Y, t)
    px, py = exact.P(X, Y, t)
    H = space.unpack_h(state.H)
    return {
        "E": space.norm(Ex - ex, Ey - ey),
        "H": space.norm(H - exact.H(X, Y, t)),
        "P": space.norm(Px - px, Py - py),
    }


def field_difference(space: SpectralSpace, a: FieldState, b: FieldState) -> dict[str, float]:
    """Discrete L² distance between two states on the same space."""
    dE = space.unpack_e(a.E - b.E)
    dP = space.unpack_e(a.P - b.P)
    return {
        "E": space.norm(*dE),
        "H": space.norm(space.unpack_h(a.H - b.H)),
        "P": space.norm(*dP),
    }


def ops_for(space: SpectralSpace) -> SpectralOps:
    return SpectralOps(space)
