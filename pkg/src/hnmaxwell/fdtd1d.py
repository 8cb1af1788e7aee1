"""
One-dimensional FDTD solver in SI units for a Havriliak-Negami half-space problem.

Fields E_x(z, t), H_y(z, t), P_x(z, t) on a ≤ z ≤ b obey

    ∂_t (ε0 ε∞ E + P) = -∂_z H + f,     μ0 ∂_t H = -∂_z E,
    P(t) = ε0 Δε ∫_0^t ξ(t - s) E(s) ds,  ξ(t) = τ0^{-αβ} e^β_{α,αβ}(t; -τ0^{-α}),

with perfectly conducting ends (E = 0 at z = a, b) and a soft source at one
node.  E sits on the nodes z_m = a + mΔz and H on the cell midpoints.  The
polarization uses the same convolution quadrature as the 2D solver; its
weights equal the scaled weights for the step Δt/τ0.

Two time discretizations are offered:

``"yee"``
    H leaps explicitly between E levels, the E update is pointwise implicit
    only through the local polarization weight w_0.
``"implicit"``
    backward Euler for E and H together (one SPD tridiagonal solve per step),
    the exact 1D analogue of the 2D scheme.  Its discrete energy is provably
    nonincreasing for source-free runs.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solveh_banded

from .fastconv import HistoryLadder
from .prabhakar import KernelSpec, weights
from .timestepper import DirectHistory

__all__ = [
    "C0",
    "EPS0",
    "MU0",
    "FDTDResult",
    "Grid1D",
    "PhysicalMedium",
    "run_fdtd",
    "source_pulse",
]

C0 = 3.0e8
MU0 = 4e-7 * math.pi
#: chosen so that 1/sqrt(ε0 μ0) equals C0 exactly
EPS0 = 1.0 / (MU0 * C0**2)

A_E = 5e9
F_E = 6e9


def source_pulse(t: float | NDArray, a_e: float = A_E, f_e: float = F_E) -> float | NDArray:
    """Modulated Gaussian e^{-a²(t - 4/a)²} sin(2π f (t - 4/a)) for t ≥ 0, else 0."""
    t = np.asarray(t, dtype=float)
    s = t - 4.0 / a_e
    out = np.where(t >= 0, np.exp(-(a_e**2) * s**2) * np.sin(2 * math.pi * f_e * s), 0.0)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [a, b] with M cells, a source node and probe nodes."""

    a: float = 0.0
    b: float = 1.1
    dz: float = 1.1e-3
    dt: float = 1.768e-12
    z_star: float = 0.55
    probes: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not (self.b > self.a and self.dz > 0 and self.dt > 0):
            raise ValueError("need b > a, dz > 0 and dt > 0")
        M = (self.b - self.a) / self.dz
        if abs(M - round(M)) > 1e-6 * M:
            raise ValueError("dz must divide b - a")
        if not 0 < self.m_star < self.M:
            raise ValueError("source must be an interior node")
        for p in self.probes:
            if not 0 <= p <= self.M:
                raise ValueError(f"probe index {p} outside the grid")

    @property
    def M(self) -> int:
        return int(round((self.b - self.a) / self.dz))

    @property
    def m_star(self) -> int:
        return int(round((self.z_star - self.a) / self.dz))

    @property
    def z(self) -> NDArray[np.float64]:
        return self.a + self.dz * np.arange(self.M + 1)


@dataclass(frozen=True)
class PhysicalMedium:
    """Havriliak-Negami medium in SI units."""

    eps_s: float = 50.0
    eps_inf: float = 2.0
    tau0: float = 1.53e-10
    alpha: float = 0.8
    beta: float = 0.9

    def __post_init__(self) -> None:
        if not self.eps_inf >= 1:
            raise ValueError("eps_inf must be at least 1")
        if not self.eps_s >= self.eps_inf:
            raise ValueError("eps_s must not be below eps_inf")
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        KernelSpec(self.alpha, self.beta, -1.0)

    @property
    def delta_eps(self) -> float:
        return self.eps_s - self.eps_inf

    @property
    def sigma(self) -> float:
        """Kernel shift -τ0^{-α} in physical time."""
        return -(self.tau0 ** (-self.alpha))

    @property
    def scale(self) -> float:
        """Prefactor ε0 Δε τ0^{-αβ} of the physical susceptibility kernel."""
        return EPS0 * self.delta_eps * self.tau0 ** (-self.alpha * self.beta)


@dataclass
class FDTDResult:
    """Probe series (rows k = 0..N_t) and diagnostics of a run."""

    t: NDArray[np.float64]
    probes: dict[int, NDArray[np.float64]]
    E: NDArray[np.float64]
    H: NDArray[np.float64]
    P: NDArray[np.float64]
    energy: NDArray[np.float64] | None = None
    p_history_check: float | None = None
    info: dict = field(default_factory=dict)


def _unit_weights(medium: PhysicalMedium, dt: float, n: int) -> NDArray[np.float64]:
    return weights(KernelSpec(medium.alpha, medium.beta, -1.0), dt / medium.tau0, n).w


def run_fdtd(
    grid: Grid1D,
    medium: PhysicalMedium,
    nsteps: int,
    *,
    mode: str = "fast",
    scheme: str = "yee",
    source: Callable[[NDArray], NDArray] | None = source_pulse,
    E0: NDArray | None = None,
    record_energy: bool = False,
    keep_history: bool = False,
    fast_options: dict | None = None,
    blowup_factor: float = 1e8,
) -> FDTDResult:
    """Advance the 1D system for ``nsteps`` steps.

    Parameters
    ----------
    mode : {"fast", "direct"}
        Evaluation of the polarization history.
    scheme : {"yee", "implicit"}
    source : callable or None
        Incident waveform injected at node ``grid.m_star``; None for a
        source-free run.
    E0 : array, optional
        Initial E on all M + 1 nodes (end values must be zero).  H starts at 0.
    record_energy : bool
        Record the discrete energy every step.
    keep_history : bool
        Keep all E levels and report the largest deviation between the stored P
        and a direct recomputation from the E history.

    Raises
    ------
    FloatingPointError
        If the fields grow by more than ``blowup_factor`` over the reference
        amplitude (a diagnostic guard only).
    """
    if mode not in ("fast", "direct"):
        raise ValueError(f"unknown mode {mode!r}")
    if scheme not in ("yee", "implicit"):
        raise ValueError(f"unknown scheme {scheme!r}")
    M, dz, dt = grid.M, grid.dz, grid.dt
    n_in = M - 1  # interior E nodes
    dt_s = dt / medium.tau0
    nw = max(nsteps, 1) + 1
    w = _unit_weights(medium, dt, nw)
    de = EPS0 * medium.delta_eps
    ei = EPS0 * medium.eps_inf

    E = np.zeros(M + 1)
    if E0 is not None:
        E0 = np.asarray(E0, dtype=float)
        if E0.shape != (M + 1,):
            raise ValueError(f"E0 must have {M + 1} entries")
        if abs(E0[0]) > 0 or abs(E0[-1]) > 0:
            raise ValueError("E0 must vanish at the conducting ends")
        E[:] = E0
    H = np.zeros(M)
    P = np.zeros(M + 1)

    if mode == "direct":
        hist = DirectHistory(w, n_in, max(nsteps, 1), budget=10**9)
    else:
        hist = HistoryLadder(medium.alpha, medium.beta, 1.0, dt_s, n_in, max(nsteps, 1), **(fast_options or {}))

    times = dt * np.arange(nsteps + 1)
    inc = np.zeros(nsteps + 1) if source is None else np.asarray(source(times), dtype=float)
    ref = max(np.max(np.abs(inc)), np.max(np.abs(E)), 1e-300)
    probes = {p: np.zeros(nsteps + 1) for p in grid.probes}
    for p in grid.probes:
        probes[p][0] = E[p]
    ms = grid.m_star
    lam = dt / (MU0 * dz)
    coef = ei + de * w[0]

    if scheme == "implicit":
        # (coef I + (dt²/(μ0 dz²)) DᵀD) on interior nodes, banded upper form
        off = -(dt**2) / (MU0 * dz**2)
        ab = np.zeros((2, n_in))
        ab[0, 1:] = off
        ab[1, :] = coef - 2 * off

    energy = np.zeros(nsteps + 1) if record_energy else None
    n2 = np.zeros(nsteps) if record_energy else None
    if record_energy:
        energy[0] = dz * (ei * E @ E + MU0 * H @ H)
    stored = np.zeros((nsteps, n_in)) if keep_history else None

    for k in range(1, nsteps + 1):
        S = hist.history_eval(k)
        rhs = ei * E[1:-1] + P[1:-1] - de * S
        rhs[ms - 1] += EPS0 * inc[k]
        if scheme == "yee":
            # H^{k-1/2} is current; E^k from the pointwise update
            rhs -= (dt / dz) * (H[1:] - H[:-1])
            E[1:-1] = rhs / coef
            H_old = H.copy()
            H -= lam * np.diff(E)
        else:
            rhs -= (dt / dz) * (H[1:] - H[:-1])
            E[1:-1] = solveh_banded(ab, rhs, check_finite=False)
            H -= lam * np.diff(E)
        P[1:-1] = de * (w[0] * E[1:-1] + S)
        hist.push(E[1:-1].copy(), k)
        if keep_history:
            stored[k - 1] = E[1:-1]
        for p in grid.probes:
            probes[p][k] = E[p]
        if record_energy:
            n2[k - 1] = E @ E
            mem = de * float(w[:k][::-1] @ n2[:k])
            if scheme == "yee":
                # leapfrog pairs H at the two half levels around t_k
                magnetic = MU0 * float(H @ H_old)
            else:
                magnetic = MU0 * float(H @ H)
            energy[k] = dz * (ei * n2[k - 1] + magnetic + mem)
        if k % 64 == 0 or k == nsteps:
            peak = np.max(np.abs(E))
            if not np.isfinite(peak) or peak > blowup_factor * ref:
                raise FloatingPointError(f"field blow-up detected at step {k} (|E| = {peak:.3e})")

    check = None
    if keep_history and nsteps > 0:
        direct = de * (w[nsteps - 1 :: -1][:nsteps] @ stored)
        check = float(np.max(np.abs(direct - P[1:-1])) / max(np.max(np.abs(P)), 1e-300))
    return FDTDResult(
        times,
        probes,
        E,
        H,
        P,
        energy,
        check,
        {"mode": mode, "scheme": scheme, "ops": hist.ops, "M": M},
    )
