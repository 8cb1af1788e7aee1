"""
Backward-Euler time stepping for Maxwell's equations in a Havriliak-Negami medium.

In scaled variables the semi-discrete system reads, for k = 1, 2, ...,

    ε∞ (E^k - E^{k-1}) + (P^k - P^{k-1}) - Δt Cᵀ M_H H^k = Δt F^k      (tested with E)
    H^k - H^{k-1} + Δt C E^k = Δt g^k                                   (nodal in H)
    P^k = Δε (Σ_{j=1}^{k} w_{k-j} E^j + h^k)

where C maps E-coefficients to the strong curl in the H-space, M_E and M_H are
the mass matrices and w are the convolution-quadrature weights.  Eliminating
P^k and H^k leaves one symmetric positive-definite solve per step,

    [(ε∞ + Δε w_0) M_E + Δt² Cᵀ M_H C] E^k
        = M_E (ε∞ E^{k-1} + P^{k-1} - Δε (S^k + h^k))
          + Δt Cᵀ M_H (H^{k-1} + Δt g^k) + Δt F^k,

with S^k = Σ_{j<k} w_{k-j} E^j the history part.  The matrix does not depend
on k and is factorized once.

The discrete energy

    ℰ^k = ε∞ ‖E^k‖² + ‖H^k‖² + Δε Σ_{j=1}^{k} w_{k-j} ‖E^j‖²

is nonincreasing for homogeneous data and every Δt > 0.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray

from .fastconv import HistoryLadder
from .prabhakar import KernelSpec, WeightTable, weights

__all__ = [
    "DenseOps",
    "DirectHistory",
    "EnergyTrace",
    "FieldState",
    "MediumParams",
    "MemoryBudgetError",
    "RunResult",
    "SpatialOps",
    "TimeStepper",
    "energy",
    "run",
]

#: default cap on stored history entries (float64 count) in direct mode
DEFAULT_HISTORY_BUDGET = 60_000_000


class MemoryBudgetError(MemoryError):
    """Direct-mode history would exceed the configured memory budget."""


@dataclass(frozen=True)
class MediumParams:
    """Scaled Havriliak-Negami medium."""

    eps_inf: float
    eps_s: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not self.eps_inf >= 1:
            raise ValueError(f"eps_inf must be at least 1, got {self.eps_inf}")
        if not self.eps_s > self.eps_inf:
            raise ValueError("eps_s must exceed eps_inf")
        KernelSpec(self.alpha, self.beta, -1.0)

    @property
    def delta_eps(self) -> float:
        return self.eps_s - self.eps_inf

    @property
    def kernel(self) -> KernelSpec:
        return KernelSpec(self.alpha, self.beta, -1.0)


@dataclass
class FieldState:
    """Coefficient vectors of E, H, P at step k (time t = kΔt)."""

    E: NDArray[np.float64]
    H: NDArray[np.float64]
    P: NDArray[np.float64]
    k: int = 0
    t: float = 0.0

    def copy(self) -> FieldState:
        return FieldState(self.E.copy(), self.H.copy(), self.P.copy(), self.k, self.t)


@dataclass
class EnergyTrace:
    """Per-step modified energy ℰ^k and plain energy ε∞‖E^k‖² + ‖H^k‖²."""

    k: list[int] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    plain: list[float] = field(default_factory=list)

    def append(self, k: int, energy: float, plain: float) -> None:
        self.k.append(k)
        self.energy.append(energy)
        self.plain.append(plain)

    def increments(self) -> NDArray[np.float64]:
        return np.diff(np.asarray(self.energy))

    def is_nonincreasing(self, rtol: float = 1e-12) -> bool:
        if len(self.energy) < 2:
            return True
        scale = max(abs(self.energy[0]), np.finfo(float).tiny)
        return bool(np.all(self.increments() <= rtol * scale))


# {{{ spatial operators


class SpatialOps(ABC):
    """Spatial discretization seen by the time stepper.

    ``curl`` is the strong curl C from the E-space into the H-space and the
    weak curl pairing of H with E-test functions is Cᵀ M_H.  Implementations
    must keep these two adjoint.
    """

    n_e: int
    n_h: int

    @abstractmethod
    def mass_e(self, v: NDArray) -> NDArray: ...

    @abstractmethod
    def mass_h(self, v: NDArray) -> NDArray: ...

    @abstractmethod
    def solve_mass_h(self, v: NDArray) -> NDArray: ...

    @abstractmethod
    def curl(self, e: NDArray) -> NDArray:
        """C e."""

    @abstractmethod
    def curl_adjoint(self, h: NDArray) -> NDArray:
        """Cᵀ M_H h, the vector of pairings (h, curl φ_i)."""

    @abstractmethod
    def factor_step(self, coef: float, dt: float) -> Callable[[NDArray], NDArray]:
        """Return a solver for (coef M_E + dt² Cᵀ M_H C) x = b."""

    def norm_e2(self, v: NDArray) -> float:
        return float(v @ self.mass_e(v))

    def norm_h2(self, v: NDArray) -> float:
        return float(v @ self.mass_h(v))


class DenseOps(SpatialOps):
    """SpatialOps from explicit matrices; used for small problems and checks."""

    def __init__(self, mass_e: NDArray, mass_h: NDArray, curl: NDArray):
        self.Me = np.atleast_2d(np.asarray(mass_e, dtype=float))
        self.Mh = np.atleast_2d(np.asarray(mass_h, dtype=float))
        self.C = np.atleast_2d(np.asarray(curl, dtype=float))
        self.n_e = self.Me.shape[0]
        self.n_h = self.Mh.shape[0]
        if self.C.shape != (self.n_h, self.n_e):
            raise ValueError(f"curl must have shape {(self.n_h, self.n_e)}, got {self.C.shape}")
        self._mh_factor = sla.cho_factor(self.Mh)

    def mass_e(self, v):
        return self.Me @ v

    def mass_h(self, v):
        return self.Mh @ v

    def solve_mass_h(self, v):
        return sla.cho_solve(self._mh_factor, v)

    def curl(self, e):
        return self.C @ e

    def curl_adjoint(self, h):
        return self.C.T @ (self.Mh @ h)

    def factor_step(self, coef, dt):
        A = coef * self.Me + dt**2 * self.C.T @ self.Mh @ self.C
        factor = sla.cho_factor(A)
        return lambda b: sla.cho_solve(factor, b)


# }}}


# {{{ history providers


class DirectHistory:
    """Stores every E^j and evaluates Σ_{j<k} w_{k-j} E^j by a dot product."""

    def __init__(self, w: NDArray[np.float64], dof: int, nsteps: int, budget: int = DEFAULT_HISTORY_BUDGET):
        if nsteps * dof > budget:
            raise MemoryBudgetError(
                f"direct history needs {nsteps}×{dof} stored values, above the budget of "
                f"{budget}; use fast mode"
            )
        if len(w) < nsteps:
            raise ValueError("weight table shorter than the number of steps")
        self.w = w
        self._store = np.zeros((nsteps, dof))
        self.n = 0
        self.ops = 0

    def push(self, E: NDArray, k: int | None = None) -> None:
        if k is not None and k != self.n + 1:
            raise ValueError(f"out-of-order push: expected step {self.n + 1}, got {k}")
        self._store[self.n] = E
        self.n += 1

    def history_eval(self, k: int | None = None) -> NDArray:
        if k is not None and k != self.n + 1:
            raise ValueError(f"history holds step {self.n + 1}, not {k}")
        n = self.n
        if n == 0:
            return np.zeros(self._store.shape[1])
        self.ops += n * self._store.shape[1]
        # Σ_{j=1}^{n} w_{n+1-j} E^j
        return self.w[n:0:-1] @ self._store[:n]


# }}}


def energy(
    norms2: Iterable[float],
    E: NDArray,
    H: NDArray,
    w: NDArray | WeightTable,
    medium: MediumParams,
    ops: SpatialOps,
) -> float:
    """Modified energy ℰ^k given ‖E^1‖², ..., ‖E^k‖² (empty for k = 0)."""
    n2 = np.asarray(list(norms2), dtype=float)
    val = medium.eps_inf * ops.norm_e2(E) + ops.norm_h2(H)
    if n2.size:
        wv = np.asarray(w.w if isinstance(w, WeightTable) else w)
        val += medium.delta_eps * float(wv[: n2.size][::-1] @ n2)
    return val


class TimeStepper:
    """Advances :class:`FieldState` by the backward-Euler scheme.

    Parameters
    ----------
    ops : SpatialOps
    medium : MediumParams
    dt : float
    nsteps : int
        Number of steps the stepper must support.
    mode : {"direct", "fast"}
        History evaluation by stored sums or by the contour ladder.
    weights_override : array, optional
        Replacement weight table (for closed-form checks).
    """

    def __init__(
        self,
        ops: SpatialOps,
        medium: MediumParams,
        dt: float,
        nsteps: int,
        *,
        mode: str = "direct",
        base: int = 5,
        ncol: int = 30,
        eps_f: float = 1e-10,
        history_budget: int = DEFAULT_HISTORY_BUDGET,
        weights_override: NDArray | None = None,
    ):
        if not dt > 0:
            raise ValueError("dt must be positive")
        if mode not in ("direct", "fast"):
            raise ValueError(f"unknown convolution mode {mode!r}")
        self.ops = ops
        self.medium = medium
        self.dt = float(dt)
        self.nsteps = int(nsteps)
        self.mode = mode
        size = max(self.nsteps, 1) + 1
        if weights_override is None:
            self.w = weights(medium.kernel, self.dt, size).w
        else:
            self.w = np.asarray(weights_override, dtype=float)
            if len(self.w) < size:
                raise ValueError("weight table shorter than the number of steps")
        n = max(self.nsteps, 1)
        if mode == "direct":
            self.history = DirectHistory(self.w, ops.n_e, n, history_budget)
        else:
            if weights_override is not None:
                raise ValueError("weights_override is only meaningful in direct mode")
            self.history = HistoryLadder(
                medium.alpha, medium.beta, 1.0, self.dt, ops.n_e, n, base=base, ncol=ncol, eps_f=eps_f
            )
        coef = medium.eps_inf + medium.delta_eps * self.w[0]
        self.solve = ops.factor_step(coef, self.dt)

    def step(
        self,
        state: FieldState,
        f_load: NDArray | None = None,
        g_nodal: NDArray | None = None,
        h: NDArray | None = None,
    ) -> FieldState:
        """Return the state at step ``state.k + 1``.

        ``f_load`` is the E-space load vector (f^k, φ_i); ``g_nodal`` and ``h``
        are coefficient vectors in the H-space and E-space.
        """
        ops, med, dt = self.ops, self.medium, self.dt
        k = state.k + 1
        if k > self.nsteps:
            raise ValueError(f"stepper was built for {self.nsteps} steps")
        if self.history.n != state.k:
            raise ValueError("history out of sync with the state")
        S = self.history.history_eval(k)
        local = S if h is None else S + h
        Hstar = state.H if g_nodal is None else state.H + dt * g_nodal
        rhs = ops.mass_e(med.eps_inf * state.E + state.P - med.delta_eps * local)
        rhs += dt * ops.curl_adjoint(Hstar)
        if f_load is not None:
            rhs += dt * f_load
        E = self.solve(rhs)
        H = Hstar - dt * ops.curl(E)
        P = med.delta_eps * (self.w[0] * E + local)
        self.history.push(E, k)
        return FieldState(E, H, P, k, k * dt)


@dataclass
class RunResult:
    """Output of :func:`run`."""

    snapshots: dict[int, FieldState]
    trace: EnergyTrace
    final: FieldState
    p_norms: list[float]
    e_norms: list[float]
    stepper: TimeStepper | None

    def polarization_bound_holds(self, rtol: float = 1e-10) -> bool:
        """‖P^k‖ ≤ Δε (Σ_{j<k} w_j) max_{j≤k} ‖E^j‖ on every recorded step."""
        st = self.stepper
        if st is None or not self.p_norms:
            return True
        csum = np.cumsum(st.w[: len(self.p_norms)])
        emax = np.maximum.accumulate(self.e_norms)
        bound = st.medium.delta_eps * csum * emax
        return bool(np.all(np.asarray(self.p_norms) <= bound * (1 + rtol) + 1e-300))


def run(
    ops: SpatialOps,
    medium: MediumParams,
    dt: float,
    nsteps: int,
    E0: NDArray,
    H0: NDArray,
    *,
    mode: str = "direct",
    sources: Callable[[int, float], tuple[NDArray | None, NDArray | None]] | None = None,
    snapshot_steps: Iterable[int] = (),
    stepper_kwargs: dict | None = None,
    on_step: Callable[[FieldState], None] | None = None,
) -> RunResult:
    """Advance from (E0, H0, P = 0) through ``nsteps`` steps.

    ``sources(k, t)`` returns (E-space load, H-space nodal values) for step k.
    The energy is recorded at every step, including k = 0.
    """
    E0 = np.asarray(E0, dtype=float)
    H0 = np.asarray(H0, dtype=float)
    state = FieldState(E0.copy(), H0.copy(), np.zeros_like(E0), 0, 0.0)
    trace = EnergyTrace()
    trace.append(0, medium.eps_inf * ops.norm_e2(E0) + ops.norm_h2(H0), medium.eps_inf * ops.norm_e2(E0) + ops.norm_h2(H0))
    wanted = set(int(s) for s in snapshot_steps)
    snaps = {0: state.copy()} if 0 in wanted or nsteps == 0 else {}
    if nsteps == 0:
        return RunResult(snaps, trace, state, [], [], None)

    st = TimeStepper(ops, medium, dt, nsteps, mode=mode, **(stepper_kwargs or {}))
    n2 = np.zeros(nsteps)
    p_norms = np.zeros(nsteps)
    e_norms = np.zeros(nsteps)
    w_rev = st.w[:nsteps][::-1].copy()
    for _ in range(nsteps):
        f = g = None
        if sources is not None:
            f, g = sources(state.k + 1, (state.k + 1) * dt)
        state = st.step(state, f, g)
        k = state.k
        e2 = ops.norm_e2(state.E)
        n2[k - 1] = e2
        plain = medium.eps_inf * e2 + ops.norm_h2(state.H)
        # Σ_{j=1}^{k} w_{k-j} ‖E^j‖²
        mem = medium.delta_eps * float(w_rev[nsteps - k :] @ n2[:k])
        trace.append(k, plain + mem, plain)
        p_norms[k - 1] = math.sqrt(max(ops.norm_e2(state.P), 0.0))
        e_norms[k - 1] = math.sqrt(e2)
        if state.k in wanted:
            snaps[state.k] = state.copy()
        if on_step is not None:
            on_step(state)
    return RunResult(snaps, trace, state, list(p_norms), list(e_norms), st)
