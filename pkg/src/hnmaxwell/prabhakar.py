"""
Three-parameter Mittag-Leffler (Prabhakar) function and the kernels built on it.

The Prabhakar function is

    E^γ_{ρ,μ}(z) = Σ_{k≥0} (γ)_k z^k / (Γ(ρk + μ) k!)

with (γ)_k the rising factorial.  The scaled kernel

    e^γ_{ρ,μ}(t; σ) = t^{μ-1} E^γ_{ρ,μ}(σ t^ρ)

has Laplace transform s^{ργ-μ} / (s^ρ - σ)^γ, which is what the contour
branch of :func:`ml3` inverts.  With ρ = α, μ = αβ, γ = β and σ = -1 the kernel
is the time-domain susceptibility of a Havriliak-Negami medium, and its cell
integrals are the convolution-quadrature weights returned by :func:`weights`.

Evaluation strategy
-------------------
* ``|z| <= 1``: power series, truncated once the terms drop below 1e-16 of the
  partial sum.
* ``|z| > 1`` in the sector ``|arg z| >= ρπ`` (this contains the negative real
  axis whenever ρ <= 1): trapezoidal rule on a cotangent (Talbot-type) contour
  for the inverse Laplace transform at t = 1.  Every singularity of the
  transform then sits on the negative real axis, which the contour encloses.
  Where the contour terms cancel heavily and ``|z|^{1/ρ}`` is modest, the
  value is recomputed from the series in extended precision.
* Anything else: the series summed in extended precision with ``mpmath``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import rgamma

__all__ = [
    "ContourError",
    "KernelSpec",
    "MLParams",
    "WeightTable",
    "kernel_e",
    "laplace_symbol",
    "ml3",
    "talbot_contour",
    "weight_sum",
    "weights",
]

SERIES_RADIUS = 1.0
DEFAULT_NODES = 24
# Relative discrepancy between the two contour resolutions that counts as a
# failure.  Well-conditioned evaluations agree to ~1e-12.
CONTOUR_CHECK_TOL = 1e-9
# Contour values whose predicted relative accuracy (eps times the term scale
# over the result) is worse than REFINE_TOL, or whose two resolutions differ by
# more than REFINE_GAP, are recomputed from the series in extended precision,
# provided |z|^{1/ρ} <= REFINE_GROWTH keeps that affordable (about 110 extra
# digits at the limit).
REFINE_TOL = 1e-15
REFINE_GAP = 1e-13
REFINE_GROWTH = 250.0

_EPS = np.finfo(float).eps
_OVERFLOW_EXPONENT = 709.0


class ContourError(ArithmeticError):
    """Contour quadrature could not certify the requested accuracy.

    Attributes
    ----------
    achieved : float
        Largest relative discrepancy observed between two contour resolutions.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class MLParams:
    """Parameters (ρ, μ, γ) of E^γ_{ρ,μ}."""

    rho: float
    mu: float
    gamma: float

    def __post_init__(self) -> None:
        for name in ("rho", "mu", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")


@dataclass(frozen=True)
class KernelSpec:
    """Havriliak-Negami kernel e^β_{α,·}(t; σ).

    ``alpha = 1`` is accepted so that Debye closed forms can be used as checks;
    the solvers themselves use 0 < alpha < 1.
    """

    alpha: float
    beta: float
    sigma: float = -1.0

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not (math.isfinite(self.sigma) and self.sigma < 0):
            raise ValueError(f"sigma must be negative, got {self.sigma}")

    @property
    def time_scale(self) -> float:
        """Factor c with σ = -c^α, so that e(t; σ) relates to e(ct; -1)."""
        return (-self.sigma) ** (1.0 / self.alpha)


@dataclass(frozen=True)
class WeightTable:
    """Convolution-quadrature weights w[j] = ∫_{jΔt}^{(j+1)Δt} e^β_{α,αβ}(s; σ) ds."""

    alpha: float
    beta: float
    sigma: float
    dt: float
    w: NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        self.w.setflags(write=False)

    def __len__(self) -> int:
        return len(self.w)

    def __getitem__(self, j):
        return self.w[j]

    @property
    def spec(self) -> KernelSpec:
        return KernelSpec(self.alpha, self.beta, self.sigma)


# {{{ contour


def talbot_contour(n: int) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Nodes and weights of an n-point cotangent contour for t = 1.

    Returns ``(s, w)`` such that ``f(1) ≈ Σ_k w_k e^{s_k} F(s_k)`` for a
    Laplace transform ``F`` whose singularities lie on the negative real axis.
    The contour shape is the optimized cotangent contour of Trefethen,
    Weideman and Schmelzer (BIT 46, 2006), sampled at midpoints in θ.
    """
    theta = -np.pi + (np.arange(n) + 0.5) * (2 * np.pi / n)
    a, b, c, d = 0.5017, 0.6407, 0.6122, 0.2645
    s = n * (a * theta / np.tan(b * theta) - c + 1j * d * theta)
    ds = n * (a / np.tan(b * theta) - a * b * theta / np.sin(b * theta) ** 2 + 1j * d)
    # (1 / 2πi) · (2π / n) · ds/dθ
    return s, ds / (1j * n)


def _contour_ml(z: NDArray[np.complex128], p: MLParams, n: int) -> tuple[NDArray, NDArray]:
    s, w = talbot_contour(n)
    zz = z[:, None]
    terms = np.exp(s) * w * s ** (p.rho * p.gamma - p.mu) * (s**p.rho - zz) ** (-p.gamma)
    return terms.sum(axis=1), np.abs(terms).sum(axis=1)


def _ml_contour_checked(z: NDArray[np.complex128], p: MLParams, n: int) -> tuple[NDArray, NDArray, NDArray]:
    """Contour values, the sum of the term magnitudes, and the n vs n + 4 gap."""
    val, scale = _contour_ml(z, p, n)
    ref, _ = _contour_ml(z, p, n + 4)
    diff = np.abs(val - ref)
    allowed = np.maximum(CONTOUR_CHECK_TOL * np.abs(val), 1e3 * _EPS * scale)
    bad = ~(diff <= allowed)
    if np.any(bad):
        rel = float(np.max(diff[bad] / np.maximum(np.abs(val[bad]), 1e-300)))
        raise ContourError(
            f"contour quadrature for E^{p.gamma}_{{{p.rho},{p.mu}}} did not converge "
            f"(relative discrepancy {rel:.2e})",
            achieved=rel,
        )
    return val, scale, diff


# }}}


# {{{ series


def _ml_series(z: NDArray[np.complex128], p: MLParams, kmax: int = 5000) -> NDArray[np.complex128]:
    total = np.zeros_like(z)
    zk = np.ones_like(z)
    poch_over_fact = 1.0  # (γ)_k / k!
    quiet = 0
    for k in range(kmax):
        term = poch_over_fact * rgamma(p.rho * k + p.mu) * zk
        total = total + term
        small = np.abs(term) <= 1e-16 * np.abs(total)
        if np.all(small | (term == 0)):
            quiet += 1
            # a few consecutive negligible terms guard against isolated zeros
            # of 1/Γ at nonpositive integers
            if quiet >= 3:
                return total
        else:
            quiet = 0
        poch_over_fact *= (p.gamma + k) / (k + 1)
        zk = zk * z
    raise ContourError("power series did not converge", achieved=float("inf"))


def _ml_mpmath(z: NDArray[np.complex128], p: MLParams) -> NDArray[np.complex128]:
    import mpmath

    out = np.empty_like(z)
    for i, zi in enumerate(z):
        # the function grows like exp(Re z^{1/ρ}) off the negative sector
        lead = (complex(zi) ** (1.0 / p.rho)).real
        if lead > _OVERFLOW_EXPONENT:
            raise OverflowError(f"E^{p.gamma}_{{{p.rho},{p.mu}}}({zi}) exceeds the double range")
        # terms peak near exp(|z|^{1/ρ}); carry enough digits to absorb that
        growth = abs(zi) ** (1.0 / p.rho) / math.log(10)
        dps = int(30 + growth)
        with mpmath.workdps(dps):
            zm = mpmath.mpc(zi)
            rho, mu, gam = mpmath.mpf(p.rho), mpmath.mpf(p.mu), mpmath.mpf(p.gamma)
            total = mpmath.mpc(0)
            coef = mpmath.mpf(1)
            zk = mpmath.mpc(1)
            tol = mpmath.mpf(10) ** (-dps + 3)
            k = 0
            while True:
                term = coef * zk * mpmath.rgamma(rho * k + mu)
                total += term
                if k > 2 * growth + 10 and abs(term) <= tol * max(abs(total), 1):
                    break
                coef = coef * (gam + k) / (k + 1)
                zk *= zm
                k += 1
            out[i] = complex(total)
    return out


# }}}


def ml3(
    z: ArrayLike,
    rho: float,
    mu: float,
    gamma: float,
    *,
    nodes: int = DEFAULT_NODES,
) -> np.ndarray | float | complex:
    """Evaluate the Prabhakar function E^γ_{ρ,μ}(z).

    Parameters
    ----------
    z : scalar or array_like
        Argument(s), real or complex.
    rho, mu, gamma : float
        Function parameters, ``rho > 0``.  ``gamma`` may be negative.
    nodes : int
        Number of contour nodes used when ``|z| > 1``.

    Returns
    -------
    ndarray or scalar
        Real output for real input, complex output for complex input.

    Raises
    ------
    ValueError
        Non-finite ``z`` or invalid parameters.
    ContourError
        Contour quadrature failed its a-posteriori consistency check.
    OverflowError
        The value exceeds the double-precision range.
    """
    p = MLParams(float(rho), float(mu), float(gamma))
    z_in = np.asarray(z)
    is_real = not np.iscomplexobj(z_in)
    zc = np.atleast_1d(z_in).astype(np.complex128).ravel()
    if not np.all(np.isfinite(zc)):
        raise ValueError("ml3 argument must be finite")

    out = np.empty_like(zc)
    near = np.abs(zc) <= SERIES_RADIUS
    if np.any(near):
        out[near] = _ml_series(zc[near], p)

    far = ~near
    if np.any(far):
        # the transform is singular only on the cut when |arg z| >= ρπ
        arg_ok = np.abs(np.angle(zc)) >= p.rho * np.pi * (1 - 1e-12)
        contour = far & arg_ok & (p.rho <= 1) & (p.mu > 0)
        if np.any(contour):
            val, scale, gap = _ml_contour_checked(zc[contour], p, nodes)
            # The terms of the contour sum cancel down to the result, so the
            # attainable relative accuracy is about eps * scale / |value|.
            # Where that or the resolution gap is poor and the series is
            # affordable, use the series.
            mag = np.abs(val)
            lossy = (_EPS * scale > REFINE_TOL * mag) | (gap > REFINE_GAP * mag)
            cheap = np.abs(zc[contour]) ** (1.0 / p.rho) <= REFINE_GROWTH
            refine = lossy & cheap
            idx = np.flatnonzero(contour)
            if np.any(refine):
                val[refine] = _ml_mpmath(zc[idx[refine]], p)
            out[contour] = val
        rest = far & ~contour
        if np.any(rest):
            out[rest] = _ml_mpmath(zc[rest], p)

    out = out.reshape(z_in.shape)
    if is_real:
        out = out.real
    return out[()] if out.ndim == 0 else out


def kernel_e(spec: KernelSpec, mu: float, gamma: float, t: ArrayLike) -> np.ndarray | float:
    """Scaled kernel e^γ_{α,μ}(t; σ) = t^{μ-1} E^γ_{α,μ}(σ t^α) for t > 0."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise ValueError("kernel_e requires t > 0")
    val = t_arr ** (mu - 1.0) * ml3(spec.sigma * t_arr**spec.alpha, spec.alpha, mu, gamma)
    return val[()] if np.ndim(val) == 0 else val


# {{{ weights

# Below this index the weights are taken as differences of kernel values.  From
# here on they are integrated directly on a contour scaled to t_{j+1}, which
# avoids cancellation between two nearly equal kernel values.
_DIRECT_FROM = 16


def _unit_weights(alpha: float, beta: float, h: float, K: int, nodes: int) -> NDArray[np.float64]:
    """Weights for σ = -1 and step h."""
    w = np.empty(K)
    j0 = min(_DIRECT_FROM, K)
    t = h * np.arange(1, j0 + 1)
    e = t ** (alpha * beta) * ml3(-(t**alpha), alpha, alpha * beta + 1, beta, nodes=nodes)
    w[:j0] = np.diff(np.concatenate([[0.0], e]))
    if K > j0:
        s, q = talbot_contour(nodes)
        # cell integral over [t_j, t_{j+1}] of the kernel, as an inverse
        # transform of (e^{sh} - 1) e^{s t_j} / (s (s^α + 1)^β) at scaled time 1
        fixed = np.exp(s) * q / s
        for start in range(j0, K, 4096):
            stop = min(start + 4096, K)
            jp1 = np.arange(start, stop, dtype=float)[:, None] + 1.0
            sym = ((s / (jp1 * h)) ** alpha + 1.0) ** (-beta)
            w[start:stop] = (fixed * -np.expm1(-s / jp1) * sym).sum(axis=1).real
    return w


def weights(spec: KernelSpec, dt: float, K: int, *, nodes: int = DEFAULT_NODES) -> WeightTable:
    """Convolution-quadrature weights w[0..K-1] for step ``dt``.

    w[j] = e^β_{α,αβ+1}((j+1)Δt; σ) - e^β_{α,αβ+1}(jΔt; σ), with the kernel at
    t = 0 taken as 0.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if K < 1:
        raise ValueError("K must be at least 1")
    c = spec.time_scale
    # e^β_{α,αβ+1}(t; -c^α) = c^{-αβ} e^β_{α,αβ+1}(ct; -1)
    w = c ** (-spec.alpha * spec.beta) * _unit_weights(spec.alpha, spec.beta, c * dt, int(K), nodes)
    return WeightTable(spec.alpha, spec.beta, spec.sigma, float(dt), w)


def weight_sum(spec: KernelSpec, dt: float, k: int) -> float:
    """Closed form of Σ_{j<k} w[j], namely e^β_{α,αβ+1}(kΔt; σ)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return float(kernel_e(spec, spec.alpha * spec.beta + 1.0, spec.beta, k * dt))


# }}}


def laplace_symbol(alpha: float, beta: float, varrho: float, omega: ArrayLike) -> np.ndarray | complex:
    """Evaluate (ϱ + (iω)^α)^β / (iω) through its polar form.

    With ϱ + ω^α e^{iπα/2} = r e^{iθ}, the symbol equals
    ω^{-1} r^β (sin βθ - i cos βθ), whose real part is nonnegative.
    """
    if not 0 < alpha <= 1 or not 0 < beta <= 1:
        raise ValueError("alpha and beta must lie in (0, 1]")
    if not varrho > 0:
        raise ValueError("varrho must be positive")
    om = np.asarray(omega, dtype=float)
    if np.any(~(om > 0)):
        raise ValueError("omega must be positive")
    wa = om**alpha
    half = 0.5 * np.pi * alpha
    re = varrho + wa * np.cos(half)
    im = wa * np.sin(half)
    r = np.hypot(re, im)
    theta = np.arctan2(im, re)
    val = r**beta / om * (np.sin(beta * theta) - 1j * np.cos(beta * theta))
    return val[()] if val.ndim == 0 else val
