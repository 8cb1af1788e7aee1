"""
Frequency-domain recovery of permittivity, transfer function and reflection.

Time-harmonic convention e^{iωt}: the Havriliak-Negami permittivity is

    ε_r(ω) = ε∞ + Δε / (1 + (iωτ0)^α)^β = ε' - iε'',

a plane wave travels as e^{Υz} with Υ = -iω√ε_r / c0, and the transfer
function over a distance d is T(d, ω) = e^{Υd}.  From two probe series the
ratio of their Fourier transforms estimates T, and

    ε_r = -(c0 Υ / ω)²,   Υ = (ln|T| + i Δarg T) / d.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .fdtd1d import C0, PhysicalMedium

__all__ = [
    "FrequencyResponse",
    "analytic_permittivity",
    "analytic_reflection",
    "analytic_transfer",
    "dft",
    "phase_step_ok",
    "recover",
    "recover_from_spectra",
    "relative_errors",
    "trusted_band",
]


def analytic_permittivity(medium: PhysicalMedium, omega: ArrayLike) -> NDArray[np.complex128]:
    """ε∞ + Δε / (1 + (iωτ0)^α)^β with principal-branch powers."""
    om = np.asarray(omega, dtype=float)
    if np.any(~(om > 0)):
        raise ValueError("omega must be positive")
    x = (1j * om * medium.tau0) ** medium.alpha
    val = medium.eps_inf + medium.delta_eps / (1 + x) ** medium.beta
    return val[()] if val.ndim == 0 else val


def analytic_reflection(eps_r: ArrayLike) -> NDArray[np.float64]:
    """|(1 - √ε_r) / (1 + √ε_r)| with the principal square root."""
    s = np.sqrt(np.asarray(eps_r, dtype=complex))
    den = 1 + s
    if np.any(den == 0):
        raise ZeroDivisionError("1 + sqrt(eps_r) vanishes")
    val = np.abs((1 - s) / den)
    return val[()] if val.ndim == 0 else val


def analytic_transfer(eps_r: ArrayLike, omega: ArrayLike, d: float) -> NDArray[np.complex128]:
    """exp(Υ d) with Υ = -iω√ε_r / c0 for a signed separation d."""
    ups = -1j * np.asarray(omega, dtype=float) * np.sqrt(np.asarray(eps_r, dtype=complex)) / C0
    val = np.exp(ups * d)
    return val[()] if val.ndim == 0 else val


def dft(series: ArrayLike, dt: float, omegas: ArrayLike, t0: float = 0.0) -> NDArray[np.complex128]:
    """Ê(ω) = Δt Σ_k E^k e^{-iω t_k} with t_k = t0 + kΔt, at arbitrary ω."""
    e = np.asarray(series, dtype=float)
    om = np.asarray(omegas, dtype=float)
    t = t0 + dt * np.arange(e.size)
    return dt * (np.exp(-1j * np.multiply.outer(om, t)) @ e)


def trusted_band(spectrum: ArrayLike, rel: float = 1e-4) -> NDArray[np.bool_]:
    """Samples whose magnitude is at least ``rel`` times the largest one."""
    mag = np.abs(np.asarray(spectrum))
    return mag >= rel * mag.max()


@dataclass
class FrequencyResponse:
    """Recovered quantities at the sampled angular frequencies."""

    omegas: NDArray[np.float64]
    T_approx: NDArray[np.complex128]
    upsilon: NDArray[np.complex128]
    eps_approx: NDArray[np.complex128]
    refl_approx: NDArray[np.float64]
    d: float
    trusted: NDArray[np.bool_]
    degenerate: NDArray[np.bool_] = field(default_factory=lambda: np.zeros(0, bool))

    @property
    def eps_prime(self) -> NDArray[np.float64]:
        return self.eps_approx.real

    @property
    def eps_second(self) -> NDArray[np.float64]:
        return -self.eps_approx.imag


def _unwrap_from(phase: NDArray, omegas: NDArray, anchor: float | None) -> NDArray:
    """Unwrap along increasing ω starting from the sample nearest ``anchor``."""
    order = np.argsort(omegas)
    ph = phase[order]
    start = 0 if anchor is None else int(np.argmin(np.abs(omegas[order] - anchor)))
    out = np.empty_like(ph)
    out[start:] = np.unwrap(ph[start:])
    if start > 0:
        out[: start + 1] = np.unwrap(ph[: start + 1][::-1])[::-1]
    res = np.empty_like(out)
    res[order] = out
    return res


def recover(
    near: ArrayLike,
    far: ArrayLike,
    dt: float,
    d: float,
    omegas: ArrayLike,
    *,
    band_rel: float = 1e-4,
    reference: ArrayLike | None = None,
    phase_anchor: float | None = None,
) -> FrequencyResponse:
    """Recover T, Υ, ε_r and |R| from probe series at z* and z* + d.

    Parameters
    ----------
    near, far : array
        Probe series at the source node and at distance ``d`` (same length).
    dt : float
        Sampling step (s).
    d : float
        Signed separation (m); a negative value swaps the roles of the probes.
    omegas : array
        Angular frequencies (rad/s), sampled densely enough that the phase of
        T changes by less than π between neighbours.
    band_rel : float
        Trusted-band threshold relative to the peak of ``reference`` (the near
        spectrum by default).
    phase_anchor : float, optional
        Angular frequency at which the unwrapped phase takes its principal
        value; defaults to the lowest sampled frequency.
    """
    near = np.asarray(near, dtype=float)
    far = np.asarray(far, dtype=float)
    if near.shape != far.shape:
        raise ValueError("probe series must have the same length")
    if d == 0:
        raise ValueError("probe separation must be nonzero")
    om = np.asarray(omegas, dtype=float)
    En = dft(near, dt, om)
    Ef = dft(far, dt, om)
    ref = En if reference is None else dft(reference, dt, om)
    trusted = trusted_band(ref, band_rel)
    return recover_from_spectra(En, Ef, d, om, trusted=trusted, phase_anchor=phase_anchor)


def recover_from_spectra(
    near_hat: ArrayLike,
    far_hat: ArrayLike,
    d: float,
    omegas: ArrayLike,
    *,
    trusted: ArrayLike | None = None,
    phase_anchor: float | None = None,
) -> FrequencyResponse:
    """Recover T, Υ, ε_r and |R| from the two probe spectra.

    The phases of both spectra are unwrapped separately along ω before they
    are differenced, so T may wind through many turns across the band.
    """
    if d == 0:
        raise ValueError("probe separation must be nonzero")
    om = np.asarray(omegas, dtype=float)
    En = np.asarray(near_hat, dtype=complex)
    Ef = np.asarray(far_hat, dtype=complex)
    band = np.ones(om.shape, bool) if trusted is None else np.asarray(trusted, bool)
    band = band & (np.abs(En) > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        T = Ef / En
    dphase = _unwrap_from(np.angle(Ef), om, phase_anchor) - _unwrap_from(np.angle(En), om, phase_anchor)
    ups = (np.log(np.abs(T)) + 1j * dphase) / d
    eps = -((C0 * ups / om) ** 2)
    degenerate = np.abs(ups) == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        refl = np.where(degenerate, np.nan, np.abs((1 - np.sqrt(eps)) / (1 + np.sqrt(eps))))
    return FrequencyResponse(om, T, ups, eps, refl, float(d), band, degenerate)


def relative_errors(resp: FrequencyResponse, medium: PhysicalMedium) -> dict[str, NDArray[np.float64]]:
    """Pointwise relative errors of the recovered curves against the analytic ones.

    ε' and ε'' and |R| are compared pointwise.  Re T and Im T pass through zero
    on the band, so their errors are measured relative to |T|.
    """
    om = resp.omegas
    eps = analytic_permittivity(medium, om)
    T = analytic_transfer(eps, om, resp.d)
    R = analytic_reflection(eps)
    return {
        "eps_prime": np.abs(resp.eps_approx.real - eps.real) / np.abs(eps.real),
        "eps_second": np.abs(resp.eps_approx.imag - eps.imag) / np.abs(eps.imag),
        "refl": np.abs(resp.refl_approx - R) / R,
        "re_T": np.abs(resp.T_approx.real - T.real) / np.abs(T),
        "im_T": np.abs(resp.T_approx.imag - T.imag) / np.abs(T),
    }


def phase_step_ok(resp: FrequencyResponse) -> bool:
    """Farther probe lags: the unwrapped phase of T decreases with ω on the band."""
    ph = resp.upsilon.imag * resp.d
    band = resp.trusted
    return bool(np.all(np.diff(ph[band]) < 0)) if band.sum() > 1 else True

