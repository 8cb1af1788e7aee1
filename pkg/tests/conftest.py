"""Shared oracles for the test suite.

The reference Prabhakar values come from a brute-force power series in
60-digit arithmetic written independently of the package.
"""

from __future__ import annotations

import mpmath as mp
import pytest


def prabhakar_oracle(z, rho, mu, gamma, dps: int = 60) -> complex:
    """Σ (γ)_k z^k / (Γ(ρk + μ) k!) summed until the terms are negligible.

    The working precision is raised by the number of digits the largest term
    can exceed the result by, roughly |z|^{1/ρ} / ln 10.
    """
    dps = dps + int(abs(complex(z)) ** (1.0 / rho) / 2.302585)
    with mp.workdps(dps):
        z = mp.mpc(z)
        rho, mu, gamma = mp.mpf(rho), mp.mpf(mu), mp.mpf(gamma)
        total = mp.mpc(0)
        k = 0
        while True:
            term = mp.rf(gamma, k) * mp.rgamma(rho * k + mu) / mp.factorial(k) * z**k
            total += term
            if k > 20 and abs(term) < mp.mpf(10) ** (-dps + 10) * max(abs(total), 1):
                return complex(total)
            k += 1


def kernel_oracle(alpha, beta, mu, t, sigma=-1.0) -> float:
    """t^{μ-1} E^β_{α,μ}(σ t^α) in high precision."""
    with mp.workdps(60):
        t = mp.mpf(t)
        z = mp.mpf(sigma) * t ** mp.mpf(alpha)
        return float((t ** (mp.mpf(mu) - 1) * mp.mpc(prabhakar_oracle(z, alpha, mu, beta))).real)


@pytest.fixture(scope="session")
def oracle():
    return prabhakar_oracle


# {{{ acceptance report

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    """Store the verdict for one acceptance criterion (last write wins)."""
    prev = _ACCEPTANCE.get(number)
    if prev is not None:
        passed = passed and prev[0]
        detail = f"{prev[1]}; {detail}"
    _ACCEPTANCE[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


# }}}
