"""Shared fixtures and the independent shooting oracle.

The oracle computes scattering amplitudes by a route disjoint from the
library's fundamental-matrix construction: it integrates the physical
matrix solution with an adaptive high-order Runge-Kutta method
(scipy's DOP853), shooting from a pure outgoing/transmitted wave on one
side of the support and reading the incident and reflected coefficients
off the plane-wave match on the other side.  Delta terms enter as
derivative jumps at their positions.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.integrate import solve_ivp

from scatter1d import (
    ValidatedPotential,
    bundled_spec_path,
    evaluate,
    load_spec,
    validate,
)

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

BUNDLED_NAMES = (
    "free",
    "single_delta",
    "single_delta_half_bound",
    "double_delta_a0.95",
    "double_delta_a1.00",
    "double_delta_a1.05",
    "barrier",
    "square_well",
)


def bundled(name: str) -> ValidatedPotential:
    return validate(load_spec(bundled_spec_path(name)))


@pytest.fixture(params=BUNDLED_NAMES)
def bundled_spec(request) -> ValidatedPotential:
    return bundled(request.param)


def _breakpoints(spec: ValidatedPotential) -> list[float]:
    pts = {-spec.range, spec.range}
    for seg in spec.segments:
        pts.add(seg.lo)
        pts.add(seg.hi)
    for term in spec.deltas:
        pts.add(term.position)
    return sorted(pts)


def _integrate(spec, k, psi, dpsi, x0, x1):
    n = spec.channels
    if x1 == x0:
        return psi, dpsi

    def rhs(x, y):
        p = y[: n * n].reshape(n, n)
        dp = y[n * n :].reshape(n, n)
        return np.concatenate(
            [dp.ravel(), ((evaluate(spec, x) - k * k * np.eye(n)) @ p).ravel()]
        )

    sol = solve_ivp(
        rhs,
        (x0, x1),
        np.concatenate([psi.ravel(), dpsi.ravel()]),
        method="DOP853",
        rtol=1e-11,
        atol=1e-13,
    )
    assert sol.success, sol.message
    y = sol.y[:, -1]
    return y[: n * n].reshape(n, n), y[n * n :].reshape(n, n)


def oracle_amplitudes(spec: ValidatedPotential, k: float):
    """(rho, rho_tilde, tau, tau_tilde) by plane-wave matching of shot solutions."""
    n, r = spec.channels, spec.range
    eye = np.eye(n, dtype=complex)
    ik = 1j * k
    pts = _breakpoints(spec)
    deltas = {d.position: np.asarray(d.strength, dtype=float) for d in spec.deltas}

    # Incidence from the left: start from the pure transmitted wave
    # e^{ikx} I above the support and integrate down through it.  Crossing
    # a delta downward subtracts the jump: psi'(p-) = psi'(p+) - L psi(p).
    psi, dpsi = np.exp(ik * r) * eye, ik * np.exp(ik * r) * eye
    x = r
    if r in deltas:
        dpsi = dpsi - deltas[r] @ psi
    for p in sorted((q for q in pts if q < r), reverse=True):
        psi, dpsi = _integrate(spec, k, psi, dpsi, x, p)
        if p in deltas:
            dpsi = dpsi - deltas[p] @ psi
        x = p
    incident = (ik * psi + dpsi) * np.exp(ik * r) / (2 * ik)
    reflected = (ik * psi - dpsi) * np.exp(-ik * r) / (2 * ik)
    tau = np.linalg.inv(incident)
    rho = reflected @ tau

    # Incidence from the right: pure left-going transmitted wave below.
    psi, dpsi = np.exp(ik * r) * eye, -ik * np.exp(ik * r) * eye
    x = -r
    if -r in deltas:
        dpsi = dpsi + deltas[-r] @ psi
    for p in sorted(q for q in pts if q > -r):
        psi, dpsi = _integrate(spec, k, psi, dpsi, x, p)
        if p in deltas:
            dpsi = dpsi + deltas[p] @ psi
        x = p
    incident = (ik * psi - dpsi) * np.exp(ik * r) / (2 * ik)
    reflected = (ik * psi + dpsi) * np.exp(-ik * r) / (2 * ik)
    tau_tilde = np.linalg.inv(incident)
    rho_tilde = reflected @ tau_tilde
    return rho, rho_tilde, tau, tau_tilde


def oracle_deviation(spec: ValidatedPotential, amp) -> float:
    """Max entry-wise gap between an AmplitudeSet and the shooting oracle."""
    rho, rho_tilde, tau, tau_tilde = oracle_amplitudes(spec, amp.k)
    return float(
        max(
            np.max(np.abs(rho - amp.rho)),
            np.max(np.abs(rho_tilde - amp.rho_tilde)),
            np.max(np.abs(tau - amp.tau)),
            np.max(np.abs(tau_tilde - amp.tau_tilde)),
        )
    )
