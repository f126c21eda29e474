"""Scattering phase, phase-at-threshold counting, and the trace identity.

The global phase eta(k) = arg det S(k) / 2 is defined mod pi per sample; a
continuous curve is reconstructed by unwrapping downward in k from a
high-wavenumber anchor where eta is provably small (|eta| ~ sum of potential
strengths / 2k).  Extrapolating the curve to k = 0 and comparing with

    eta(0) = pi * (n_bound + n_half/2 - channels/2)

turns phase counting into a strong end-to-end check: every module (potential
assembly, propagation, amplitudes, spectrum) has to be consistent for the
identity to land.  A second, independent threshold identity constrains the
reflection traces: Tr[rho(0) + rho_tilde(0)] = -2 (channels - n_half).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .amplitudes import AmplitudeSet, SMatrix, amplitude_scan, s_matrix, threshold_amplitudes
from .errors import (
    AnchorNotConverged,
    GridTooCoarse,
    NonUnitaryInput,
    ValidationError,
)
from .potential import ValidatedPotential
from .spectrum import spectrum_report, half_bound_count

UNITARITY_TOL = 1e-6
ANCHOR_TOL = 0.1
DEFAULT_POINTS = 2000
DEFAULT_K_MIN = 1e-3
SMALL_K_RATIO_LIMIT = 1.05


@dataclass(frozen=True, eq=False)
class PhaseCurve:
    """Unwrapped global phase eta over an ascending wavenumber grid."""

    ks: np.ndarray
    eta: np.ndarray
    anchor_k: float
    anchor_raw: float
    max_unitarity_residual: float


@dataclass(frozen=True)
class LevinsonResult:
    """Measured eta(0) against the state-counting prediction."""

    eta0: float
    predicted: float
    residual: float
    n_bound: int
    n_half_bound: int
    channels: int


@dataclass(frozen=True)
class TraceResult:
    """Threshold reflection-trace identity: trace vs -2 (channels - n_half)."""

    trace: float
    predicted: float
    residual: float
    n_half_bound: int
    channels: int


def raw_phase(sm: SMatrix, unitarity_tol: float = UNITARITY_TOL) -> float:
    """Principal-branch phase arg(det S)/2 in (-pi/2, pi/2].

    Rejects matrices that are not unitary within ``unitarity_tol``; a
    non-unitary S has no well-defined global phase and feeding one in is
    always an upstream propagation failure.
    """
    s = sm.s
    resid = float(np.max(np.abs(s.conj().T @ s - np.eye(s.shape[0]))))
    if not resid < unitarity_tol:
        raise NonUnitaryInput(
            f"S at k={sm.k:.6g} has unitarity residual {resid:.2e} "
            f"(limit {unitarity_tol:.0e})"
        )
    return float(np.angle(np.linalg.det(s)) / 2.0)


def unwrap_mod_pi(raws) -> np.ndarray:
    """Continuous curve through phases known only mod pi.

    Each sample is shifted by the multiple of pi that lands it nearest the
    previous unwrapped value.  Consecutive samples must be closer than pi/2
    after shifting, otherwise the branch choice is ambiguous and the grid is
    too coarse to unwrap.
    """
    raws = np.asarray(raws, dtype=float)
    out = np.empty_like(raws)
    out[0] = raws[0]
    for i in range(1, raws.size):
        cand = raws[i] + np.pi * np.round((out[i - 1] - raws[i]) / np.pi)
        if abs(cand - out[i - 1]) >= (np.pi / 2) * (1 - 1e-12):
            raise GridTooCoarse(
                f"phase step {abs(cand - out[i - 1]):.3f} rad at sample {i} "
                "is ambiguous mod pi; refine the wavenumber grid"
            )
        out[i] = cand
    return out


def default_k_grid(
    spec: ValidatedPotential,
    points: int = DEFAULT_POINTS,
    k_min: float = DEFAULT_K_MIN,
    k_max: float | None = None,
) -> np.ndarray:
    """Descending log-spaced grid from the anchor region down to small k."""
    if k_max is None:
        k_max = 100.0 / (2.0 * spec.range)
    if not (0 < k_min < k_max):
        raise ValidationError(f"need 0 < k_min < k_max, got [{k_min}, {k_max}]")
    if points < 2:
        raise ValidationError("grid needs at least 2 points")
    return np.geomspace(k_max, k_min, points)


def _validate_grid(spec: ValidatedPotential, ks: np.ndarray) -> None:
    if ks.ndim != 1 or ks.size < 2:
        raise ValidationError("phase grid must be 1-D with at least 2 samples")
    if not np.all(ks > 0):
        raise ValidationError("phase grid must be strictly positive")
    if not np.all(np.diff(ks) < 0):
        raise ValidationError("phase grid must be strictly descending")
    anchor_floor = 50.0 / (2.0 * spec.range)
    if ks[0] < anchor_floor * (1 - 1e-9):
        raise ValidationError(
            f"grid anchor {ks[0]:.6g} is below the high-k floor {anchor_floor:.6g}"
        )
    small = ks < 1.0
    if np.any(small[1:]):
        ratios = ks[:-1][small[1:]] / ks[1:][small[1:]]
        if np.any(ratios > SMALL_K_RATIO_LIMIT * (1 + 1e-12)):
            raise ValidationError(
                "adjacent grid ratio exceeds 1.05 in the small-k region; "
                "the unwrap needs denser sampling there"
            )


def phase_curve(
    spec: ValidatedPotential,
    k_grid=None,
    *,
    unitarity_tol: float = UNITARITY_TOL,
    anchor_tol: float = ANCHOR_TOL,
) -> PhaseCurve:
    """Unwrapped eta(k), anchored at the largest grid wavenumber.

    The anchor sample must satisfy |eta| < anchor_tol so the mod-pi branch
    there is unambiguously the one converging to 0 at infinite k; the rest
    of the curve follows by nearest-branch continuation downward in k.
    """
    if k_grid is None:
        k_grid = default_k_grid(spec)
    ks = np.asarray(k_grid, dtype=float)
    _validate_grid(spec, ks)
    sets, _ = amplitude_scan(spec, ks)
    smats = np.stack([s_matrix(a).s for a in sets])
    resid = np.max(
        np.abs(np.conj(np.swapaxes(smats, -1, -2)) @ smats - np.eye(smats.shape[-1])),
        axis=(-1, -2),
    )
    worst = float(np.max(resid))
    if not worst < unitarity_tol:
        k_bad = ks[int(np.argmax(resid))]
        raise NonUnitaryInput(
            f"S at k={k_bad:.6g} has unitarity residual {worst:.2e} "
            f"(limit {unitarity_tol:.0e})"
        )
    raws = np.angle(np.linalg.det(smats)) / 2.0
    if not abs(raws[0]) < anchor_tol:
        raise AnchorNotConverged(
            f"anchor phase {raws[0]:.4f} at k={ks[0]:.6g} is not within "
            f"{anchor_tol} of 0; raise the anchor wavenumber"
        )
    eta = unwrap_mod_pi(raws)
    return PhaseCurve(
        ks=ks[::-1].copy(),
        eta=eta[::-1].copy(),
        anchor_k=float(ks[0]),
        anchor_raw=float(raws[0]),
        max_unitarity_residual=worst,
    )


def eta_at_threshold(curve: PhaseCurve) -> float:
    """Linear extrapolation of the curve to k = 0 from its two smallest samples."""
    k1, k2 = float(curve.ks[0]), float(curve.ks[1])
    e1, e2 = float(curve.eta[0]), float(curve.eta[1])
    return (e1 * k2 - e2 * k1) / (k2 - k1)


def levinson_check(
    spec: ValidatedPotential,
    k_grid=None,
    *,
    alpha_max: float | None = None,
    grid_points: int | None = None,
    unitarity_tol: float = UNITARITY_TOL,
    anchor_tol: float = ANCHOR_TOL,
) -> LevinsonResult:
    """Compare extrapolated eta(0) with pi (n_bound + n_half/2 - channels/2)."""
    curve = phase_curve(
        spec, k_grid, unitarity_tol=unitarity_tol, anchor_tol=anchor_tol
    )
    eta0 = eta_at_threshold(curve)
    kwargs = {} if grid_points is None else {"grid_points": grid_points}
    report = spectrum_report(spec, alpha_max=alpha_max, **kwargs)
    predicted = np.pi * (
        report.n_bound + report.n_half_bound / 2.0 - report.channels / 2.0
    )
    return LevinsonResult(
        eta0=eta0,
        predicted=float(predicted),
        residual=float(abs(eta0 - predicted)),
        n_bound=report.n_bound,
        n_half_bound=report.n_half_bound,
        channels=report.channels,
    )


def threshold_trace_check(
    spec: ValidatedPotential,
    extrapolation_ks=None,
) -> TraceResult:
    """Compare Tr[rho(0) + rho_tilde(0)] with -2 (channels - n_half)."""
    kwargs = {} if extrapolation_ks is None else {"extrapolation_ks": extrapolation_ks}
    th: AmplitudeSet = threshold_amplitudes(spec, **kwargs)
    n_half, _ = half_bound_count(spec)
    trace = float(np.trace(th.rho).real + np.trace(th.rho_tilde).real)
    predicted = -2.0 * (spec.channels - n_half)
    return TraceResult(
        trace=trace,
        predicted=predicted,
        residual=float(abs(trace - predicted)),
        n_half_bound=n_half,
        channels=spec.channels,
    )
