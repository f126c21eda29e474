"""Bound-state and half-bound-state enumeration.

A bound state at energy -alpha^2 is a solution decaying on both sides,
which exists exactly when the matching matrix

    M(alpha) = alpha^2 chi + alpha (chi' + phi) + phi'     (blocks at x = R)

is singular.  Roots of det M(alpha) are located by a sign-change sweep over
an alpha grid refined by bisection; even-multiplicity crossings (where the
determinant touches zero without changing sign) are caught as local minima
of the smallest singular value and refined by golden-section search.

Half-bound states sit exactly at threshold: a bounded, non-decaying solution
exists for every zero eigenvalue of phi'(k=0) at x = R.  Their count feeds
both the phase-at-threshold prediction and the threshold trace identity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, ValidationError
from .potential import ValidatedPotential
from .propagator import fundamental_at_R, fundamental_batch

ALPHA_MIN = 1e-4
ROOT_XTOL = 1e-10
MULTIPLICITY_RTOL = 1e-6
DEFAULT_GRID_POINTS = 512


class GridTooCoarseWarning(UserWarning):
    """Two determinant roots landed in one grid bracket; the bracket was split once."""


@dataclass(frozen=True)
class BoundState:
    """One bound state: decay rate alpha (energy -alpha^2) and multiplicity."""

    alpha: float
    multiplicity: int

    @property
    def energy(self) -> float:
        return -self.alpha * self.alpha


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Discrete-spectrum summary used by the phase-at-threshold checks."""

    channels: int
    bound_states: tuple[BoundState, ...]
    n_bound: int
    n_half_bound: int
    half_bound_eigenvalues: np.ndarray


def bound_matrix(spec: ValidatedPotential, alpha: float) -> np.ndarray:
    """Matching matrix M(alpha) whose null space holds bound states."""
    if not alpha > 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    rep = fundamental_at_R(spec, -alpha * alpha)
    st = rep.state
    return alpha * alpha * st.chi + alpha * (st.chi_prime + st.phi) + st.phi_prime


def _bound_matrices_batch(spec: ValidatedPotential, alphas: np.ndarray) -> np.ndarray:
    blocks, _, _ = fundamental_batch(spec, -alphas * alphas)
    phi, phip, chi, chip = blocks
    al = alphas[:, None, None]
    return al * al * chi + al * (chip + phi) + phip


def default_alpha_max(spec: ValidatedPotential) -> float:
    """Search ceiling: 1 plus a spectral bound on the decay rate.

    A bound state's alpha cannot exceed sqrt(max depth) for extended
    potential pieces; an isolated delta of strength L binds no deeper than
    alpha = ||L||/2, so each term contributes the larger of the two bounds.
    """
    bound = 0.0
    for seg in spec.segments:
        bound = max(bound, float(np.sqrt(np.linalg.norm(seg.matrix, np.inf))))
    for term in spec.deltas:
        bound = max(bound, float(np.linalg.norm(term.strength, np.inf)) / 2.0)
    if spec.sampled is not None:
        xs = np.linspace(-spec.range, spec.range, 65)
        for x in xs:
            bound = max(
                bound, float(np.sqrt(np.linalg.norm(spec.sampled.evaluator(x), np.inf)))
            )
    return 1.0 + bound


def _det_at(spec, alpha):
    return float(np.linalg.det(bound_matrix(spec, alpha)))


def _sigma_min_at(spec, alpha):
    return float(np.linalg.svd(bound_matrix(spec, alpha), compute_uv=False)[-1])


def _bisect_root(spec, lo, hi, f_lo, f_hi):
    """Bisection on sign(det M); the determinant is smooth in alpha."""
    for _ in range(200):
        if hi - lo <= ROOT_XTOL:
            break
        mid = 0.5 * (lo + hi)
        f_mid = _det_at(spec, mid)
        if f_mid == 0.0:
            return mid
        if (f_lo < 0) != (f_mid < 0):
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    else:
        raise ConvergenceFailure(f"bisection stalled on bracket [{lo}, {hi}]")
    return 0.5 * (lo + hi)


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _golden_min(spec, lo, hi):
    """Golden-section minimization of the smallest singular value of M."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = _sigma_min_at(spec, c), _sigma_min_at(spec, d)
    for _ in range(300):
        if b - a <= ROOT_XTOL:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _sigma_min_at(spec, c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _sigma_min_at(spec, d)
    else:
        raise ConvergenceFailure(f"golden-section stalled on bracket [{lo}, {hi}]")
    return 0.5 * (a + b)


def _multiplicity(spec, alpha):
    # Tolerance floor of 1 covers the fully degenerate case where every
    # singular value of M vanishes at the root (a purely relative test
    # would then reject the root it was designed to count).
    m = bound_matrix(spec, alpha)
    sv = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(sv < MULTIPLICITY_RTOL * (1.0 + sv[0])))


def find_bound_states(
    spec: ValidatedPotential,
    alpha_max: float | None = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> tuple[BoundState, ...]:
    """All bound states with alpha in [1e-4, alpha_max], sorted by alpha.

    Sign changes of det M between grid nodes are refined by bisection; local
    minima of the smallest singular value that dip below sqrt of the
    multiplicity tolerance are refined by golden-section search and kept
    only if M is genuinely singular there (these are the even-multiplicity
    crossings bisection cannot see).  If a refined bracket turns out to hold
    two distinct roots, it is split once and a GridTooCoarseWarning is
    issued.
    """
    if alpha_max is None:
        alpha_max = default_alpha_max(spec)
    if not alpha_max > ALPHA_MIN:
        raise ValidationError(f"alpha_max must exceed {ALPHA_MIN}, got {alpha_max}")
    if grid_points < 64:
        raise ValidationError("grid_points must be at least 64")
    alphas = np.linspace(ALPHA_MIN, alpha_max, grid_points)
    mats = _bound_matrices_batch(spec, alphas)
    dets = np.linalg.det(mats)
    svs = np.linalg.svd(mats, compute_uv=False)
    sigma_min = svs[:, -1]
    sigma_max = svs[:, 0]

    roots: list[float] = []

    def add_root(alpha):
        for r in roots:
            if abs(r - alpha) <= 1e-8 * (1 + alpha):
                return
        roots.append(alpha)

    for i in range(len(alphas) - 1):
        if dets[i] == 0.0:
            add_root(float(alphas[i]))
            continue
        if (dets[i] < 0) != (dets[i + 1] < 0):
            lo, hi = float(alphas[i]), float(alphas[i + 1])
            root = _bisect_root(spec, lo, hi, float(dets[i]), float(dets[i + 1]))
            # A sign change can hide a second root in the same bracket;
            # probe the two sides and split once if either still crosses.
            extra = []
            for a, b in ((lo, root - 4 * ROOT_XTOL), (root + 4 * ROOT_XTOL, hi)):
                if b <= a:
                    continue
                fa, fb = _det_at(spec, a), _det_at(spec, b)
                if (fa < 0) != (fb < 0):
                    extra.append(_bisect_root(spec, a, b, fa, fb))
            if extra:
                warnings.warn(
                    f"bracket [{lo:.6g}, {hi:.6g}] held multiple roots; "
                    "increase grid_points",
                    GridTooCoarseWarning,
                    stacklevel=2,
                )
            for r in [root, *extra]:
                add_root(float(r))

    # Even-multiplicity candidates: interior dips of sigma_min.  A dip
    # qualifies if it is already below the square root of the singularity
    # tolerance, or if the neighbouring slopes show it could still reach
    # zero between nodes (sigma_min of a fully degenerate M vanishes
    # linearly, dropping by about one slope-step per node, so the node value
    # near a zero is bounded by the adjacent differences).  The refined
    # point is kept only if M is genuinely singular there.
    for i in range(1, len(alphas) - 1):
        if sigma_min[i] >= sigma_min[i - 1] or sigma_min[i] > sigma_min[i + 1]:
            continue
        fast = np.sqrt(MULTIPLICITY_RTOL * max(sigma_max[i], 1e-300))
        reach = 2.0 * max(
            sigma_min[i - 1] - sigma_min[i], sigma_min[i + 1] - sigma_min[i]
        )
        if sigma_min[i] >= max(fast, reach):
            continue
        cand = _golden_min(spec, float(alphas[i - 1]), float(alphas[i + 1]))
        if _multiplicity(spec, cand) > 0:
            add_root(float(cand))

    states = tuple(
        BoundState(alpha=r, multiplicity=max(1, _multiplicity(spec, r)))
        for r in sorted(roots)
    )
    return states


def half_bound_count(spec: ValidatedPotential) -> tuple[int, np.ndarray]:
    """Number of threshold (half-bound) solutions and the diagnostic spectrum.

    Counts zero eigenvalues of phi'(k=0) at x = R against the tolerance
    1e-8 * (1 + max-norm).  The returned eigenvalue array lists the zeros
    first, then the rest by ascending magnitude.
    """
    rep = fundamental_at_R(spec, 0.0)
    phip = rep.state.phi_prime
    eigs = np.linalg.eigvals(phip)
    tol = 1e-8 * (1.0 + float(np.max(np.abs(phip))))
    is_zero = np.abs(eigs) < tol
    order = np.lexsort((eigs.imag, eigs.real, np.abs(eigs), ~is_zero))
    return int(np.sum(is_zero)), eigs[order]


def spectrum_report(
    spec: ValidatedPotential,
    alpha_max: float | None = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> SpectrumReport:
    """Bound-state list plus half-bound count in one summary."""
    states = find_bound_states(spec, alpha_max=alpha_max, grid_points=grid_points)
    n_half, eigs = half_bound_count(spec)
    return SpectrumReport(
        channels=spec.channels,
        bound_states=states,
        n_bound=int(sum(s.multiplicity for s in states)),
        n_half_bound=n_half,
        half_bound_eigenvalues=eigs,
    )
