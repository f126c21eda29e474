"""Transfer-factor form of the amplitudes and composition of scatterers.

The 2N x 2N transfer factor propagates plane-wave coefficient pairs across
a scatterer, so placing scatterers side by side is matrix multiplication:
the factor of the leftmost piece is the leftmost matrix in the product.
Blocks in terms of the amplitudes:

    Lambda = [[tau^-1,            -tau^-1 rho_tilde],
              [rho tau^-1,        (tau_tilde^H)^-1  ]]

Translation by d maps rho -> rho e^{+2ikd} and rho_tilde -> rho_tilde
e^{-2ikd} with the transmissions unchanged, which is what composition of a
shifted copy requires (verified against direct propagation of shifted
potentials).  When every strength matrix in a cell commutes, a single
orthogonal change of basis decouples the channels and a periodic array can
be composed channel-by-channel as 2x2 products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .amplitudes import AmplitudeSet, amplitudes_at
from .errors import (
    MixedWavenumbers,
    OverlappingCells,
    SingularBlock,
    SingularTransmission,
    ValidationError,
)
from .potential import ValidatedPotential, orthogonal_diagonalize

TRANSMISSION_COND_LIMIT = 1e12
COMMUTATOR_TOL = 1e-10
WAVENUMBER_MATCH_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class TransferFactor:
    """One scatterer's 2N x 2N transfer matrix at wavenumber k."""

    k: float
    blocks: np.ndarray

    @property
    def channels(self) -> int:
        return self.blocks.shape[0] // 2


def _cond_or_raise(m, limit, exc, what, k):
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > limit:
        raise exc(f"{what} condition {cond:.2e} at k={k:.6g} exceeds {limit:.0e}")


def factor_from_amplitudes(a: AmplitudeSet) -> TransferFactor:
    """Transfer factor from the four amplitude matrices.

    Requires an invertible transmission; a scatterer that is opaque at this
    wavenumber has no transfer form and must be handled by composing its
    transparent constituents.
    """
    _cond_or_raise(a.tau, TRANSMISSION_COND_LIMIT, SingularTransmission, "transmission", a.k)
    tau_inv = np.linalg.inv(a.tau)
    tilde_inv_h = np.linalg.inv(a.tau_tilde).conj().T
    top = np.concatenate([tau_inv, -tau_inv @ a.rho_tilde], axis=1)
    bottom = np.concatenate([a.rho @ tau_inv, tilde_inv_h], axis=1)
    return TransferFactor(a.k, np.concatenate([top, bottom], axis=0))


def amplitudes_from_factor(f: TransferFactor) -> AmplitudeSet:
    """Invert the factor map; the top-left block must be invertible."""
    n = f.channels
    b11 = f.blocks[:n, :n]
    b12 = f.blocks[:n, n:]
    b21 = f.blocks[n:, :n]
    b22 = f.blocks[n:, n:]
    _cond_or_raise(b11, TRANSMISSION_COND_LIMIT, SingularBlock, "leading block", f.k)
    _cond_or_raise(b22, TRANSMISSION_COND_LIMIT, SingularBlock, "trailing block", f.k)
    tau = np.linalg.inv(b11)
    rho_tilde = -tau @ b12
    rho = b21 @ tau
    tau_tilde = np.linalg.inv(b22).conj().T
    return AmplitudeSet(f.k, rho, rho_tilde, tau, tau_tilde)


def compose_factors(factors) -> TransferFactor:
    """Product of factors listed left to right along the axis."""
    factors = list(factors)
    if not factors:
        raise ValidationError("need at least one factor to compose")
    k0 = factors[0].k
    n0 = factors[0].channels
    prod = np.eye(2 * n0, dtype=complex)
    for f in factors:
        if abs(f.k - k0) > WAVENUMBER_MATCH_RTOL * (1.0 + abs(k0)):
            raise MixedWavenumbers(
                f"cannot compose factors at k={k0:.6g} and k={f.k:.6g}"
            )
        if f.channels != n0:
            raise ValidationError("cannot compose factors with different channel counts")
        prod = prod @ f.blocks
    return TransferFactor(k0, prod)


def translate_amplitudes(a: AmplitudeSet, d: float) -> AmplitudeSet:
    """Amplitudes of the same scatterer shifted to be centered at x0 + d."""
    phase = np.exp(2j * a.k * d)
    return AmplitudeSet(
        a.k,
        a.rho * phase,
        a.rho_tilde / phase,
        a.tau.copy(),
        a.tau_tilde.copy(),
    )


def commuting_class_check(spec: ValidatedPotential, samples: int = 16) -> bool:
    """True when every strength matrix in the spec commutes pairwise.

    Segments and delta strengths enter directly; a sampled region
    contributes matrices probed on a uniform interior grid.  Commuting
    specs decouple into scalar channels in one orthogonal basis, enabling
    the fast periodic composition path.
    """
    mats = [seg.matrix for seg in spec.segments]
    mats += [term.strength for term in spec.deltas]
    if spec.sampled is not None:
        for x in np.linspace(-spec.range, spec.range, samples):
            mats.append(np.asarray(spec.sampled.evaluator(x), dtype=float))
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            if np.max(np.abs(comm)) >= COMMUTATOR_TOL:
                return False
    return True


def _common_basis(spec: ValidatedPotential) -> np.ndarray | None:
    """Orthogonal basis diagonalizing every strength matrix, if one exists."""
    mats = [seg.matrix for seg in spec.segments]
    mats += [term.strength for term in spec.deltas]
    if spec.sampled is not None:
        for x in np.linspace(-spec.range, spec.range, 16):
            mats.append(np.asarray(spec.sampled.evaluator(x), dtype=float))
    if not mats:
        return np.eye(spec.channels)
    # A random fixed-weight combination breaks accidental degeneracy, so its
    # eigenbasis diagonalizes the whole commuting family.
    rng = np.random.default_rng(20240117)
    weights = rng.standard_normal(len(mats))
    combo = sum(w * m for w, m in zip(weights, mats))
    u, _ = orthogonal_diagonalize(combo)
    for m in mats:
        d = u.T @ m @ u
        off = d - np.diag(np.diag(d))
        if np.max(np.abs(off)) > 1e-8 * (1.0 + np.max(np.abs(d))):
            return None
    return u


def periodic_compose(
    cell: ValidatedPotential,
    copies: int,
    spacing: float,
    k: float,
) -> AmplitudeSet:
    """Amplitudes of ``copies`` identical cells placed ``spacing`` apart.

    Copy j is centered at x = j * spacing, so supports stay disjoint only
    when spacing >= the cell's full width.  For commuting cells the product
    collapses to per-channel 2x2 factor chains in the common eigenbasis;
    otherwise the full-block factors are multiplied directly.
    """
    if copies < 1 or int(copies) != copies:
        raise ValidationError(f"copies must be a positive integer, got {copies}")
    if copies > 1 and not spacing > 0:
        raise ValidationError(f"spacing must be positive, got {spacing}")
    if copies > 1 and spacing < 2.0 * cell.range:
        raise OverlappingCells(
            f"spacing {spacing} is below the cell width {2.0 * cell.range}; "
            "neighboring copies overlap"
        )
    base = amplitudes_at(cell, k)
    if copies == 1:
        return base
    u = _common_basis(cell) if commuting_class_check(cell) else None
    offsets = [j * spacing for j in range(copies)]
    if u is None:
        factors = [
            factor_from_amplitudes(translate_amplitudes(base, d)) for d in offsets
        ]
        return amplitudes_from_factor(compose_factors(factors))
    # Decoupled path: rotate to the common eigenbasis, compose each scalar
    # channel independently, rotate back.
    n = cell.channels
    rot = {
        name: u.T @ getattr(base, name) @ u
        for name in ("rho", "rho_tilde", "tau", "tau_tilde")
    }
    out = {name: np.zeros((n, n), dtype=complex) for name in rot}
    for ch in range(n):
        chan = AmplitudeSet(
            base.k,
            rot["rho"][ch : ch + 1, ch : ch + 1],
            rot["rho_tilde"][ch : ch + 1, ch : ch + 1],
            rot["tau"][ch : ch + 1, ch : ch + 1],
            rot["tau_tilde"][ch : ch + 1, ch : ch + 1],
        )
        factors = [
            factor_from_amplitudes(translate_amplitudes(chan, d)) for d in offsets
        ]
        total = amplitudes_from_factor(compose_factors(factors))
        out["rho"][ch, ch] = total.rho[0, 0]
        out["rho_tilde"][ch, ch] = total.rho_tilde[0, 0]
        out["tau"][ch, ch] = total.tau[0, 0]
        out["tau_tilde"][ch, ch] = total.tau_tilde[0, 0]
    return AmplitudeSet(
        base.k,
        u @ out["rho"] @ u.T,
        u @ out["rho_tilde"] @ u.T,
        u @ out["tau"] @ u.T,
        u @ out["tau_tilde"] @ u.T,
    )
