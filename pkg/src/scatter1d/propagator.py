"""Fundamental-solution propagation across the potential support.

Two solution matrices phi(k, x) and chi(k, x) are carried together with
their x-derivatives as the blocks of a 2N x 2N matrix W(x), with the
parameter-independent start data phi(-R) = chi'(-R) = I, phi'(-R) = chi(-R) = 0.
W obeys the first-order system W' = F(x) W with F = [[0, I], [V(x) - k2, 0]],
so det W = 1 at every x; that constant is tracked as a cheap integration audit.

Piecewise-constant segments and delta terms advance by closed-form blocks
(exact up to round-off); sampled regions advance by classical fixed-step RK4.
Real k2 (positive for scattering, negative for bound-state searches) keeps
every block real.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteState, ValidationError
from .potential import ValidatedPotential, _as_symmetric, evaluate, orthogonal_diagonalize

DEGENERATE_TOL = 1e-12
OVERFLOW_LIMIT = 1e150
AUDIT_EVERY = 128
DEFAULT_STEP_CAP = 1e-2


@dataclass(frozen=True, eq=False)
class FundamentalState:
    """The four N x N blocks of W(x) at one position and one energy k2."""

    k2: float
    phi: np.ndarray
    phi_prime: np.ndarray
    chi: np.ndarray
    chi_prime: np.ndarray
    x: float


@dataclass(frozen=True, eq=False)
class PropagationReport:
    """Final state at x = R plus the det-W audit of the sweep."""

    state: FundamentalState
    det_deviation: float
    steps: int


def _real_k2(k2: complex) -> float:
    k2 = complex(k2)
    if abs(k2.imag) > DEGENERATE_TOL * (1.0 + abs(k2)):
        raise ValidationError(
            f"k2 must lie on the real axis (scattering k2 > 0, bound k2 < 0); got {k2}"
        )
    return k2.real


def initial_state(n: int, k2: complex, r: float) -> FundamentalState:
    """State at x = -R: phi = chi' = I, phi' = chi = 0."""
    if n < 1:
        raise ValidationError(f"channels must be >= 1, got {n}")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return FundamentalState(_real_k2(k2), eye.copy(), zero.copy(), zero.copy(), eye.copy(), -float(r))


def _assemble(phi, phip, chi, chip):
    n = phi.shape[-1]
    w = np.empty(phi.shape[:-2] + (2 * n, 2 * n), dtype=phi.dtype)
    w[..., :n, :n] = phi
    w[..., :n, n:] = chi
    w[..., n:, :n] = phip
    w[..., n:, n:] = chip
    return w


def _split(w, n):
    return w[..., :n, :n], w[..., n:, :n], w[..., :n, n:], w[..., n:, n:]


def det_w(state: FundamentalState) -> float:
    """det of the assembled 2N x 2N solution matrix (should be 1)."""
    return float(
        np.linalg.det(_assemble(state.phi, state.phi_prime, state.chi, state.chi_prime))
    )


def wronskian_defect(state: FundamentalState) -> float:
    """Max-norm of phi'^T chi - phi^T chi' + I (zero for exact solutions)."""
    n = state.phi.shape[0]
    defect = state.phi_prime.T @ state.chi - state.phi.T @ state.chi_prime + np.eye(n)
    return float(np.max(np.abs(defect)))


def _segment_scalars(d: np.ndarray, k2, dx: float):
    """Per-eigenchannel propagation scalars (c, s, s') over a width-dx slab.

    For eigenvalue v of the constant potential and w2 = k2 - v the scalar
    solution pair is (cos, sin/w) when w2 > 0, (cosh, sinh/m) when w2 < 0,
    and the linear-in-dx limit when w2 ~ 0; s' = -w2 * s in all branches.
    """
    w2 = np.asarray(k2, dtype=float)[..., None] - d
    root = np.sqrt(np.clip(np.abs(w2), DEGENERATE_TOL, None))
    arg = np.minimum(root * dx, 709.0)
    osc = w2 > DEGENERATE_TOL
    hyp = w2 < -DEGENERATE_TOL
    c = np.where(osc, np.cos(arg), np.where(hyp, np.cosh(arg), 1.0 - 0.5 * w2 * dx * dx))
    s = np.where(
        osc,
        np.sin(arg) / root,
        np.where(hyp, np.sinh(arg) / root, dx * (1.0 - w2 * dx * dx / 6.0)),
    )
    return c, s, -w2 * s


def _apply_constant(blocks, u, d, k2, dx):
    """Advance all blocks across one constant slab in the eigenbasis of V0."""
    c, s, sp = _segment_scalars(d, k2, dx)
    c = c[..., :, None]
    s = s[..., :, None]
    sp = sp[..., :, None]
    out = []
    for pos, der in (blocks[0:2], blocks[2:4]):
        pos_e = np.matmul(u.T, pos)
        der_e = np.matmul(u.T, der)
        out.append(np.matmul(u, c * pos_e + s * der_e))
        out.append(np.matmul(u, sp * pos_e + c * der_e))
    return tuple(out)


def _apply_delta(blocks, strength):
    phi, phip, chi, chip = blocks
    return phi, phip + np.matmul(strength, phi), chi, chip + np.matmul(strength, chi)


def _check_finite(arrays) -> None:
    for a in arrays:
        m = np.max(np.abs(a))
        if not np.isfinite(m) or m > OVERFLOW_LIMIT:
            raise NonFiniteState(
                f"propagation overflow (max block magnitude {m:.3e}); "
                "reduce |k2| or the support width"
            )


def _det_deviation(blocks) -> float:
    _check_finite(blocks)
    w = _assemble(*blocks)
    return float(np.max(np.abs(np.linalg.det(w) - 1.0)))


def _rk4_sweep(blocks, evaluator, x0: float, x1: float, nsteps: int, k2, n: int):
    """Fixed-step classical RK4 on W' = F(x) W over [x0, x1].

    The potential is sampled once on the half-step stage grid; k2 may carry a
    leading batch axis, in which case all k-points advance in lock step.
    Returns the advanced blocks and the max det-W deviation seen at audit
    checkpoints.
    """
    h = (x1 - x0) / nsteps
    xs = x0 + 0.5 * h * np.arange(2 * nsteps + 1)
    vs = np.stack([np.asarray(evaluator(float(x)), dtype=float) for x in xs])
    eye = np.eye(n)
    k2i = np.asarray(k2, dtype=float)[..., None, None] * eye
    w = _assemble(*blocks)

    def fmul(a, wm):
        k = np.empty_like(wm)
        k[..., :n, :] = wm[..., n:, :]
        k[..., n:, :] = np.matmul(a, wm[..., :n, :])
        return k

    maxdev = 0.0
    for j in range(nsteps):
        a0 = vs[2 * j] - k2i
        am = vs[2 * j + 1] - k2i
        a1 = vs[2 * j + 2] - k2i
        k1 = fmul(a0, w)
        k2_ = fmul(am, w + (0.5 * h) * k1)
        k3 = fmul(am, w + (0.5 * h) * k2_)
        k4 = fmul(a1, w + h * k3)
        w = w + (h / 6.0) * (k1 + 2.0 * (k2_ + k3) + k4)
        if (j + 1) % AUDIT_EVERY == 0:
            m = np.max(np.abs(w))
            if not np.isfinite(m) or m > OVERFLOW_LIMIT:
                raise NonFiniteState(
                    f"integration overflow at x={x0 + (j + 1) * h:.4g}"
                )
            maxdev = max(maxdev, float(np.max(np.abs(np.linalg.det(w) - 1.0))))
    return _split(w, n), maxdev


def step_constant(state: FundamentalState, v0, x1: float) -> FundamentalState:
    """Advance across a constant-potential slab (state.x, x1) in closed form."""
    if not x1 > state.x:
        raise ValidationError(f"x1 must exceed state.x ({x1} <= {state.x})")
    n = state.phi.shape[0]
    v0 = _as_symmetric(v0, n, "constant slab matrix")
    u, d = orthogonal_diagonalize(v0)
    blocks = _apply_constant(
        (state.phi, state.phi_prime, state.chi, state.chi_prime), u, d, state.k2, x1 - state.x
    )
    _check_finite(blocks)
    return FundamentalState(state.k2, *blocks, x1)


def step_delta(state: FundamentalState, strength) -> FundamentalState:
    """Apply a delta term: derivative blocks jump by strength times position blocks."""
    n = state.phi.shape[0]
    strength = _as_symmetric(strength, n, "delta strength")
    blocks = _apply_delta((state.phi, state.phi_prime, state.chi, state.chi_prime), strength)
    return FundamentalState(state.k2, *blocks, state.x)


def step_ode(state: FundamentalState, evaluator, x1: float, h: float) -> FundamentalState:
    """Advance by fixed-step RK4 with step <= h (last step shortened to land on x1)."""
    if not x1 > state.x:
        raise ValidationError(f"x1 must exceed state.x ({x1} <= {state.x})")
    if not h > 0:
        raise ValidationError(f"step must be positive, got {h}")
    nsteps = max(1, math.ceil((x1 - state.x) / h))
    blocks, _ = _rk4_sweep(
        (state.phi, state.phi_prime, state.chi, state.chi_prime),
        evaluator,
        state.x,
        x1,
        nsteps,
        state.k2,
        state.phi.shape[0],
    )
    _check_finite(blocks)
    return FundamentalState(state.k2, *blocks, x1)


# ---------------------------------------------------------------------------
# Whole-support sweeps

_PLAN_CACHE: "weakref.WeakKeyDictionary[ValidatedPotential, list]" = weakref.WeakKeyDictionary()


def _plan(spec: ValidatedPotential) -> list:
    """Ordered actions covering [-R, R].

    ("const", x0, x1, U, d) closed slab; ("delta", strength) jump;
    ("ode", x0, x1, sampled) RK4 region.  Deltas sitting on a slab boundary
    are applied after the slab ending there and before the one starting there.
    """
    cached = _PLAN_CACHE.get(spec)
    if cached is not None:
        return cached
    r = spec.range
    actions: list = []
    if spec.sampled is not None:
        actions.append(("ode", -r, r, spec.sampled))
    else:
        cuts = {-r, r}
        for seg in spec.segments:
            cuts.add(max(-r, seg.lo))
            cuts.add(min(r, seg.hi))
        by_pos: dict[float, list] = {}
        for term in spec.deltas:
            cuts.add(term.position)
            by_pos.setdefault(term.position, []).append(term.strength)
        ordered = sorted(cuts)
        merged = [ordered[0]]
        for x in ordered[1:]:
            if x - merged[-1] > DEGENERATE_TOL:
                merged.append(x)
        for x0, x1 in zip(merged, merged[1:]):
            for pos, strengths in by_pos.items():
                if abs(pos - x0) <= DEGENERATE_TOL:
                    actions.extend(("delta", s) for s in strengths)
            u, d = orthogonal_diagonalize(evaluate(spec, 0.5 * (x0 + x1)))
            actions.append(("const", x0, x1, u, d))
        for pos, strengths in by_pos.items():
            if abs(pos - merged[-1]) <= DEGENERATE_TOL:
                actions.extend(("delta", s) for s in strengths)
    _PLAN_CACHE[spec] = actions
    return actions


def ode_step_count(span: float, base_step: float, k2, cap: float = DEFAULT_STEP_CAP) -> int:
    """Step count for an RK4 region: at least span/base_step, refined so that
    h * |k| <= cap, quantized to power-of-two multiples so nearby wavenumbers
    share a stage grid (and may be propagated as one batch)."""
    base = max(1, math.ceil(span / base_step))
    kmag = math.sqrt(float(np.max(np.abs(k2)))) if np.ndim(k2) else math.sqrt(abs(float(k2)))
    need = span * kmag / cap
    if need <= base:
        return base
    return base * 2 ** math.ceil(math.log2(need / base))


def _execute(spec: ValidatedPotential, k2, ode_nsteps: int | None, step_cap: float):
    n = spec.channels
    shape = np.shape(k2)
    eye = np.broadcast_to(np.eye(n), shape + (n, n)).copy()
    zero = np.zeros(shape + (n, n))
    blocks = (eye, zero.copy(), zero.copy(), eye.copy())
    maxdev = 0.0
    steps = 0
    for action in _plan(spec):
        if action[0] == "const":
            _, x0, x1, u, d = action
            blocks = _apply_constant(blocks, u, d, k2, x1 - x0)
            steps += 1
        elif action[0] == "delta":
            blocks = _apply_delta(blocks, action[1])
            steps += 1
        else:
            _, x0, x1, sampled = action
            nsteps = ode_nsteps
            if nsteps is None:
                nsteps = ode_step_count(x1 - x0, sampled.step, k2, step_cap)
            blocks, dev = _rk4_sweep(blocks, sampled.evaluator, x0, x1, nsteps, k2, n)
            maxdev = max(maxdev, dev)
            steps += nsteps
        maxdev = max(maxdev, _det_deviation(blocks))
    return blocks, maxdev, steps


def fundamental_at_R(
    spec: ValidatedPotential,
    k2: complex,
    *,
    ode_nsteps: int | None = None,
    step_cap: float = DEFAULT_STEP_CAP,
) -> PropagationReport:
    """Propagate the fundamental solutions from -R to R.

    Composes closed slab/delta steps (segment specs) or RK4 (sampled specs)
    left to right and audits det W = 1 after every action.

    Parameters
    ----------
    ode_nsteps : int, optional
        Explicit RK4 step count for sampled regions; by default the count
        comes from the region's base step refined by ``step_cap``.
    step_cap : float
        Accuracy cap h * |k| <= cap for sampled regions.
    """
    k2 = _real_k2(k2)
    blocks, maxdev, steps = _execute(spec, k2, ode_nsteps, step_cap)
    state = FundamentalState(k2, *blocks, spec.range)
    return PropagationReport(state, maxdev, steps)


def fundamental_batch(
    spec: ValidatedPotential,
    k2_values: np.ndarray,
    *,
    ode_nsteps: int | None = None,
    step_cap: float = DEFAULT_STEP_CAP,
):
    """Propagate a batch of energies in lock step.

    Returns (blocks, det_deviation, steps) where each block has shape
    (m, N, N).  Sampled regions use one shared stage grid for the whole
    batch, sized for the largest |k2| unless ``ode_nsteps`` is given.
    """
    k2_values = np.asarray(k2_values, dtype=float)
    return _execute(spec, k2_values, ode_nsteps, step_cap)
