"""Declarative finite-range matrix potentials.

A potential is specified on a support [-R, R] either as piecewise-constant
segments plus delta terms, or as a sampled (callable) region.  All strength
matrices are real symmetric N x N.  Validation normalizes the description
and enforces the standing assumptions once, so downstream modules never
re-check them.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    NonSymmetricMatrix,
    OverlappingSegments,
    SupportOutsideRange,
    ValidationError,
    ConvergenceFailure,
)

SYMMETRY_TOL = 1e-12
PARITY_TOL = 1e-10


class ParityClass(enum.Enum):
    EVEN = "even"
    NONE = "none"


@dataclass(frozen=True, eq=False)
class Segment:
    """Constant matrix V0 on the half-open interval [lo, hi)."""

    lo: float
    hi: float
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class DeltaTerm:
    """Delta term strength * delta(x - position)."""

    position: float
    strength: np.ndarray


@dataclass(frozen=True, eq=False)
class SampledRegion:
    """General region: evaluator(x) -> N x N symmetric matrix, stepped at h.

    The evaluator covers the whole support; sampled specs carry no segments
    or deltas.  The step is a base integration step — scan layers may refine
    it for accuracy at large wavenumber.
    """

    step: float
    evaluator: Callable[[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Unvalidated declarative potential description."""

    channels: int
    range: float
    segments: Sequence[Segment] = ()
    deltas: Sequence[DeltaTerm] = ()
    sampled: SampledRegion | None = None


@dataclass(frozen=True, eq=False)
class ValidatedPotential:
    """Normalized potential: sorted disjoint segments, sorted deltas.

    Produced only by :func:`validate`; all invariants (symmetry, support,
    non-overlap) are guaranteed to hold.
    """

    channels: int
    range: float
    segments: tuple[Segment, ...] = ()
    deltas: tuple[DeltaTerm, ...] = ()
    sampled: SampledRegion | None = None


def _as_symmetric(matrix: object, n: int, what: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.shape != (n, n):
        raise ValidationError(f"{what} has shape {m.shape}, expected ({n}, {n})")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{what} has non-finite entries")
    asym = np.max(np.abs(m - m.T)) if n > 1 else 0.0
    if asym > SYMMETRY_TOL:
        i, j = np.unravel_index(np.argmax(np.abs(m - m.T)), m.shape)
        raise NonSymmetricMatrix(
            f"{what} entry ({i},{j}) asymmetric by {asym:.3e} (tolerance {SYMMETRY_TOL:.0e})"
        )
    return m.copy()


def validate(spec: PotentialSpec) -> ValidatedPotential:
    """Check and normalize a potential description.

    Returns
    -------
    ValidatedPotential
        Segments sorted by left endpoint, deltas sorted by position, all
        matrices copied and verified symmetric.

    Raises
    ------
    NonSymmetricMatrix, SupportOutsideRange, OverlappingSegments,
    ValidationError
    """
    n = int(spec.channels)
    if n < 1:
        raise ValidationError(f"channels must be >= 1, got {spec.channels}")
    r = float(spec.range)
    if not (np.isfinite(r) and r > 0):
        raise ValidationError(f"range must be a positive real, got {spec.range}")

    if spec.sampled is not None and (spec.segments or spec.deltas):
        raise ValidationError("a sampled region excludes segments and deltas")

    edge = r + SYMMETRY_TOL

    segments = []
    for idx, seg in enumerate(spec.segments):
        lo, hi = float(seg.lo), float(seg.hi)
        if not (hi > lo):
            raise ValidationError(f"segment {idx} has hi <= lo ({lo}, {hi})")
        if lo < -edge or hi > edge:
            raise SupportOutsideRange(
                f"segment {idx} [{lo}, {hi}) outside [-{r}, {r}]"
            )
        segments.append(Segment(lo, hi, _as_symmetric(seg.matrix, n, f"segment {idx} matrix")))
    segments.sort(key=lambda s: s.lo)
    for a, b in zip(segments, segments[1:]):
        if b.lo < a.hi - SYMMETRY_TOL:
            raise OverlappingSegments(
                f"segments [{a.lo}, {a.hi}) and [{b.lo}, {b.hi}) overlap"
            )

    deltas = []
    for idx, term in enumerate(spec.deltas):
        pos = float(term.position)
        if pos < -edge or pos > edge:
            raise SupportOutsideRange(f"delta {idx} at x={pos} outside [-{r}, {r}]")
        deltas.append(DeltaTerm(pos, _as_symmetric(term.strength, n, f"delta {idx} strength")))
    deltas.sort(key=lambda d: d.position)

    sampled = spec.sampled
    if sampled is not None:
        step = float(sampled.step)
        if not (np.isfinite(step) and step > 0):
            raise ValidationError(f"sampled step must be positive, got {sampled.step}")
        for x in np.linspace(-r, r, 7):
            _as_symmetric(sampled.evaluator(x), n, f"sampled evaluator at x={x:.3g}")
        sampled = SampledRegion(step, sampled.evaluator)

    return ValidatedPotential(n, r, tuple(segments), tuple(deltas), sampled)


def evaluate(spec: ValidatedPotential, x: float) -> np.ndarray:
    """Pointwise V(x), excluding delta terms; zero outside [-R, R].

    Segments own their left endpoint only ([lo, hi)), so adjacent segments
    give a deterministic value at shared boundaries.
    """
    n = spec.channels
    if x < -spec.range or x > spec.range:
        return np.zeros((n, n))
    if spec.sampled is not None:
        return np.asarray(spec.sampled.evaluator(x), dtype=float)
    out = np.zeros((n, n))
    for seg in spec.segments:
        if seg.lo <= x < seg.hi:
            out += seg.matrix
    return out


def classify_parity(spec: ValidatedPotential, n_samples: int = 64) -> ParityClass:
    """Classify V as even (V(-x) = V(x) with a mirror-symmetric delta set) or none."""
    for x in np.linspace(0.0, spec.range, n_samples, endpoint=False) + spec.range / (
        2 * n_samples
    ):
        if np.max(np.abs(evaluate(spec, x) - evaluate(spec, -x))) > PARITY_TOL:
            return ParityClass.NONE
    unmatched = list(spec.deltas)
    while unmatched:
        term = unmatched.pop()
        if abs(term.position) <= PARITY_TOL:
            continue
        for other in unmatched:
            if (
                abs(other.position + term.position) <= PARITY_TOL
                and np.max(np.abs(other.strength - term.strength)) <= PARITY_TOL
            ):
                unmatched.remove(other)
                break
        else:
            return ParityClass.NONE
    return ParityClass.EVEN


def orthogonal_diagonalize(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a real symmetric matrix with an orthogonal U.

    Returns
    -------
    (U, d)
        U orthogonal, d eigenvalues ordered by descending magnitude with
        ties broken negative-first, such that U @ diag(d) @ U.T = matrix.
    """
    m = _as_symmetric(matrix, np.asarray(matrix).shape[0], "matrix")
    try:
        d, u = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigendecomposition failed: {exc}") from exc
    order = np.lexsort((d, -np.abs(d)))
    return u[:, order], d[order]


def spec_to_dict(spec: PotentialSpec | ValidatedPotential) -> dict:
    """Serialize to the interchange dict; sampled specs are not serializable."""
    if spec.sampled is not None:
        raise ValidationError("sampled potentials cannot be serialized to JSON")
    return {
        "channels": int(spec.channels),
        "range": float(spec.range),
        "segments": [
            {"lo": float(s.lo), "hi": float(s.hi), "matrix": np.asarray(s.matrix).tolist()}
            for s in spec.segments
        ],
        "deltas": [
            {"pos": float(d.position), "matrix": np.asarray(d.strength).tolist()}
            for d in spec.deltas
        ],
    }


def spec_from_dict(data: dict) -> PotentialSpec:
    """Build an (unvalidated) spec from the interchange dict."""
    try:
        channels = data["channels"]
        range_ = data["range"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"spec requires channels and range fields: {exc}") from exc
    segments = [
        Segment(entry["lo"], entry["hi"], np.asarray(entry["matrix"], dtype=float))
        for entry in data.get("segments", [])
    ]
    deltas = [
        DeltaTerm(entry["pos"], np.asarray(entry["matrix"], dtype=float))
        for entry in data.get("deltas", [])
    ]
    return PotentialSpec(channels, range_, segments, deltas)


def load_spec(path: str) -> PotentialSpec:
    """Read a JSON potential spec file."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON in {path}: {exc}") from exc
    return spec_from_dict(data)


def save_spec(spec: PotentialSpec | ValidatedPotential, path: str) -> None:
    """Write a spec as JSON."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(spec_to_dict(spec), handle, indent=2)
        handle.write("\n")


def bundled_spec_path(name: str) -> str:
    """Absolute path of a spec file shipped with the package."""
    from importlib.resources import files

    resource = files("scatter1d").joinpath("specs").joinpath(f"{name}.json")
    return str(resource)
