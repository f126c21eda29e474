"""Command-line front end: scans, reports, and CSV/JSON emitters.

Every scan command loads a JSON potential spec, computes over a log-spaced
wavenumber grid (default 2000 points from 100/(2R) down to 1e-3), sorts
records by k, and emits either CSV (header row, full-precision floats) or a
JSON array.  Output is byte-identical across reruns of the same config:
worker threads only ever fill a preallocated slot per grid point.

Exit codes: 0 success, 1 validation error (bad flags, malformed spec,
geometry conflicts), 2 numerical failure (lost unitarity, unconverged
anchor, unstable extrapolation, non-finite output).  Errors print exactly
one machine-parsable line on stderr:  ``scatter1d: error: <class>: <detail>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .amplitudes import amplitude_scan, amplitudes_at, s_matrix
from .errors import NumericalError, ScatterError, ValidationError
from .factorization import (
    amplitudes_from_factor,
    compose_factors,
    factor_from_amplitudes,
    translate_amplitudes,
)
from .levinson import (
    ANCHOR_TOL,
    UNITARITY_TOL,
    levinson_check,
    phase_curve,
)
from .potential import ValidatedPotential, load_spec, validate
from .spectrum import (
    DEFAULT_GRID_POINTS,
    _bound_matrices_batch,
    default_alpha_max,
    find_bound_states,
    half_bound_count,
    ALPHA_MIN,
)
from . import selftest as selftest_mod

KNOWN_TOLERANCES = ("unitarity", "anchor")


@dataclass(frozen=True)
class RunConfig:
    """Parsed invocation: one subcommand plus its numeric and IO settings."""

    subcommand: str
    specs: tuple[str, ...] = ()
    k_min: float | None = None
    k_max: float | None = None
    points: int | None = None
    alpha_max: float | None = None
    out: str | None = None
    format: str = "csv"
    tolerances: dict = field(default_factory=dict)
    offsets: tuple[float, ...] = ()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatter1d",
        description="Coupled-channel one-dimensional scattering: amplitudes, "
        "spectra, phase curves, and factor composition.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, *, multi_spec=False, spec_required=True):
        p.add_argument(
            "--spec",
            action="append",
            default=[],
            metavar="PATH",
            help="potential spec JSON file" + (" (repeatable)" if multi_spec else ""),
        )
        p.add_argument("--kmin", type=float, default=None, help="smallest wavenumber")
        p.add_argument("--kmax", type=float, default=None, help="largest wavenumber")
        p.add_argument("--points", type=int, default=None, help="grid size")
        p.add_argument("--alpha-max", type=float, default=None, help="bound-state search ceiling")
        p.add_argument("--out", default=None, metavar="PATH", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument(
            "--tol",
            action="append",
            default=[],
            metavar="NAME=VALUE",
            help=f"tolerance override, names: {', '.join(KNOWN_TOLERANCES)}",
        )
        p.set_defaults(multi_spec=multi_spec, spec_required=spec_required)

    add_common(sub.add_parser("amplitudes", help="amplitude matrices over a k grid"))
    add_common(sub.add_parser("spectrum", help="bound/half-bound state report"))
    add_common(sub.add_parser("levinson", help="phase-at-threshold counting check"))
    add_common(sub.add_parser("phase", help="unwrapped global phase curve"))
    add_common(sub.add_parser("spiral", help="reflection-entry trajectory (Re, Im)"))
    compose = sub.add_parser("compose", help="compose translated scatterers")
    add_common(compose, multi_spec=True)
    compose.add_argument(
        "--offset",
        action="append",
        type=float,
        default=[],
        metavar="X",
        help="center position of the matching --spec (repeatable, default all 0)",
    )
    add_common(sub.add_parser("selftest", help="run the acceptance suite"), spec_required=False)
    return parser


def _parse_tolerances(pairs) -> dict:
    out = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep:
            raise ValidationError(f"--tol expects NAME=VALUE, got {pair!r}")
        if name not in KNOWN_TOLERANCES:
            raise ValidationError(
                f"unknown tolerance {name!r}; known names: {', '.join(KNOWN_TOLERANCES)}"
            )
        try:
            out[name] = float(value)
        except ValueError as exc:
            raise ValidationError(f"--tol {name} needs a numeric value: {exc}") from exc
        if not out[name] > 0:
            raise ValidationError(f"--tol {name} must be positive")
    return out


def parse_config(argv) -> RunConfig:
    ns = _build_parser().parse_args(argv)
    specs = tuple(ns.spec) if hasattr(ns, "spec") else ()
    if getattr(ns, "spec_required", False):
        if not specs:
            raise ValidationError(f"{ns.subcommand} requires --spec")
        if len(specs) > 1 and not getattr(ns, "multi_spec", False):
            raise ValidationError(f"{ns.subcommand} accepts exactly one --spec")
    if ns.subcommand == "selftest" and specs:
        raise ValidationError("selftest takes no --spec")
    k_min = getattr(ns, "kmin", None)
    k_max = getattr(ns, "kmax", None)
    points = getattr(ns, "points", None)
    if k_min is not None and not k_min > 0:
        raise ValidationError("--kmin must be positive")
    if k_max is not None and not k_max > 0:
        raise ValidationError("--kmax must be positive")
    if k_min is not None and k_max is not None and not k_min < k_max:
        raise ValidationError("--kmin must be below --kmax")
    if points is not None and points < 2:
        raise ValidationError("--points must be at least 2")
    return RunConfig(
        subcommand=ns.subcommand,
        specs=specs,
        k_min=k_min,
        k_max=k_max,
        points=points,
        alpha_max=getattr(ns, "alpha_max", None),
        out=getattr(ns, "out", None),
        format=getattr(ns, "format", "csv"),
        tolerances=_parse_tolerances(getattr(ns, "tol", [])),
        offsets=tuple(getattr(ns, "offset", []) or ()),
    )


def _format_value(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _check_finite(records) -> None:
    for idx, record in enumerate(records):
        for key, value in record.items():
            if isinstance(value, (float, np.floating)) and not np.isfinite(value):
                raise NumericalError(f"non-finite value in record {idx}, field {key}")


def emit(records, format: str = "csv", path: str | None = None) -> None:
    """Write records as CSV (header + full-precision floats) or a JSON array."""
    records = list(records)
    _check_finite(records)
    if records:
        columns = list(records[0].keys())
        for record in records[1:]:
            if list(record.keys()) != columns:
                raise ValidationError("all records must share one column set")
    else:
        columns = []
    if format == "csv":
        lines = [",".join(columns)]
        for record in records:
            lines.append(",".join(_format_value(record[c]) for c in columns))
        text = "\n".join(lines) + "\n"
    elif format == "json":
        plain = [
            {k: (float(v) if isinstance(v, np.floating) else v) for k, v in r.items()}
            for r in records
        ]
        text = json.dumps(plain, indent=2, allow_nan=False) + "\n"
    else:
        raise ValidationError(f"unknown output format {format!r}")
    if path is None:
        sys.stdout.write(text)
    else:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
        except OSError as exc:
            raise ValidationError(f"cannot write {path}: {exc}") from exc


def _load_one(config: RunConfig) -> ValidatedPotential:
    try:
        return validate(load_spec(config.specs[0]))
    except OSError as exc:
        raise ValidationError(f"cannot read spec {config.specs[0]}: {exc}") from exc


def _scan_grid(config: RunConfig, spec: ValidatedPotential, *, ascending=True) -> np.ndarray:
    k_max = config.k_max if config.k_max is not None else 100.0 / (2.0 * spec.range)
    k_min = config.k_min if config.k_min is not None else 1e-3
    points = config.points if config.points is not None else 2000
    if not k_min < k_max:
        raise ValidationError(f"need k_min < k_max, got [{k_min}, {k_max}]")
    grid = np.geomspace(k_min, k_max, points)
    return grid if ascending else grid[::-1]


def _worker_count() -> int:
    raw = os.environ.get("SCATTER_THREADS", "1")
    try:
        count = int(raw)
    except ValueError as exc:
        raise ValidationError(f"SCATTER_THREADS must be an integer, got {raw!r}") from exc
    return max(1, count)


def _amplitude_records(ks, sets) -> list[dict]:
    records = []
    for k, amp in zip(ks, sets):
        record = {"k": float(k)}
        for name, label in (
            ("rho", "rho"),
            ("rho_tilde", "rho_tilde"),
            ("tau", "tau"),
            ("tau_tilde", "tau_tilde"),
        ):
            matrix = getattr(amp, name)
            n = matrix.shape[0]
            for i in range(n):
                for j in range(n):
                    record[f"re_{label}_{i+1}{j+1}"] = float(matrix[i, j].real)
                    record[f"im_{label}_{i+1}{j+1}"] = float(matrix[i, j].imag)
        s = s_matrix(amp).s
        record["unitarity"] = float(np.max(np.abs(s.conj().T @ s - np.eye(s.shape[0]))))
        records.append(record)
    return records


def _cmd_amplitudes(config: RunConfig) -> int:
    spec = _load_one(config)
    ks = _scan_grid(config, spec)
    sets, det_dev = amplitude_scan(spec, ks)
    emit(_amplitude_records(ks, sets), config.format, config.out)
    sys.stderr.write(f"scatter1d: audit: max |det W - 1| = {det_dev!r}\n")
    return 0


def _cmd_spiral(config: RunConfig) -> int:
    spec = _load_one(config)
    ks = _scan_grid(config, spec)
    sets, _ = amplitude_scan(spec, ks)
    records = [
        {
            "k": float(k),
            "re_rho_11": float(amp.rho[0, 0].real),
            "im_rho_11": float(amp.rho[0, 0].imag),
        }
        for k, amp in zip(ks, sets)
    ]
    emit(records, config.format, config.out)
    return 0


def _cmd_phase(config: RunConfig) -> int:
    spec = _load_one(config)
    ks = _scan_grid(config, spec, ascending=False)
    curve = phase_curve(
        spec,
        ks,
        unitarity_tol=config.tolerances.get("unitarity", UNITARITY_TOL),
        anchor_tol=config.tolerances.get("anchor", ANCHOR_TOL),
    )
    records = [
        {"k": float(k), "eta_over_pi": float(e / np.pi)}
        for k, e in zip(curve.ks, curve.eta)
    ]
    emit(records, config.format, config.out)
    return 0


def _cmd_spectrum(config: RunConfig) -> int:
    spec = _load_one(config)
    grid_points = config.points if config.points is not None else DEFAULT_GRID_POINTS
    states = find_bound_states(spec, alpha_max=config.alpha_max, grid_points=grid_points)
    n_half, eigenvalues = half_bound_count(spec)
    lines = ["alpha,energy,multiplicity"]
    for state in states:
        lines.append(f"{state.alpha!r},{state.energy!r},{state.multiplicity}")
    lines.append(f"n_bound = {sum(s.multiplicity for s in states)}")
    lines.append(f"n_half_bound = {n_half}")
    lines.append(
        "threshold_eigenvalues = "
        + ";".join(repr(complex(v)) for v in eigenvalues)
    )
    sys.stdout.write("\n".join(lines) + "\n")
    if config.out is not None:
        alpha_max = config.alpha_max if config.alpha_max is not None else default_alpha_max(spec)
        alphas = np.linspace(ALPHA_MIN, alpha_max, grid_points)
        mats = _bound_matrices_batch(spec, alphas)
        dets = np.linalg.det(mats)
        sigma = np.linalg.svd(mats, compute_uv=False)[:, -1]
        records = [
            {"alpha": float(a), "det_m": float(d), "sigma_min": float(s)}
            for a, d, s in zip(alphas, dets, sigma)
        ]
        emit(records, config.format, config.out)
    return 0


def _cmd_levinson(config: RunConfig) -> int:
    spec = _load_one(config)
    ks = _scan_grid(config, spec, ascending=False)
    result = levinson_check(
        spec,
        ks,
        alpha_max=config.alpha_max,
        unitarity_tol=config.tolerances.get("unitarity", UNITARITY_TOL),
        anchor_tol=config.tolerances.get("anchor", ANCHOR_TOL),
    )
    lines = [
        f"eta0 = {result.eta0!r}",
        f"eta0_over_pi = {result.eta0 / np.pi!r}",
        f"predicted = {result.predicted!r}",
        f"residual = {result.residual!r}",
        f"n_bound = {result.n_bound}",
        f"n_half_bound = {result.n_half_bound}",
        f"channels = {result.channels}",
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    if config.out is not None:
        emit(
            [
                {
                    "eta0": result.eta0,
                    "predicted": result.predicted,
                    "residual": result.residual,
                    "n_bound": result.n_bound,
                    "n_half_bound": result.n_half_bound,
                    "channels": result.channels,
                }
            ],
            config.format,
            config.out,
        )
    return 0


def _cmd_compose(config: RunConfig) -> int:
    specs = []
    for path in config.specs:
        try:
            specs.append(validate(load_spec(path)))
        except OSError as exc:
            raise ValidationError(f"cannot read spec {path}: {exc}") from exc
    offsets = config.offsets or tuple(0.0 for _ in specs)
    if len(offsets) != len(specs):
        raise ValidationError(
            f"got {len(specs)} --spec but {len(offsets)} --offset; counts must match"
        )
    channels = {s.channels for s in specs}
    if len(channels) != 1:
        raise ValidationError("all composed specs must share one channel count")
    placed = sorted(zip(offsets, specs), key=lambda t: t[0])
    for (o1, s1), (o2, s2) in zip(placed, placed[1:]):
        if o1 + s1.range > o2 - s2.range + 1e-15:
            raise ValidationError(
                f"supports overlap: piece at {o1:g} spans past piece at {o2:g}"
            )
    widest = max(o + s.range for o, s in placed) - min(o - s.range for o, s in placed)
    k_max = config.k_max if config.k_max is not None else 100.0 / widest
    k_min = config.k_min if config.k_min is not None else 1e-3
    points = config.points if config.points is not None else 2000
    if not k_min < k_max:
        raise ValidationError(f"need k_min < k_max, got [{k_min}, {k_max}]")
    ks = np.geomspace(k_min, k_max, points)

    def one(k: float):
        factors = []
        for offset, spec in placed:
            amp = translate_amplitudes(amplitudes_at(spec, float(k)), offset)
            factors.append(factor_from_amplitudes(amp))
        return amplitudes_from_factor(compose_factors(factors))

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sets = list(pool.map(one, ks))
    else:
        sets = [one(k) for k in ks]
    emit(_amplitude_records(ks, sets), config.format, config.out)
    return 0


def _cmd_selftest(config: RunConfig) -> int:
    results = selftest_mod.run_all()
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        sys.stdout.write(f"{status} {result.name} - {result.detail}\n")
    failed = [r for r in results if not r.passed]
    sys.stdout.write(f"{len(results) - len(failed)}/{len(results)} criteria passed\n")
    return 0 if not failed else 2


_COMMANDS = {
    "amplitudes": _cmd_amplitudes,
    "spectrum": _cmd_spectrum,
    "levinson": _cmd_levinson,
    "phase": _cmd_phase,
    "spiral": _cmd_spiral,
    "compose": _cmd_compose,
    "selftest": _cmd_selftest,
}


def run(argv) -> int:
    """Execute one CLI invocation; returns the process exit code."""
    config = parse_config(argv)
    return _COMMANDS[config.subcommand](config)


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        return run(argv)
    except SystemExit as exc:
        # argparse exits on usage errors (code 2) and --help (code 0);
        # fold the former into the invalid-input exit code.
        return 0 if exc.code in (None, 0) else 1
    except ValidationError as exc:
        sys.stderr.write(f"scatter1d: error: {type(exc).__name__}: {_one_line(exc)}\n")
        return 1
    except NumericalError as exc:
        sys.stderr.write(f"scatter1d: error: {type(exc).__name__}: {_one_line(exc)}\n")
        return 2
    except ScatterError as exc:
        sys.stderr.write(f"scatter1d: error: {type(exc).__name__}: {_one_line(exc)}\n")
        return 2


def _one_line(exc: Exception) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
