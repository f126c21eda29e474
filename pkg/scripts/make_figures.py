#!/usr/bin/env python3
"""Emit the figure datasets (and optionally PNG renders) for the study models.

Produces, under --outdir:
  spiral_a{A}.csv       rho_11 trajectory in the complex plane, k in (0, 5]
  detfn_a{A}.csv        det M(alpha) and sigma_min(alpha) sweeps used to
                        locate bound states, for each delta-pair spacing
  phase_{NAME}.csv      unwrapped eta(k)/pi curves down to k = 1e-3
  transmission_barrier.csv   |tau|^2 eigen-channel probabilities vs k

With --plot, also renders one PNG per dataset (requires matplotlib).
"""

from __future__ import annotations

import argparse
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from scatter1d import (  # noqa: E402
    amplitude_scan,
    bundled_spec_path,
    default_alpha_max,
    load_spec,
    phase_curve,
    validate,
)
from scatter1d.cli import emit  # noqa: E402
from scatter1d.levinson import default_k_grid  # noqa: E402
from scatter1d.spectrum import ALPHA_MIN, _bound_matrices_batch  # noqa: E402

SPACINGS = ("0.95", "1.00", "1.05")
PHASE_SPECS = ("double_delta_a0.95", "double_delta_a1.00", "double_delta_a1.05",
               "square_well", "barrier")


def _bundled(name: str):
    return validate(load_spec(bundled_spec_path(name)))


def spiral_data(outdir: pathlib.Path) -> list[pathlib.Path]:
    paths = []
    for a in SPACINGS:
        spec = _bundled(f"double_delta_a{a}")
        ks = np.geomspace(1e-3, 5.0, 800)
        sets, _ = amplitude_scan(spec, ks)
        records = [
            {
                "k": float(k),
                "re_rho_11": float(s.rho[0, 0].real),
                "im_rho_11": float(s.rho[0, 0].imag),
            }
            for k, s in zip(ks, sets)
        ]
        path = outdir / f"spiral_a{a}.csv"
        emit(records, "csv", str(path))
        paths.append(path)
    return paths


def detfn_data(outdir: pathlib.Path) -> list[pathlib.Path]:
    paths = []
    for a in SPACINGS:
        spec = _bundled(f"double_delta_a{a}")
        alphas = np.linspace(ALPHA_MIN, default_alpha_max(spec), 1200)
        mats = _bound_matrices_batch(spec, alphas)
        dets = np.linalg.det(mats)
        sigma = np.linalg.svd(mats, compute_uv=False)[:, -1]
        records = [
            {"alpha": float(x), "det_m": float(d), "sigma_min": float(s)}
            for x, d, s in zip(alphas, dets, sigma)
        ]
        path = outdir / f"detfn_a{a}.csv"
        emit(records, "csv", str(path))
        paths.append(path)
    return paths


def phase_data(outdir: pathlib.Path) -> list[pathlib.Path]:
    paths = []
    for name in PHASE_SPECS:
        spec = _bundled(name)
        curve = phase_curve(spec, default_k_grid(spec, points=1500))
        records = [
            {"k": float(k), "eta_over_pi": float(e / np.pi)}
            for k, e in zip(curve.ks, curve.eta)
        ]
        path = outdir / f"phase_{name}.csv"
        emit(records, "csv", str(path))
        paths.append(path)
    return paths


def transmission_data(outdir: pathlib.Path) -> pathlib.Path:
    spec = _bundled("barrier")
    ks = np.geomspace(0.05, 12.0, 600)
    sets, _ = amplitude_scan(spec, ks)
    records = []
    for k, s in zip(ks, sets):
        probs = np.sort(np.linalg.svd(s.tau, compute_uv=False) ** 2)[::-1]
        record = {"k": float(k)}
        for i, p in enumerate(probs, start=1):
            record[f"t_{i}"] = float(p)
        records.append(record)
    path = outdir / "transmission_barrier.csv"
    emit(records, "csv", str(path))
    return path


def _render(csv_paths, outdir: pathlib.Path) -> None:
    import csv

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for path in csv_paths:
        with open(path, newline="") as handle:
            rows = list(csv.DictReader(handle))
        if not rows:
            continue
        cols = list(rows[0].keys())
        fig, ax = plt.subplots(figsize=(5, 4))
        if path.name.startswith("spiral"):
            ax.plot([float(r["re_rho_11"]) for r in rows],
                    [float(r["im_rho_11"]) for r in rows], lw=0.8)
            ax.set_xlabel("Re rho_11")
            ax.set_ylabel("Im rho_11")
            ax.set_aspect("equal")
        else:
            xs = [float(r[cols[0]]) for r in rows]
            for col in cols[1:]:
                ax.plot(xs, [float(r[col]) for r in rows], lw=0.8, label=col)
            ax.set_xlabel(cols[0])
            if path.name.startswith(("phase", "transmission")):
                ax.set_xscale("log")
            if path.name.startswith("detfn"):
                ax.set_yscale("symlog", linthresh=1e-6)
            ax.legend(fontsize=7)
        ax.set_title(path.stem)
        fig.tight_layout()
        fig.savefig(outdir / f"{path.stem}.png", dpi=150)
        plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--outdir", default="figures", help="output directory")
    parser.add_argument("--plot", action="store_true", help="also render PNGs")
    args = parser.parse_args(argv)
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    produced = []
    produced += spiral_data(outdir)
    produced += detfn_data(outdir)
    produced += phase_data(outdir)
    produced.append(transmission_data(outdir))
    for path in produced:
        print(path)
    if args.plot:
        _render(produced, outdir)
        print(f"{len(produced)} PNGs rendered in {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
