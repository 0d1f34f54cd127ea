"""Command-line entry point.

Subcommands tie the pipeline together: ``scan`` produces droplet files and an
expectation-record CSV, ``calibrate`` measures the control-qubit phase,
``reconstruct`` turns four droplet files into a process estimate, ``adaptive``
runs the single-rotation iterative variant, ``bench`` runs the Monte-Carlo
studies, and ``render`` draws droplet files.  Every command writes a manifest
with the digest of its effective configuration so runs can be reproduced.

Exit codes are stable API: 0 ok, 2 config error, 3 unsupported feature,
4 input mismatch, 5 degenerate input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, bench, reconstruct as rc, render, spin_ops, tomography as tg
from .droplet import lebedev_grid, load_droplet, save_droplet
from .errors import (
    ConfigError,
    DegenerateInputError,
    DomainError,
    GridMismatchError,
    UnsupportedError,
    WigtomoError,
)

_EXIT_CODES = (
    (ConfigError, 2),
    (UnsupportedError, 3),
    (GridMismatchError, 4),
    (DegenerateInputError, 5),
    (DomainError, 2),
    (WigtomoError, 2),
)


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------


def load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        if p.suffix.lower() == ".toml":
            try:
                import tomllib  # py >= 3.11
            except ModuleNotFoundError:
                import tomli as tomllib
            with open(p, "rb") as fh:
                return tomllib.load(fh)
        with open(p) as fh:
            return json.load(fh)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def _parse_complex(entry) -> complex:
    if isinstance(entry, (list, tuple)):
        if len(entry) != 2:
            raise ConfigError(f"complex entries are [re, im] pairs, got {entry}")
        return complex(float(entry[0]), float(entry[1]))
    return complex(entry)


def parse_gate(spec) -> np.ndarray:
    """A gate given as a name, a quaternion 4-vector, or a complex matrix."""
    try:
        if isinstance(spec, str):
            return spin_ops.named_gate(spec)
        arr = list(spec)
        if len(arr) == 4 and not isinstance(arr[0], (list, tuple)):
            q = spin_ops.Quaternion.from_array([float(v) for v in arr]).normalized()
            return spin_ops.quaternion_to_unitary(q)
        mat = np.array([[_parse_complex(v) for v in row] for row in arr])
        if not spin_ops.is_unitary(mat, tol=1e-8):
            raise ConfigError("gate matrix is not unitary")
        return mat
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid gate spec {spec!r}: {exc}") from exc


_NAMED_ROTATIONS = {"x": 1, "y": 2, "z": 3, "id": 4}


def parse_rotations(spec) -> tuple[tg.RotationSpec, ...]:
    if spec is None:
        return tg.standard_rotations()
    if isinstance(spec, dict):
        mat = np.array([[_parse_complex(v) for v in row] for row in spec["matrix"]])
        return (tg.custom_rotation(mat, name=spec.get("name", "custom")),)
    by_k = {r.k: r for r in tg.standard_rotations()}
    out = []
    for name in spec:
        if name not in _NAMED_ROTATIONS:
            raise ConfigError(
                f"unknown rotation {name!r}; use a subset of {sorted(_NAMED_ROTATIONS)}"
            )
        out.append(by_k[_NAMED_ROTATIONS[name]])
    if not out:
        raise ConfigError("rotation list must not be empty")
    return tuple(out)


def build_scan_config(cfg: dict, args) -> tuple[np.ndarray, tg.ScanConfig]:
    if "gate" not in cfg:
        raise ConfigError("config needs a 'gate' entry")
    unitary = parse_gate(cfg["gate"])
    order = args.grid or int(cfg.get("grid_order", 50))
    try:
        grid = lebedev_grid(order)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    if args.exact:
        shots = None
    elif args.shots is not None:
        shots = args.shots
    elif cfg.get("exact", False):
        shots = None
    else:
        shots = cfg.get("shots")
    noise_cfg = cfg.get("noise", {})
    try:
        noise = tg.NoiseModel(
            amplitude_scale=float(noise_cfg.get("s", 1.0)),
            ancilla_phase=float(noise_cfg.get("lambda", 0.0)),
        )
        scan_cfg = tg.ScanConfig(
            grid=grid,
            shots=shots,
            rotations=parse_rotations(cfg.get("rotations")),
            seed=args.seed if args.seed is not None else int(cfg.get("seed", tg.DEFAULT_SEED)),
            noise=noise,
            correction=float(cfg.get("correction", 0.0)),
            gate_name=cfg["gate"] if isinstance(cfg["gate"], str) else "",
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    return unitary, scan_cfg


def _out_dir(cfg: dict, args) -> Path:
    out = Path(args.out or cfg.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------


def config_digest(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, command: str, cfg: dict, seed: int, outputs):
    manifest = {
        "command": command,
        "tool_version": __version__,
        "seed": seed,
        "config_digest": config_digest(cfg),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_scan(args) -> int:
    cfg = load_config(args.config)
    unitary, scan_cfg = build_scan_config(cfg, args)
    out = _out_dir(cfg, args)
    result = tg.scan(unitary, scan_cfg)
    outputs = []
    for k, f in sorted(result.droplets.items()):
        path = out / f"droplet_k{k}.json"
        save_droplet(f, path)
        outputs.append(path)
    records_path = out / "records.csv"
    tg.write_records_csv(result.records, records_path)
    outputs.append(records_path)
    write_manifest(out, "scan", cfg, scan_cfg.seed, outputs)
    print(f"scan: wrote {len(outputs)} files to {out}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    cfg.setdefault("gate", "X")
    unitary, scan_cfg = build_scan_config(cfg, args)
    del unitary  # calibration always scans the X gate
    points = int(cfg.get("sweep_points", 16))
    sweep = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
    result = tg.calibrate(scan_cfg, sweep)
    out = _out_dir(cfg, args)
    path = out / "calibration.json"
    payload = {
        "lambda_corr": result.lambda_corr,
        "fit_residual": result.fit_residual,
        "amplitude": result.amplitude,
        "sweep_points": points,
        "shots": scan_cfg.shots or 0,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    write_manifest(out, "calibrate", cfg, scan_cfg.seed, [path])
    print(f"calibrate: lambda_corr = {result.lambda_corr:.6f} rad "
          f"(residual {result.fit_residual:.3g})")
    return 0


def cmd_reconstruct(args) -> int:
    if len(args.droplets) != 4:
        raise ConfigError(f"reconstruction needs 4 droplet files, got {len(args.droplets)}")
    droplets, digests = [], []
    for path in args.droplets:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"droplet file not found: {path}")
        droplets.append(load_droplet(p))
        digests.append(file_digest(p))
    order = sorted(
        range(4), key=lambda i: droplets[i].meta.get("k", i + 1)
    )
    droplets = [droplets[i] for i in order]
    digests = [digests[i] for i in order]

    reference = spin_ops.named_gate(args.reference) if args.reference else None
    params = rc.CostParams(tolerance=args.tolerance)
    report = rc.iterate_reconstruction(droplets, params, reference=reference)
    payload = report.to_dict()
    if args.optimize:
        from .droplet import correlation_matrix, droplet_to_operator

        q0 = rc.zero_order_estimate(correlation_matrix(droplets))
        mats = [droplet_to_operator(f) for f in droplets]
        opt = rc.optimize_cost(mats, q0, params, reference=reference)
        payload = opt.to_dict()
        payload["iterate"] = report.to_dict()
        report = opt
    payload["input_digests"] = digests

    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    write_manifest(out, "reconstruct", {"droplets": list(args.droplets)}, 0, [path])
    fid = f", fidelity {report.fidelity:.6f}" if report.fidelity is not None else ""
    print(f"reconstruct: quaternion {np.round(report.quaternion.as_array(), 6)}{fid}")
    return 0


def cmd_adaptive(args) -> int:
    cfg = load_config(args.config)
    if "guess" not in cfg:
        raise ConfigError("adaptive config needs a 'guess' entry")
    unitary, scan_cfg = build_scan_config(cfg, args)
    guess = parse_gate(cfg["guess"])
    iterations = int(cfg.get("iterations", 2))
    report = rc.adaptive_reconstruct(
        unitary,
        guess,
        scan_cfg,
        iterations=iterations,
        epsilon_floor=float(cfg.get("epsilon_floor", 0.05)),
    )
    out = _out_dir(cfg, args)
    path = out / "adaptive_report.json"
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=1)
        fh.write("\n")
    write_manifest(out, "adaptive", cfg, scan_cfg.seed, [path])
    eps = ", ".join(f"{e:.4f}" for e in report.epsilon_trace)
    print(f"adaptive: epsilon trace [{eps}], fidelity {report.fidelity:.6f}")
    return 0


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    try:
        study = bench.StudyConfig(
            scenario=cfg.get("scenario", "full_wigner"),
            shots_grid=tuple(int(v) for v in cfg["shots_grid"]),
            gates=int(cfg.get("gates", 100)),
            noise_instances=int(cfg.get("noise_instances", 50)),
            seed=args.seed if args.seed is not None else int(cfg.get("seed", tg.DEFAULT_SEED)),
            grid_order=args.grid or int(cfg.get("grid_order", 26)),
            budget=cfg.get("budget", "total"),
        )
    except (KeyError, DomainError, ValueError) as exc:
        raise ConfigError(f"invalid bench config: {exc}") from exc
    result = bench.run_study(study)
    out = _out_dir(cfg, args)

    csv_path = out / "study.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=[
                "scenario",
                "shots_value",
                "gate",
                "noise",
                "fidelity_plain",
                "fidelity_optimized",
                "shots_spent",
            ],
        )
        writer.writeheader()
        writer.writerows(result.records)

    summary_path = out / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(
            {
                "scenario": study.scenario,
                "budget": study.budget,
                "error_metric": result.error_metric,
                "summary": result.summary,
            },
            fh,
            indent=1,
        )
        fh.write("\n")

    fig_path = out / "study.svg"
    render.plot_study_summary(
        result.summary, fig_path, title=f"{study.scenario} ({study.budget} budget)"
    )
    write_manifest(out, "bench", cfg, study.seed, [csv_path, summary_path, fig_path])
    print(f"bench: {len(result.records)} trials; summary in {summary_path}")
    return 0


def cmd_render(args) -> int:
    p = Path(args.droplet)
    if not p.exists():
        raise ConfigError(f"droplet file not found: {args.droplet}")
    f = load_droplet(p)
    if all(np.max(np.abs(arr)) < 1e-15 for arr in f.samples.values()):
        print("warning: droplet carries no signal, rendering legend only", file=sys.stderr)
    out_path = Path(args.out) if args.out else p.with_suffix(".svg")
    render.render_droplet(f, out_path, projection=args.projection)
    print(f"render: wrote {out_path}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wigtomo",
        description="Scanning tomography simulator and reconstruction toolkit "
        "for unknown single-qubit gates",
    )
    parser.add_argument("--version", action="version", version=f"wigtomo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON or TOML config file")
        p.add_argument("--seed", type=int, default=None, help="64-bit master seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--exact", action="store_true", help="exact expectation values")
        p.add_argument("--shots", type=int, default=None, help="shots per circuit")
        p.add_argument("--grid", type=int, default=None, choices=(6, 26, 50))

    p_scan = sub.add_parser("scan", help="tomograph the scaled droplets of a gate")
    common(p_scan)
    p_scan.set_defaults(fn=cmd_scan)

    p_cal = sub.add_parser("calibrate", help="measure the control-qubit phase shift")
    common(p_cal)
    p_cal.set_defaults(fn=cmd_calibrate)

    p_rec = sub.add_parser("reconstruct", help="estimate the gate from droplet files")
    p_rec.add_argument("droplets", nargs="+", help="four droplet JSON files")
    p_rec.add_argument("--optimize", action="store_true", help="refine by cost minimization")
    p_rec.add_argument("--tolerance", type=float, default=1e-4)
    p_rec.add_argument("--reference", default=None, help="named gate for fidelity reporting")
    p_rec.add_argument("--out", default=None)
    p_rec.set_defaults(fn=cmd_reconstruct)

    p_ad = sub.add_parser("adaptive", help="single-rotation iterative tomography")
    common(p_ad)
    p_ad.set_defaults(fn=cmd_adaptive)

    p_bench = sub.add_parser("bench", help="Monte-Carlo comparison studies")
    common(p_bench)
    p_bench.set_defaults(fn=cmd_bench)

    p_ren = sub.add_parser("render", help="draw a droplet file")
    p_ren.add_argument("droplet", help="droplet JSON file")
    p_ren.add_argument("--projection", choices=render.PROJECTIONS, default="mollweide")
    p_ren.add_argument("--out", default=None, help="output image path (.svg or .png)")
    p_ren.set_defaults(fn=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except tuple(exc for exc, _ in _EXIT_CODES) as err:
        for exc_type, code in _EXIT_CODES:
            if isinstance(err, exc_type):
                print(f"error: {err}", file=sys.stderr)
                return code
        raise  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
