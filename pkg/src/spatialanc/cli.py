"""Command-line front end.

::

    spatialanc run --config paper_fig2 --out results/fig2
    spatialanc fieldmap --config paper_fig2 --frequency 400 --algorithm nlms --out results/map
    spatialanc validate --config paper_fig4

Exit codes: 0 success, 1 configuration problem, 2 runtime failure.
"""

import argparse
import datetime
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, config as cfgio
from .control import ALGORITHMS
from .errors import ConfigError, SceneError, SingularMatrixError
from .experiment import ExperimentConfig, RunResult, normalized_power_map, run
from .kernel import ReferenceInterpolator
from .quadrature import interpolation_matrices, make_grid

logger = logging.getLogger("spatialanc")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
FMT = "%.17g"


def _fname(freq: float) -> str:
    return f"{freq:g}Hz"


def _savetxt(path: Path, columns: dict):
    data = np.column_stack([np.asarray(v, dtype=float) for v in columns.values()])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(columns), comments="")


def _save_complex_matrix(path: Path, M: np.ndarray):
    rows, cols = np.indices(M.shape)
    _savetxt(path, {"row": rows.ravel(), "col": cols.ravel(), "re": M.real.ravel(), "im": M.imag.ravel()})


def write_archive(result: RunResult, out: Path) -> dict:
    """Write config snapshot, tables and manifest under ``out``; returns the manifest."""
    out.mkdir(parents=True, exist_ok=True)
    for sub in ("trajectories", "filters", "fieldmaps", "matrices"):
        (out / sub).mkdir(exist_ok=True)
    files = ["config.cfg", "summary.csv"]
    (out / "config.cfg").write_text(cfgio.dumps(result.config))

    algorithms = result.config.algorithms
    summary = {"frequency_hz": [r.frequency for r in result.frequencies]}
    for a in algorithms:
        summary[f"p_red_final_db_{a}"] = result.final_p_red(a)
    summary["cond_A_yy"] = [r.info.get("cond_A_yy", np.nan) for r in result.frequencies]
    summary["lambda"] = [r.info.get("lam", np.nan) for r in result.frequencies]
    summary["ok"] = [1.0 if r.ok else 0.0 for r in result.frequencies]
    _savetxt(out / "summary.csv", summary)

    grid_written = False
    for fr in result.frequencies:
        if not fr.ok:
            continue
        tag = _fname(fr.frequency)
        traj = {"iteration": np.arange(result.config.iterations)}
        for a in algorithms:
            traj[f"p_red_db_{a}"] = fr.algorithms[a].p_red
        name = f"trajectories/p_red_{tag}.csv"
        _savetxt(out / name, traj)
        files.append(name)
        for a, res in fr.algorithms.items():
            name = f"filters/W_{a}_{tag}.csv"
            _save_complex_matrix(out / name, res.W_final)
            files.append(name)
            for it, fmap in res.field_maps.items():
                name = f"fieldmaps/{a}_{tag}_iter{it}.csv"
                _savetxt(out / name, {"x_m": fmap.points[:, 0], "y_m": fmap.points[:, 1],
                                      "re_pa": fmap.values.real, "im_pa": fmap.values.imag})
                files.append(name)
        if fr.matrices is not None:
            for key in ("A_yy", "A_yx", "A_xx"):
                name = f"matrices/{key}_{tag}.csv"
                _save_complex_matrix(out / name, getattr(fr.matrices, key))
                files.append(name)
            if not grid_written:
                g = fr.matrices.grid
                _savetxt(out / "matrices/grid.csv", {"x_m": g.points[:, 0], "y_m": g.points[:, 1], "weight_m2": g.weights})
                files.append("matrices/grid.csv")
                grid_written = True

    manifest = {
        "package": "spatialanc",
        "version": __version__,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seed": result.config.rng_seed,
        "sound_speed": result.config.scene.sound_speed,
        "metadata": result.metadata,
        "frequency_info": [
            {"frequency_hz": r.frequency, "error": r.error,
             **{k: v for k, v in r.info.items() if k != "traceback"},
             "solvers": {a: res.solver for a, res in r.algorithms.items()}}
            for r in result.frequencies
        ],
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float))
    return manifest


def _load(args) -> ExperimentConfig:
    config = cfgio.load(args.config)
    return cfgio.with_overrides(
        config,
        seed=getattr(args, "seed", None),
        frequencies=getattr(args, "frequency", None),
        algorithms=getattr(args, "algorithm", None),
        iterations=getattr(args, "iterations", None),
        no_scatterer=getattr(args, "no_scatterer", False),
    )


def cmd_run(args) -> int:
    config = _load(args)
    config.scene.validate()
    result = run(config, jobs=args.jobs)
    write_archive(result, Path(args.out))
    for fr in result.frequencies:
        if fr.ok:
            finals = "  ".join(f"{a}={fr.algorithms[a].p_red[-1]:.2f} dB" for a in config.algorithms)
            print(f"{fr.frequency:8.1f} Hz  {finals}")
        else:
            print(f"{fr.frequency:8.1f} Hz  FAILED: {fr.error}")
    if result.failures:
        print(f"{len(result.failures)} of {len(result.frequencies)} frequencies failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_fieldmap(args) -> int:
    config = _load(args)
    config = replace(config, frequencies=(float(args.frequency[0]),), algorithms=(args.algorithm[0],))
    config.scene.validate()
    scene = config.scene
    if args.no_control:
        y = np.zeros(scene.num_secondary, dtype=complex)
    else:
        result = run(config)
        fr = result.frequencies[0]
        if not fr.ok:
            print(f"run failed: {fr.error}", file=sys.stderr)
            return EXIT_RUNTIME
        y = fr.algorithms[config.algorithms[0]].y_final
    grid = make_grid(scene.target_region, scene.scatterer, args.map_spacing)
    power_db = normalized_power_map(scene, scene.wavenumber(config.frequencies[0]), y, grid.points)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kinds = ["field"] * len(grid)
    xs, ys, vals = list(grid.points[:, 0]), list(grid.points[:, 1]), list(power_db)
    for x, yv in scene.error_mics:
        kinds.append("error_mic"); xs.append(x); ys.append(yv); vals.append(np.nan)
    theta = np.linspace(0.0, 2.0 * np.pi, 181)
    disks = [("region_boundary", scene.target_region)]
    if scene.scatterer is not None:
        disks.append(("scatterer_boundary", scene.scatterer))
    for kind, disk in disks:
        for t in theta:
            kinds.append(kind)
            xs.append(disk.center[0] + disk.radius * np.cos(t))
            ys.append(disk.center[1] + disk.radius * np.sin(t))
            vals.append(np.nan)
    name = f"fieldmap_{args.algorithm[0]}_{_fname(config.frequencies[0])}.csv"
    with open(out / name, "w") as fh:
        fh.write("kind,x_m,y_m,normalized_power_db\n")
        for kind, x, yv, v in zip(kinds, xs, ys, vals):
            fh.write(f"{kind},{FMT % x},{FMT % yv},{FMT % v}\n")
    (out / "config.cfg").write_text(cfgio.dumps(config))
    print(f"region median {np.median(power_db):.2f} dB, min {power_db.min():.2f} dB -> {out / name}")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _load(args)
    problems = [f"scene: {p}" for p in config.scene.violations()]
    scene = config.scene
    params = config.kernel_params()
    print(f"{'frequency_hz':>12} {'cond_K':>12} {'lambda':>12} {'cond_A_yy':>12}")
    try:
        grid = make_grid(scene.target_region, scene.scatterer, config.grid_spacing)
    except ValueError as exc:
        problems.append(f"grid: {exc}")
        grid = None
    for f in config.frequencies:
        k = scene.wavenumber(f)
        try:
            interp = ReferenceInterpolator(params, k, scene.reference_array)
        except SingularMatrixError as exc:
            problems.append(f"{f:g} Hz: singular reference Gram matrix: {exc}")
            print(f"{f:12.1f} {'singular':>12}")
            continue
        if grid is None:
            continue
        try:
            mats = interpolation_matrices(scene, k, params, grid, interpolator=interp)
        except Exception as exc:
            problems.append(f"{f:g} Hz: {exc}")
            continue
        print(f"{f:12.1f} {interp.condition:12.4g} {interp.lam:12.4g} {mats.cond_yy:12.4g}")
        if not np.isfinite(mats.cond_yy) or mats.cond_yy >= 1e12:
            problems.append(f"{f:g} Hz: A_yy not invertible (cond {mats.cond_yy:.3g}); pseudo-inverse would be used")
    if grid is not None:
        print(f"grid points: {len(grid)} (spacing {config.grid_spacing} m)")
    for p in problems:
        print(f"INVALID {p}", file=sys.stderr)
    return EXIT_CONFIG if problems else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spatialanc", description="Spatial ANC simulations with kernel-interpolated reference signals")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="config file or bundled preset name (paper_fig2, paper_fig4)")
        if out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--iterations", type=int)
        p.add_argument("--no-scatterer", action="store_true", help="remove the rigid scatterer from the scene")

    p = sub.add_parser("run", help="run an experiment and write a result archive")
    common(p)
    p.add_argument("--frequency", type=float, action="append", help="override frequencies (repeatable)")
    p.add_argument("--algorithm", choices=ALGORITHMS, action="append", help="override algorithms (repeatable)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes over frequencies")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fieldmap", help="normalized power map over the target region")
    common(p)
    p.add_argument("--frequency", type=float, action="append", required=True)
    p.add_argument("--algorithm", choices=ALGORITHMS, action="append", required=True)
    p.add_argument("--map-spacing", type=float, default=0.01, help="lattice spacing of the map in meters")
    p.add_argument("--no-control", action="store_true", help="force zero driving signals (primary field only)")
    p.set_defaults(func=cmd_fieldmap)

    p = sub.add_parser("validate", help="check scene invariants and conditioning without running")
    common(p, out=False)
    p.add_argument("--frequency", type=float, action="append")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SceneError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
