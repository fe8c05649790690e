"""Command-line front-end: ``qfl <roots|diagram|spectrum|force|critical|verify>``."""

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pandas as pd

from . import __version__
from .artifacts import (
    GridArtifact,
    SweepJournal,
    fingerprint,
    render_heatmap_svg,
    render_lines_svg,
    write_grid_artifact,
    write_sidecar,
)
from .config import RunConfig, RuntimeSettings, get_runtime_settings
from .errors import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, exit_code_for
from .force import IntegrandForm, force_sweep, overlay_lines, spectral_density_grid, window_edge
from .logging_utils import setup_logging
from .material import ParameterKind
from .stability import (
    ScanSettings,
    critical_gamma,
    critical_gap,
    critical_velocity,
    root_locus,
    stability_diagram,
)
from .verification import run_verification

logger = logging.getLogger(__name__)


def _grid(lo: float, hi: float, n: int) -> list[float]:
    return [round(float(x), 6) for x in np.linspace(lo, hi, n)]


PRESETS: dict[str, dict] = {
    "roots": {
        "v": 0.1,
        "L": 0.1,
        "gamma_presets": [0.30, 0.18, 0.10],
        "kx_min": 0.1,
        "kx_max": 30.0,
        "n_kx": 300,
    },
    "diagram": {
        "velocities": _grid(0.02, 0.3, 12),
        "gaps": _grid(0.02, 0.5, 12),
        "cut_velocity": 0.1,
        "cut_gap": 0.1,
    },
    "spectrum": {
        "gamma": 0.19,
        "v": 0.1,
        "L": 0.1,
        "kx_min": -40.0,
        "kx_max": 40.0,
        "omega_min": 0.0,
        "omega_max": 2.5,
        "n_kx": 201,
        "n_omega": 201,
    },
    "force": {"gamma": 0.18, "v": 0.1, "L": 0.1, "parameter": "gamma"},
    "critical": {"gamma": 0.18, "v": 0.1, "L": 0.1, "parameter": "gamma"},
    "verify": {},
}

FORCE_SWEEP_VALUES = {
    ParameterKind.GAMMA: [0.185, 0.19, 0.21, 0.25, 0.30, 0.40],
    ParameterKind.VELOCITY: [0.05, 0.07, 0.08, 0.09, 0.095],
    ParameterKind.GAP: [0.105, 0.11, 0.125, 0.15, 0.2],
}

PARAMETER_COLUMNS = {
    ParameterKind.GAMMA: "gamma [omega_p]",
    ParameterKind.VELOCITY: "v [c]",
    ParameterKind.GAP: "L [1/k_p]",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _scan_settings(run: RunConfig) -> ScanSettings:
    return ScanSettings(n_points=run.scan_points, k_max=run.k_max)


class Command:
    """One subcommand run: owns the config, output directory and sidecar metadata."""

    def __init__(self, name: str, run: RunConfig, runtime: RuntimeSettings):
        self.name = name
        self.run = run
        self.runtime = runtime
        self.output_dir = Path(run.output_dir)
        self.started = time.time()

    def metadata(self, **extra) -> dict:
        return {
            "command": self.name,
            "version": __version__,
            "run_config": self.run.to_dict(),
            "wall_time": round(time.time() - self.started, 3),
            **extra,
        }

    def save(self, name: str, frame: pd.DataFrame, **extra) -> None:
        artifact = GridArtifact(name, frame, self.metadata(**extra))
        for stats in write_grid_artifact(artifact, self.output_dir, parquet=self.run.parquet):
            logger.info(f"Artifact {stats.file_path}: {stats.num_rows} rows")

    def svg_path(self, name: str) -> Optional[Path]:
        return self.output_dir / f"{name}.svg" if self.run.render_svg else None


def cmd_roots(cmd: Command) -> int:
    """Root loci along kx, one file per damping regime."""
    run = cmd.run
    if run.kx_min is None or run.kx_max is None:
        raise ValueError("roots needs --kx-min and --kx-max")
    gammas = [run.gamma] if run.gamma is not None else run.gamma_presets
    if not gammas:
        raise ValueError("roots needs --gamma or gamma_presets")

    for gamma in gammas:
        cfg = replace(run, gamma=gamma).shear_config()
        locus = root_locus(cfg, (run.kx_min, run.kx_max), run.n_kx, run.ky, _scan_settings(run))
        rows = []
        for root_set in locus:
            entries = zip(root_set.branch_ids, root_set.roots, root_set.residuals, root_set.spurious)
            for branch, root, residual, spurious in sorted(entries):
                rows.append(
                    (
                        root_set.kx,
                        branch,
                        root.real,
                        root.imag,
                        residual,
                        "spurious" if spurious else "ok",
                    )
                )
        frame = pd.DataFrame(
            rows,
            columns=[
                "kx [k_p]",
                "branch",
                "Re_omega [omega_p]",
                "Im_omega [omega_p]",
                "residual",
                "status",
            ],
        )
        name = f"roots_gamma{gamma:g}"
        cmd.save(name, frame, gamma=gamma)

        path = cmd.svg_path(name)
        if path is not None:
            series = {
                f"branch {b}": (
                    frame.loc[frame["branch"] == b, "kx [k_p]"].to_numpy(),
                    frame.loc[frame["branch"] == b, "Im_omega [omega_p]"].to_numpy(),
                )
                for b in range(4)
            }
            render_lines_svg(path, series, "kx [k_p]", "Im omega [omega_p]", f"gamma = {gamma:g}")
    return EXIT_OK


def _diagram_frame(diagram, row_name: str, column_name: str, rows, columns) -> pd.DataFrame:
    records = [
        (rows[i], columns[j], diagram.gamma_cr[i, j], diagram.estimate[i, j], diagram.status[i][j])
        for i in range(len(rows))
        for j in range(len(columns))
    ]
    return pd.DataFrame(
        records,
        columns=[row_name, column_name, "gamma_cr [omega_p]", "gamma_cr_estimate [omega_p]", "status"],
    )


def cmd_diagram(cmd: Command) -> int:
    """Critical damping over the (gap, velocity) grid plus the two line cuts."""
    run = cmd.run
    if not run.velocities or not run.gaps:
        raise ValueError("diagram needs velocities and gaps")
    settings = _scan_settings(run)
    key = fingerprint(
        {
            "velocities": run.velocities,
            "gaps": run.gaps,
            "scan_points": run.scan_points,
            "k_max": run.k_max,
            "version": __version__,
        }
    )
    journal = SweepJournal(cmd.output_dir / "diagram.journal.jsonl", key)
    diagram = stability_diagram(
        run.velocities,
        run.gaps,
        settings,
        workers=cmd.runtime.workers,
        completed=journal.load(),
        on_cell=journal.append,
    )
    frame = _diagram_frame(diagram, "L [1/k_p]", "v [c]", diagram.gaps, diagram.velocities)
    cmd.save("diagram", frame)

    path = cmd.svg_path("diagram")
    if path is not None:
        render_heatmap_svg(
            path,
            diagram.velocities,
            diagram.gaps,
            diagram.gamma_cr,
            "v [c]",
            "L [1/k_p]",
            "critical damping [omega_p]",
        )

    if run.cut_velocity is not None:
        cut = stability_diagram([run.cut_velocity], run.gaps, settings, workers=cmd.runtime.workers)
        frame = _diagram_frame(cut, "L [1/k_p]", "v [c]", cut.gaps, cut.velocities)
        cmd.save("diagram_cut_velocity", frame)
        path = cmd.svg_path("diagram_cut_velocity")
        if path is not None:
            render_lines_svg(
                path,
                {"numeric": (cut.gaps, cut.gamma_cr[:, 0]), "estimate": (cut.gaps, cut.estimate[:, 0])},
                "L [1/k_p]",
                "gamma_cr [omega_p]",
                f"v = {run.cut_velocity:g}",
            )
    if run.cut_gap is not None:
        cut = stability_diagram(run.velocities, [run.cut_gap], settings, workers=cmd.runtime.workers)
        frame = _diagram_frame(cut, "L [1/k_p]", "v [c]", cut.gaps, cut.velocities)
        cmd.save("diagram_cut_gap", frame)
        path = cmd.svg_path("diagram_cut_gap")
        if path is not None:
            render_lines_svg(
                path,
                {
                    "numeric": (cut.velocities, cut.gamma_cr[0]),
                    "estimate": (cut.velocities, cut.estimate[0]),
                },
                "v [c]",
                "gamma_cr [omega_p]",
                f"L = {run.cut_gap:g}",
            )
    return EXIT_OK


def cmd_spectrum(cmd: Command) -> int:
    """Force spectral density on an (omega, kx) grid."""
    run = cmd.run
    if run.kx_min is None or run.kx_max is None or run.omega_max is None:
        raise ValueError("spectrum needs --kx-min, --kx-max and omega_max")
    cfg = run.shear_config()
    grid = spectral_density_grid(
        cfg,
        (run.omega_min, run.omega_max),
        (run.kx_min, run.kx_max),
        run.n_omega,
        run.n_kx,
        run.ky,
        IntegrandForm.RR,
    )
    omega, kx = np.meshgrid(grid.omega_axis, grid.kx_axis, indexing="ij")
    inside = (omega > 0) & (omega < window_edge(cfg, kx))
    frame = pd.DataFrame(
        {
            "omega [omega_p]": omega.ravel(),
            "kx [k_p]": kx.ravel(),
            "density [hbar k_p]": grid.values.ravel(),
            "status": np.where(inside.ravel(), "window", "outside"),
        }
    )
    cmd.save("spectrum", frame, form=grid.form.value)

    path = cmd.svg_path("spectrum")
    if path is not None:
        overlays = {
            label: (grid.kx_axis, line) for label, line in overlay_lines(cfg, grid.kx_axis).items()
        }
        render_heatmap_svg(
            path,
            grid.kx_axis,
            grid.omega_axis,
            grid.values,
            "kx [k_p]",
            "omega [omega_p]",
            f"gamma = {cfg.gamma:g}, v = {cfg.relative_velocity:g}, L = {cfg.gap:g}",
            overlays,
        )
    return EXIT_OK


def cmd_force(cmd: Command) -> int:
    """Friction force along one swept parameter; unstable points are marked in-band."""
    run = cmd.run
    kind = ParameterKind(run.parameter or ParameterKind.GAMMA)
    values = run.values or FORCE_SWEEP_VALUES[kind]
    results = force_sweep(
        run.shear_config(),
        kind,
        values,
        run.tol,
        workers=cmd.runtime.workers,
        settings=_scan_settings(run),
    )
    frame = pd.DataFrame(
        {
            PARAMETER_COLUMNS[kind]: [float(v) for v in values],
            "F [hbar omega_p k_p^3]": [r.value for r in results],
            "abs_F [hbar omega_p k_p^3]": [abs(r.value) for r in results],
            "error [hbar omega_p k_p^3]": [r.abs_error_estimate for r in results],
            "evaluations": [r.integrand_evaluations for r in results],
            "inner_unconverged": [r.inner_unconverged for r in results],
            "status": [r.regime.value for r in results],
        }
    )
    cmd.save(
        f"force_{kind.value}",
        frame,
        values=[float(v) for v in values],
        warnings=[list(r.warnings) for r in results],
    )

    path = cmd.svg_path(f"force_{kind.value}")
    if path is not None:
        render_lines_svg(
            path,
            {"|F|": (frame.iloc[:, 0].to_numpy(), frame.iloc[:, 2].to_numpy())},
            PARAMETER_COLUMNS[kind],
            "|F| [hbar omega_p k_p^3]",
            f"force along {kind.value}",
            style="o-",
        )
    return EXIT_OK


def cmd_critical(cmd: Command) -> int:
    """One critical value (gamma, velocity or gap) with its analytic estimate."""
    run = cmd.run
    kind = ParameterKind(run.parameter or ParameterKind.GAMMA)
    settings = _scan_settings(run)
    if kind is ParameterKind.GAMMA:
        if run.v is None or run.L is None:
            raise ValueError("critical gamma needs --v and --L")
        result = critical_gamma(run.v, run.L, settings)
    elif kind is ParameterKind.VELOCITY:
        if run.gamma is None or run.L is None:
            raise ValueError("critical velocity needs --gamma and --L")
        result = critical_velocity(run.gamma, run.L, settings)
    else:
        if run.gamma is None or run.v is None:
            raise ValueError("critical gap needs --gamma and --v")
        result = critical_gap(run.gamma, run.v, settings)

    estimate = float("nan") if result.estimate is None else result.estimate
    frame = pd.DataFrame(
        {
            "parameter": [kind.value],
            "value": [result.value],
            "estimate": [estimate],
            "bracket_lo": [result.bracket[0]],
            "bracket_hi": [result.bracket[1]],
            "iterations": [result.iterations],
            "status": ["ok"],
        }
    )
    cmd.save(f"critical_{kind.value}", frame)
    print(json.dumps({"parameter": kind.value, "value": result.value, "estimate": result.estimate}))
    return EXIT_OK


def cmd_verify(cmd: Command) -> int:
    """Identity and oracle suites; nonzero exit on any failure."""
    run = cmd.run
    report = run_verification(run.only, run.seed, run.quick, workers=cmd.runtime.workers)
    document = cmd.metadata(report=report.to_dict())
    write_sidecar(cmd.output_dir / "verify.json", document)
    print(json.dumps(report.to_dict(), indent=2, default=str))
    return EXIT_OK if report.passed else EXIT_NUMERICAL


COMMANDS: dict[str, Callable[[Command], int]] = {
    "roots": cmd_roots,
    "diagram": cmd_diagram,
    "spectrum": cmd_spectrum,
    "force": cmd_force,
    "critical": cmd_critical,
    "verify": cmd_verify,
}

# flag name -> RunConfig field
_FLOAT_FLAGS = {
    "--gamma": "gamma",
    "--v": "v",
    "--L": "L",
    "--v-upper": "v_upper",
    "--v-lower": "v_lower",
    "--tol": "tol",
    "--kx-min": "kx_min",
    "--kx-max": "kx_max",
    "--ky": "ky",
    "--omega-min": "omega_min",
    "--omega-max": "omega_max",
    "--k-max": "k_max",
    "--cut-velocity": "cut_velocity",
    "--cut-gap": "cut_gap",
}
_INT_FLAGS = {"--n-kx": "n_kx", "--n-omega": "n_omega", "--scan-points": "scan_points", "--seed": "seed"}
_LIST_FLAGS = {
    "--values": "values",
    "--velocities": "velocities",
    "--gaps": "gaps",
    "--gamma-presets": "gamma_presets",
}
_BOOL_FLAGS = {"--quick": "quick", "--svg": "render_svg", "--parquet": "parquet"}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser; every flag defaults to None so unset flags never override."""
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON RunConfig document or artifact sidecar")
    for flag, dest in _FLOAT_FLAGS.items():
        common.add_argument(flag, dest=dest, type=float)
    for flag, dest in _INT_FLAGS.items():
        common.add_argument(flag, dest=dest, type=int)
    for flag, dest in _LIST_FLAGS.items():
        common.add_argument(flag, dest=dest, type=float, nargs="+")
    for flag, dest in _BOOL_FLAGS.items():
        common.add_argument(flag, dest=dest, action="store_true", default=None)
    common.add_argument("--parameter", choices=[k.value for k in ParameterKind])
    common.add_argument("--only", nargs="+", help="verification suites to run")
    common.add_argument("--output-dir", dest="output_dir")

    parser = _Parser(prog="qfl", description="Quantum friction between sheared Drude slabs")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, handler in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=handler.__doc__.splitlines()[0])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Preset < --config file < flags."""
    file_document = RunConfig.load_document(args.config) if args.config else None
    overrides = {
        key: value for key, value in vars(args).items() if key not in ("command", "config")
    }
    return RunConfig.layered(PRESETS[args.command], file_document, overrides)


def main(argv: Optional[list[str]] = None) -> int:
    """Main execution function."""
    args = build_parser().parse_args(argv)
    try:
        runtime = get_runtime_settings()
    except ValueError as e:
        print(f"qfl: {e}", file=sys.stderr)
        return EXIT_USAGE
    setup_logging(runtime.log_level, runtime.log_format)

    try:
        run = resolve_config(args)
        logger.info(f"Starting qfl {args.command} (version {__version__}, workers={runtime.workers})")
        code = COMMANDS[args.command](Command(args.command, run, runtime))
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}", extra={"exit_code": code})
        return code
    logger.info(f"Finished qfl {args.command} with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
