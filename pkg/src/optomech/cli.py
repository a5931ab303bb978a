"""Command-line front end: ``optomech <command> --preset NAME | --config PATH``.

Exit codes: 0 success, 2 config error, 3 integration failure, 4 convergence failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import PRESETS, ConfigError, LandscapeConfig, ScenarioConfig, load_config, load_sweep_spec, preset_config
from .diagnostics import (
    LyapunovError,
    SpectrumError,
    classify,
    lyapunov_max,
    poincare_section,
    power_spectrum,
    spectrum_trajectory,
)
from .integrate import IntegrationError, sample_trajectory
from .landscape import classify_wells, potential_profile
from .model import ParameterError
from .sweep import run_sweep

logger = logging.getLogger("optomech")

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_CONVERGENCE = 0, 2, 3, 4


def write_atomic(path: Path, text: str):
    """Whole-file write through a temporary file and rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows, fmt=".16e") -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v, fmt) for v in row))
    return "\n".join(lines) + "\n"


def _cell(v, fmt):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), fmt)


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _fmt_ratio(r: float) -> str:
    return format(r, "g")


def cmd_potential(cfg: ScenarioConfig, args) -> dict:
    land = cfg.landscape
    x_min = args.x_min if args.x_min is not None else land.x_min
    x_max = args.x_max if args.x_max is not None else land.x_max
    n = args.n_points if args.n_points is not None else land.n_points
    ratios = land.eps_kappa_ratios
    if args.eps_ratios is not None:
        ratios = tuple(float(r) for r in args.eps_ratios.split(",") if r.strip())
    LandscapeConfig(x_min, x_max, n, ratios)
    fmt = cfg.output.float_format

    def files_for(params, suffix):
        prof = potential_profile(params, x_min, x_max, n)
        wells = classify_wells(params)
        return {
            f"potential{suffix}.csv": csv_text(("x", "u"), zip(prof.x, prof.u), fmt),
            f"wells{suffix}.json": json_text(wells.to_dict()),
        }

    out = files_for(cfg.model, "")
    for r in ratios:
        out.update(files_for(cfg.model.replace(eps=r * cfg.model.kappa, eps_m=0.0), f"_epsk{_fmt_ratio(r)}"))
    return out


def cmd_simulate(cfg: ScenarioConfig, args) -> dict:
    params = cfg.model
    periods = args.periods if args.periods is not None else 200
    dt = args.dt_sample if args.dt_sample is not None else params.drive_period / cfg.diagnostics.samples_per_period
    fmt = cfg.output.float_format
    try:
        traj = sample_trajectory(cfg.initial, 0.0, params.drive_period * periods, dt, params, cfg.integrator)
    except IntegrationError as exc:
        partial = exc.partial
        rows = [(t, s.x, s.p) for t, s in zip(partial.times, partial.samples)]
        text = csv_text(("t", "x", "p"), rows, fmt) + f"#status,integration-failure,{format(exc.t, fmt)}\n"
        raise _PartialOutput({"trajectory.csv": text}, exc)
    rows = [(t, s.x, s.p) for t, s in zip(traj.times, traj.samples)]
    return {"trajectory.csv": csv_text(("t", "x", "p"), rows, fmt)}


def cmd_poincare(cfg: ScenarioConfig, args) -> dict:
    opts = cfg.diagnostics
    n_points = args.periods if args.periods is not None else opts.n_points
    sec = poincare_section(cfg.initial, cfg.model, opts.n_transient, n_points, cfg.integrator)
    text = csv_text(("x", "xdot"), sec.points, cfg.output.float_format)
    if sec.failed_index is not None:
        text += f"#status,integration-failure,{sec.failed_index}\n"
        raise _PartialOutput({"poincare.csv": text}, IntegrationError("section failed", float("nan"), ()))
    return {"poincare.csv": text}


def cmd_spectrum(cfg: ScenarioConfig, args) -> dict:
    opts = cfg.diagnostics
    if args.periods is not None:
        opts = opts.replace(spectrum_periods=args.periods)
    fmt = cfg.output.float_format
    spec = power_spectrum(spectrum_trajectory(cfg.initial, cfg.model, opts, cfg.integrator, args.dt_sample))
    out = {"spectrum.csv": csv_text(("omega", "power"), zip(spec.frequencies, spec.power), fmt)}
    if opts.spectrum_partial_fraction is not None:
        full = spectrum_trajectory(cfg.initial, cfg.model, opts, cfg.integrator, args.dt_sample, include_transient=True)
        n = max(2, int(len(full) * opts.spectrum_partial_fraction))
        full.samples = full.samples[:n]
        part = power_spectrum(full)
        out["spectrum_partial.csv"] = csv_text(("omega", "power"), zip(part.frequencies, part.power), fmt)
    return out


def cmd_lyapunov(cfg: ScenarioConfig, args) -> dict:
    opts = cfg.diagnostics
    if args.periods is not None:
        opts = opts.replace(lyapunov_renorm=args.periods)
    est = lyapunov_max(cfg.initial, cfg.model, opts, cfg.integrator)
    return {"lyapunov.json": json_text(est.to_dict())}


def cmd_classify(cfg: ScenarioConfig, args) -> dict:
    opts = cfg.diagnostics
    if args.periods is not None:
        opts = opts.replace(n_points=args.periods)
    report = classify(cfg.initial, cfg.model, opts, cfg.integrator)
    return {"regime.json": json_text(report.to_dict())}


def cmd_sweep(spec, args) -> dict:
    result = run_sweep(spec)
    rows = []
    for a, b, value, status in result.rows():
        rows.append((a, b, value, status))
    return {"sweep.csv": csv_text(("a", "b", "metric", "status"), rows)}


COMMANDS = {
    "potential": cmd_potential,
    "simulate": cmd_simulate,
    "poincare": cmd_poincare,
    "spectrum": cmd_spectrum,
    "lyapunov": cmd_lyapunov,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
}


class _PartialOutput(Exception):
    def __init__(self, files, cause):
        super().__init__(str(cause))
        self.files = files
        self.cause = cause


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optomech", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", metavar="PATH",
                         help="sweep spec file" if name == "sweep" else "scenario JSON file")
        if name != "sweep":
            src.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--out", metavar="DIR", help="output directory (default: config output.directory)")
        p.add_argument("--periods", type=int, metavar="N")
        p.add_argument("--dt-sample", type=float, metavar="F")
        p.add_argument("--seed", type=int, metavar="N", help="tangent-vector seed")
        p.add_argument("--fast", action="store_true", help="low-confidence 30/400 sweep profile")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "potential":
            p.add_argument("--x-min", type=float)
            p.add_argument("--x-max", type=float)
            p.add_argument("--n-points", type=int)
            p.add_argument("--eps-ratios", metavar="R1,R2,...", help="extra profiles at these eps/kappa")
    return parser


def _load(args):
    if args.command == "sweep":
        spec = load_sweep_spec(args.config, fast=args.fast)
        if args.seed is not None:
            spec = replace(spec, options=spec.options.replace(seed=args.seed))
        return spec, Path(args.out or "out")
    cfg = preset_config(args.preset) if args.preset else load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, diagnostics=cfg.diagnostics.replace(seed=args.seed))
    if args.periods is not None and args.periods < 1:
        raise ConfigError("--periods: must be >= 1")
    if args.dt_sample is not None and not args.dt_sample > 0:
        raise ConfigError("--dt-sample: must be > 0")
    return cfg, Path(args.out or cfg.output.directory)


def _write(directory: Path, files: dict):
    for name, text in files.items():
        write_atomic(directory / name, text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, out_dir = _load(args)
        files = COMMANDS[args.command](cfg, args)
    except (ConfigError, ParameterError, SpectrumError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _PartialOutput as exc:
        _write(out_dir, exc.files)
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except LyapunovError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    _write(out_dir, files)
    for name in files:
        logger.info("wrote %s", out_dir / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
