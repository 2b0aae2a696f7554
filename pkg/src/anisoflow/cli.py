"""Command-line entry points.

Exit codes: 0 success, 1 usage/input error, 2 solver non-convergence,
3 failed check under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .anisotropy import make_anisotropy
from .diagnostics import dependence_check, dissipation_check, perturb, range_check
from .grid import Grid
from .io import (
    ConfigError,
    RunConfig,
    UnreadableFile,
    UnsupportedFormat,
    UnwritablePath,
    config_from_pairs,
    load_config,
    load_image,
    save_image,
    save_orientation,
    serialize_config,
    synth_pattern,
)
from .scheme import Trajectory, c_star_constant, energy_bound, run, run_threshold, tau_star_formula
from .solvers import NonConvergence

CSV_COLUMNS = (
    "step",
    "t",
    "dirichlet_alpha",
    "p_term",
    "aniso_term",
    "fidelity",
    "total",
    "diss_alpha_l2",
    "diss_alpha_grad",
    "diss_u_l2",
    "diss_u_grad",
    "residual_alpha",
    "residual_u",
)

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGENCE, EXIT_CHECK_FAILED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", help="flat 'key = value' config file")
    p.add_argument("--synthetic", help="synthetic image size, e.g. 64x64")
    p.add_argument("--rectangles", help="'cx cy w h angle intensity; ...'")
    p.add_argument("--noise", help="synthetic noise amplitude")
    for f in fields(RunConfig):
        if f.name == "synthetic":
            continue
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, help=f"override '{f.name}'")


def _overrides(args) -> dict:
    keys = ["synthetic", "rectangles", "noise"] + [f.name for f in fields(RunConfig) if f.name != "synthetic"]
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def build_config(args, need_source: bool = True) -> RunConfig:
    """Config file (if any) with command-line flags layered on top."""
    base = load_config(args.config) if args.config else RunConfig()
    overrides = _overrides(args)
    if "image" in overrides and "synthetic" not in overrides:
        base.synthetic = None
    if "synthetic" in overrides and "image" not in overrides:
        base.image = None
    cfg = config_from_pairs(overrides, base)
    if need_source or cfg.image is not None or cfg.synthetic is not None:
        cfg.validate()
    return cfg


def _load_problem(cfg: RunConfig):
    if cfg.image is not None:
        u_org = load_image(cfg.image)
    else:
        u_org = synth_pattern(cfg.synthetic)
    grid = Grid(u_org.shape[0], u_org.shape[1], cfg.hx, cfg.hy)
    aniso = make_anisotropy(cfg.anisotropy, cfg.eps, cfg.k)
    return grid, u_org, aniso


def _resolve_params(cfg: RunConfig, grid, aniso, u0, alpha0, u_org):
    params = cfg.scheme_params()
    if cfg.tau_fraction is not None:
        threshold = run_threshold(grid, u0, alpha0, aniso, params, u_org, cfg.c_hyp)
        params = cfg.scheme_params(tau=cfg.tau_fraction * threshold)
    return params


def _simulate(cfg: RunConfig, callback=None, problem=None) -> Trajectory:
    grid, u_org, aniso = problem or _load_problem(cfg)
    u0, alpha0 = u_org.copy(), grid.zeros()
    params = _resolve_params(cfg, grid, aniso, u0, alpha0, u_org)
    return run(grid, u0, alpha0, aniso, params, cfg.m, u_org, c_hyp=cfg.c_hyp, callback=callback)


def write_energy_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in traj.records:
            e = r.energy.as_dict()
            w.writerow(
                [r.index, repr(r.index * traj.params.tau)]
                + [repr(e[k]) for k in CSV_COLUMNS[2:7]]
                + [repr(getattr(r, k)) for k in CSV_COLUMNS[7:]]
            )


def _write_report(out: Path, verdicts: list[dict]) -> Path:
    path = out / "report.jsonl"
    with open(path, "w") as fh:
        for v in verdicts:
            fh.write(json.dumps(v, sort_keys=True) + "\n")
    return path


def _output_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UnwritablePath(f"{out}: {exc.strerror or exc}") from exc
    return out


def cmd_denoise(cfg: RunConfig, args) -> int:
    out = _output_dir(cfg)
    pad = cfg.image is not None
    ext = ".png" if args.png else ".pgm"

    def snapshot(i, traj):
        if i % cfg.stride == 0 or i == cfg.m:
            u, a = traj.states[i]
            save_image(u, out / f"u_{i:05d}{ext}", pad=pad)
            save_orientation(a, out / f"alpha_{i:05d}{ext}", pad=pad)

    problem = _load_problem(cfg)
    save_image(problem[1], out / f"u_{0:05d}{ext}", pad=pad)
    traj = _simulate(cfg, callback=snapshot, problem=problem)
    write_energy_csv(traj, out / "energy.csv")
    (out / "config.txt").write_text(serialize_config(cfg))
    print(f"{cfg.m} steps, tau = {traj.params.tau:.6g}, tau* = {traj.tau_star:.6g}, "
          f"E: {traj.energies[0]:.6g} -> {traj.energies[-1]:.6g}")
    if traj.above_tau_star:
        print("warning: tau >= tau*; energy dissipation is not guaranteed", file=sys.stderr)
    return EXIT_OK


def cmd_tau_star(cfg: RunConfig, args) -> int:
    try:
        params = cfg.scheme_params()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.e0 is not None:
        e0 = args.e0
    else:
        grid, u_org, aniso = _load_problem(cfg)
        e0 = energy_bound(grid, u_org, grid.zeros(), aniso, params, u_org)
    c_star = args.c_star_value if args.c_star_value is not None else c_star_constant(
        params.p, params.nu, params.kappa, cfg.c_hyp
    )
    if args.w1inf is not None:
        w1inf = args.w1inf
    else:
        aniso = make_anisotropy(cfg.anisotropy, cfg.eps, cfg.k)
        if not aniso.smooth:
            raise UsageError("tau* needs eps > 0")
        w1inf = aniso.w1inf
    if e0 < 0 or c_star <= 0 or w1inf < 0:
        raise UsageError("need E0 >= 0, C* > 0, W1inf >= 0")
    print(repr(tau_star_formula(c_star, w1inf, e0, params.p)))
    return EXIT_OK


def _finish_check(cfg, verdicts, strict) -> int:
    out = _output_dir(cfg)
    path = _write_report(out, verdicts)
    for v in verdicts:
        print(f"{v['check']}: {'PASS' if v['passed'] else 'FAIL'}")
    print(f"report written to {path}")
    if strict and not all(v["passed"] for v in verdicts):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_check_dissipation(cfg: RunConfig, args) -> int:
    traj = _simulate(cfg)
    slack = cfg.slack if cfg.slack is not None else 1e-6 * traj.energies[0]
    report = dissipation_check(traj, slack)
    verdict = report.as_dict()
    verdict.update(tau=traj.params.tau, tau_star=traj.tau_star, steps=cfg.m)
    return _finish_check(cfg, [verdict], args.strict)


def cmd_check_range(cfg: RunConfig, args) -> int:
    traj = _simulate(cfg)
    tol = cfg.slack if cfg.slack is not None else 1e-6
    neg, over = range_check(traj)
    verdict = {"check": "range", "passed": neg <= tol and over <= tol, "max_neg": neg, "max_over": over, "tol": tol}
    return _finish_check(cfg, [verdict], args.strict)


def cmd_check_dependence(cfg: RunConfig, args) -> int:
    grid, u_org, aniso = _load_problem(cfg)
    u0a, a0a = u_org.copy(), grid.zeros()
    u0b, a0b = perturb(grid, u0a, a0a, cfg.delta)
    params = _resolve_params(cfg, grid, aniso, u0a, a0a, u_org)
    report = dependence_check(grid, u0a, a0a, u0b, a0b, aniso, params, cfg.m, u_org, cfg.c_star)
    return _finish_check(cfg, [report.as_dict()], args.strict)


def cmd_synth(cfg: RunConfig, args) -> int:
    if cfg.synthetic is None:
        raise UsageError("synth needs a synthetic source ('synthetic = NXxNY')")
    path = Path(args.out)
    save_image(synth_pattern(cfg.synthetic), path, pad=args.pad)
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "denoise": cmd_denoise,
    "tau-star": cmd_tau_star,
    "check-dissipation": cmd_check_dissipation,
    "check-range": cmd_check_range,
    "check-dependence": cmd_check_dependence,
    "synth": cmd_synth,
}


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="anisoflow", description="Orientation-adaptive anisotropic denoising flow")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_config_args(p)
        if name.startswith("check-"):
            p.add_argument("--strict", action="store_true", help="exit 3 when the check fails")
        if name == "denoise":
            p.add_argument("--png", action="store_true", help="write PNG snapshots instead of PGM")
        if name == "tau-star":
            p.add_argument("--e0", type=float, help="energy level (default: the bound E(u0, alpha0) + lip |Omega|)")
            p.add_argument("--c-star-value", type=float, help="use this C* instead of the formula")
            p.add_argument("--w1inf", type=float, help="use this |grad gamma|_W1inf instead of lip + hess_bound")
        if name == "synth":
            p.add_argument("-o", "--out", required=True, help="output .pgm or .png path")
            p.add_argument("--pad", action="store_true", help="add the zero boundary frame")
    return parser


def run_cli(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
        standalone = args.command == "tau-star" and args.e0 is not None
        cfg = build_config(args, need_source=not standalone)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"anisoflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, UnreadableFile, UnsupportedFormat, UnwritablePath, ValueError) as exc:
        print(f"anisoflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergence as exc:
        where = f" at step {exc.step}" if exc.step is not None else ""
        print(f"anisoflow: solver did not converge{where}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
