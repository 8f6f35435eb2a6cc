"""Command-line entry point.

Subcommands:
    run         one alternating-optimization solve, printed summary
    converge    per-outer-round objective trace as CSV
    sweep-power sum secrecy rate / SEE versus transmit power (dBm)
    sweep-snr   ... versus transmit SNR P_T / sigma^2 (dB)
    sweep-nirs  ... versus the number of reflecting elements

Without --config the built-in defaults apply; a config file uses the flat
key-value format documented in docs/config-format.md. All outputs land in
--out (default: current directory).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .ao import run_ao
from .channel import build_channels
from .config import (
    ARCH_FC,
    ARCH_SC,
    ConfigError,
    GeometrySpec,
    SolverSettings,
    SystemConfig,
    generate_scenario,
    load_config_file,
)
from .experiments import (
    PARAM_N_IRS,
    PARAM_POWER_DBM,
    PARAM_SNR_DB,
    SCHEME_OPT,
    SweepSpec,
    convergence_rows,
    emit_plot_data,
    run_sweep,
    write_csv,
)

_SWEEP_DEFAULTS = {
    "sweep-power": (PARAM_POWER_DBM, (10.0, 15.0, 20.0, 25.0, 30.0)),
    "sweep-snr": (PARAM_SNR_DB, (130.0, 140.0, 150.0, 160.0, 170.0)),
    "sweep-nirs": (PARAM_N_IRS, (5.0, 10.0, 15.0, 20.0, 25.0)),
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH",
                   help="config file (flat key-value format)")
    p.add_argument("--seed", type=int, default=None,
                   help="scenario seed (overrides the config)")
    p.add_argument("--arch", choices=(ARCH_FC, ARCH_SC), default=None,
                   help="phase-shifter architecture")
    p.add_argument("--out", metavar="DIR", default=".",
                   help="output directory (created if missing)")
    p.add_argument("--phase-seed", type=int, default=0,
                   help="seed for multistarts and randomized recovery")
    p.add_argument("--randomizations", type=int, default=None, metavar="R",
                   help="candidates drawn per randomized recovery")


def _add_solve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--init", default="identity", metavar="SPEC",
                   help="initial reflection: 'identity' or 'random:<seed>'")
    p.add_argument("--freeze-analog", action="store_true",
                   help="keep the first analog stage across outer rounds")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="irsnoma",
        description="Sum-secrecy-rate optimization for an IRS-assisted "
                    "THz MIMO-NOMA downlink")
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="single solve with printed summary")
    _add_common(run_p)
    _add_solve_flags(run_p)
    run_p.add_argument("--print-clusters", action="store_true",
                       help="print the cluster assignment table")
    run_p.add_argument("--dump-channels", action="store_true",
                       help="write per-entry real/imag channel CSV to --out")

    conv_p = sub.add_parser("converge", help="objective trace per round")
    _add_common(conv_p)
    _add_solve_flags(conv_p)
    conv_p.add_argument("--baseline", action="append", default=[],
                        choices=("random-irs", "oma"),
                        help="extra trace next to the optimized one")

    for name in _SWEEP_DEFAULTS:
        sp = sub.add_parser(name, help=f"{name.split('-', 1)[1]} sweep")
        _add_common(sp)
        sp.add_argument("--seeds", type=int, default=1, metavar="K",
                        help="independent scenarios per grid point")
        sp.add_argument("--baseline", action="append", default=[],
                        choices=("random-irs", "oma"),
                        help="baseline curves next to the optimized one")
        sp.add_argument("--grid", default=None, metavar="A,B,C",
                        help="comma-separated grid values")
    return ap


def _load(args) -> tuple[SystemConfig, GeometrySpec, SolverSettings]:
    if args.config:
        cfg, scenario, settings = load_config_file(args.config)
        geom = scenario.geometry
    else:
        cfg, geom, settings = SystemConfig(), GeometrySpec(), SolverSettings()
    if args.arch is not None:
        cfg = replace(cfg, architecture=args.arch)
    if args.randomizations is not None:
        settings = replace(settings,
                           randomization_count=args.randomizations)
    return cfg, geom, settings


def _parse_grid(text: str, parameter: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad --grid value: {exc}") from exc
    if not vals:
        raise ConfigError("--grid must list at least one value")
    if parameter == PARAM_N_IRS and any(v != int(v) for v in vals):
        raise ConfigError("--grid for sweep-nirs must be integers")
    return vals


def _print_clusters(sol) -> None:
    print("cluster  pos  user  own_gain")
    for l, grp in enumerate(sol.assignment.members):
        for m, u in enumerate(grp):
            gain = sol.gains.user_gain[u, l]
            print(f"{l:>7}  {m:>3}  {u:>4}  {gain:.6e}")


def _dump_channels(channels, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("array,row,col,real,imag\n")

        def block(name: str, mat: np.ndarray) -> None:
            m = np.atleast_2d(mat)
            for i in range(m.shape[0]):
                for j in range(m.shape[1]):
                    v = complex(m[i, j])
                    fh.write(f"{name},{i},{j},{v.real!r},{v.imag!r}\n")

        block("h_bar", channels.h_bar)
        block("g_rows", channels.g_rows)
        block("beta", channels.beta)
        block("g_eve", channels.g_eve)
        block("beta_eve", np.array([channels.beta_eve]))


def _cmd_run(args) -> int:
    cfg, geom, settings = _load(args)
    seed = args.seed if args.seed is not None else geom.seed
    scenario = generate_scenario(cfg, geom, seed=seed)
    channels = build_channels(cfg, scenario)
    os.makedirs(args.out, exist_ok=True)
    if args.dump_channels:
        path = os.path.join(args.out, "channels.csv")
        _dump_channels(channels, path)
        print(f"wrote {path}")
    sol = run_ao(cfg, scenario, settings, channels=channels,
                 init=args.init, phase_seed=args.phase_seed,
                 freeze_analog=args.freeze_analog)
    if args.print_clusters:
        _print_clusters(sol)
    print(f"architecture      {cfg.architecture}")
    print(f"seed              {seed}")
    print(f"sum_secrecy       {sol.report.sum_secrecy:.6f}")
    print(f"see               {sol.report.see:.6f}")
    print(f"min_user_rate     {sol.report.min_user_rate:.6f}")
    print(f"total_power_w     {sol.report.total_power:.6e}")
    print(f"outer_iters       {sol.outer_iters}")
    print(f"phase_accepts     {sol.phase_accepts}")
    print(f"converged         {sol.converged}")
    print(f"wall_ms           {sol.wall_ms:.3f}")
    return 0


def _cmd_converge(args) -> int:
    cfg, geom, settings = _load(args)
    seed = args.seed if args.seed is not None else geom.seed
    schemes = (SCHEME_OPT,) + tuple(dict.fromkeys(args.baseline))
    result = convergence_rows(cfg, settings, geometry=geom, seed=seed,
                              schemes=schemes, phase_seed=args.phase_seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "converge.csv")
    write_csv(result, path)
    print(f"wrote {path}")
    return 0


def _cmd_sweep(args) -> int:
    cfg, geom, settings = _load(args)
    parameter, default_grid = _SWEEP_DEFAULTS[args.command]
    grid = (_parse_grid(args.grid, parameter) if args.grid
            else default_grid)
    arch = args.arch if args.arch is not None else cfg.architecture
    schemes = (SCHEME_OPT,) + tuple(dict.fromkeys(args.baseline))
    spec = SweepSpec(parameter=parameter, grid=grid, seeds=args.seeds,
                     architectures=(arch,), schemes=schemes)
    result = run_sweep(spec, cfg, settings, geometry=geom,
                       phase_seed=args.phase_seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{args.command}.csv")
    write_csv(result, path)
    print(f"wrote {path}")
    if result.failures:
        print(f"{len(result.failures)} point(s) failed; see the "
              f"_failures file", file=sys.stderr)
    for series in emit_plot_data(result, args.out):
        print(f"wrote {series}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "converge":
            return _cmd_converge(args)
        return _cmd_sweep(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
