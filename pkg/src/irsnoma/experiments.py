"""Seeded parameter sweeps over the optimizer and its benchmarks.

A sweep point is (grid value, architecture, scheme, seed). Scenarios are
generated from the seed alone, so every scheme and architecture at one
seed sees the same node placement and comparisons are paired. Failures at
one point are recorded and the sweep continues.

Results serialize to CSV with the fixed column order
variant,x,seed,sum_secrecy,see,outer_iters,wall_ms; a variant is
"<arch>-<scheme>", e.g. "fc-opt" or "sc-random-irs". All numeric fields
except wall_ms are deterministic given (config, spec, seeds).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

from .ao import Solution, random_irs_baseline, run_ao
from .channel import build_channels
from .config import (ARCH_FC, ARCH_SC, ConfigError, GeometrySpec,
                     SolverSettings, SystemConfig, generate_scenario)
from .metrics import oma_report, power_overhead

SCHEME_OPT = "opt"
SCHEME_RANDOM_IRS = "random-irs"
SCHEME_OMA = "oma"
_SCHEMES = (SCHEME_OPT, SCHEME_RANDOM_IRS, SCHEME_OMA)

PARAM_POWER_DBM = "power_dbm"
PARAM_SNR_DB = "snr_db"
PARAM_N_IRS = "n_irs"
PARAM_N_TX = "n_tx"
PARAM_MIN_RATE = "min_rate"
_PARAMS = (PARAM_POWER_DBM, PARAM_SNR_DB, PARAM_N_IRS, PARAM_N_TX,
           PARAM_MIN_RATE)

CSV_COLUMNS = ("variant", "x", "seed", "sum_secrecy", "see",
               "outer_iters", "wall_ms")


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and which curves to produce."""

    parameter: str
    grid: tuple[float, ...]
    seeds: int = 1
    architectures: tuple[str, ...] = (ARCH_FC,)
    schemes: tuple[str, ...] = (SCHEME_OPT,)

    def __post_init__(self) -> None:
        if self.parameter not in _PARAMS:
            raise ConfigError(
                f"unknown sweep parameter {self.parameter!r}; "
                f"expected one of {_PARAMS}")
        if not self.grid:
            raise ConfigError("sweep grid must be nonempty")
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        for arch in self.architectures:
            if arch not in (ARCH_FC, ARCH_SC):
                raise ConfigError(f"unknown architecture {arch!r}")
        for scheme in self.schemes:
            if scheme not in _SCHEMES:
                raise ConfigError(f"unknown scheme {scheme!r}")
        if not self.architectures or not self.schemes:
            raise ConfigError("architectures and schemes must be nonempty")


@dataclass(frozen=True)
class SweepRow:
    variant: str
    x: float
    seed: int
    sum_secrecy: float
    see: float
    outer_iters: int
    wall_ms: float


@dataclass(frozen=True)
class SweepFailure:
    variant: str
    x: float
    seed: int
    error: str


@dataclass
class SweepResult:
    rows: list[SweepRow]
    failures: list[SweepFailure]


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def apply_point(cfg: SystemConfig, parameter: str, x: float) -> SystemConfig:
    """Config at one grid value of the swept parameter.

    The transmit-SNR sweep adjusts transmit power at fixed noise so that
    total_power_w / noise_power_w hits the requested dB value.
    """
    if parameter == PARAM_POWER_DBM:
        return replace(cfg, total_power_w=dbm_to_watt(x))
    if parameter == PARAM_SNR_DB:
        return replace(
            cfg, total_power_w=cfg.noise_power_w * 10.0 ** (x / 10.0))
    if parameter == PARAM_N_IRS:
        return replace(cfg, n_irs=int(x))
    if parameter == PARAM_N_TX:
        return replace(cfg, n_tx=int(x))
    if parameter == PARAM_MIN_RATE:
        return replace(cfg, min_rate=float(x))
    raise ConfigError(f"unknown sweep parameter {parameter!r}")


def _solve_scheme(scheme: str, cfg: SystemConfig, scenario, channels,
                  settings: SolverSettings, seed: int,
                  phase_seed: int,
                  opt_cache: dict[str, Solution]) -> SweepRow:
    if scheme == SCHEME_RANDOM_IRS:
        sol = random_irs_baseline(cfg, scenario, settings,
                                  channels=channels, seed=seed)
        report = sol.report
    else:
        if "opt" not in opt_cache:
            opt_cache["opt"] = run_ao(cfg, scenario, settings,
                                      channels=channels,
                                      phase_seed=phase_seed)
        sol = opt_cache["opt"]
        report = sol.report
        if scheme == SCHEME_OMA:
            # orthogonal re-score of the optimized operating point
            report = oma_report(sol.gains, sol.p, cfg)
    return SweepRow(variant="", x=0.0, seed=seed,
                    sum_secrecy=report.sum_secrecy, see=report.see,
                    outer_iters=sol.outer_iters, wall_ms=sol.wall_ms)


def run_sweep(spec: SweepSpec, cfg: SystemConfig,
              settings: SolverSettings,
              geometry: GeometrySpec | None = None,
              phase_seed: int = 0) -> SweepResult:
    """Run every (grid value, architecture, scheme, seed) point.

    Scheme failures are recorded with their error text and the sweep
    continues; the optimized solve is shared between the "opt" and "oma"
    rows of one point.
    """
    geom = geometry if geometry is not None else GeometrySpec()
    rows: list[SweepRow] = []
    failures: list[SweepFailure] = []
    for x in spec.grid:
        for arch in spec.architectures:
            cfg_point = apply_point(replace(cfg, architecture=arch),
                                    spec.parameter, x)
            for seed in range(spec.seeds):
                scenario = generate_scenario(cfg_point, geom, seed)
                channels = build_channels(cfg_point, scenario)
                opt_cache: dict[str, Solution] = {}
                for scheme in spec.schemes:
                    variant = f"{arch}-{scheme}"
                    try:
                        row = _solve_scheme(scheme, cfg_point, scenario,
                                            channels, settings, seed,
                                            phase_seed, opt_cache)
                    except Exception as exc:  # record and continue
                        failures.append(SweepFailure(
                            variant=variant, x=float(x), seed=seed,
                            error=f"{type(exc).__name__}: {exc}"))
                        continue
                    rows.append(replace(row, variant=variant, x=float(x)))
    return SweepResult(rows=rows, failures=failures)


def _fmt(v: float) -> str:
    return repr(float(v))


def format_rows(result: SweepResult) -> str:
    """Render the fixed-schema CSV text (header plus one line per row)."""
    lines = [",".join(CSV_COLUMNS)]
    for r in result.rows:
        lines.append(
            f"{r.variant},{_fmt(r.x)},{r.seed},{_fmt(r.sum_secrecy)},"
            f"{_fmt(r.see)},{r.outer_iters},{r.wall_ms:.3f}")
    return "\n".join(lines) + "\n"


def write_csv(result: SweepResult, path: str) -> None:
    """Write the results CSV; failures go to <path stem>_failures.csv."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_rows(result))
    if result.failures:
        fail_path = _with_stem_suffix(path, "_failures")
        with open(fail_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("variant,x,seed,error\n")
            for f in result.failures:
                err = f.error.replace('"', "'")
                fh.write(f'{f.variant},{_fmt(f.x)},{f.seed},"{err}"\n')


def _with_stem_suffix(path: str, suffix: str) -> str:
    if path.endswith(".csv"):
        return path[:-4] + suffix + ".csv"
    return path + suffix


def emit_plot_data(result: SweepResult, out_dir: str,
                   metrics: tuple[str, ...] = ("sum_secrecy", "see"),
                   ) -> list[str]:
    """One series file per (metric, variant): columns x,mean,stderr.

    Rows keep the sweep's grid order; stderr is the sample standard error
    (0 for a single seed). Returns the written paths in emission order.
    """
    variants: list[str] = []
    for r in result.rows:
        if r.variant not in variants:
            variants.append(r.variant)
    written: list[str] = []
    for metric in metrics:
        if metric not in ("sum_secrecy", "see"):
            raise ConfigError(f"unknown plot metric {metric!r}")
        for variant in variants:
            xs: list[float] = []
            groups: dict[float, list[float]] = {}
            for r in result.rows:
                if r.variant != variant:
                    continue
                if r.x not in groups:
                    xs.append(r.x)
                    groups[r.x] = []
                groups[r.x].append(getattr(r, metric))
            path = os.path.join(out_dir, f"{metric}_{variant}.csv")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("x,mean,stderr\n")
                for x in xs:
                    vals = groups[x]
                    n = len(vals)
                    mean = sum(vals) / n
                    if n > 1:
                        var = sum((v - mean) ** 2 for v in vals) / (n - 1)
                        stderr = math.sqrt(var / n)
                    else:
                        stderr = 0.0
                    fh.write(f"{_fmt(x)},{_fmt(mean)},{_fmt(stderr)}\n")
            written.append(path)
    return written


def convergence_rows(cfg: SystemConfig, settings: SolverSettings,
                     geometry: GeometrySpec | None = None,
                     seed: int = 0,
                     schemes: tuple[str, ...] = (SCHEME_OPT,
                                                 SCHEME_RANDOM_IRS),
                     phase_seed: int = 0) -> SweepResult:
    """Per-round objective data in the sweep schema: x is the outer-round
    number (1-based) and sum_secrecy the objective after that round.

    The see column divides each round's objective by the final round's
    consumed power (per-round power totals are not retained).
    """
    geom = geometry if geometry is not None else GeometrySpec()
    scenario = generate_scenario(cfg, geom, seed)
    channels = build_channels(cfg, scenario)
    rows: list[SweepRow] = []
    failures: list[SweepFailure] = []
    for scheme in schemes:
        if scheme not in (SCHEME_OPT, SCHEME_RANDOM_IRS):
            raise ConfigError(
                f"convergence traces exist for opt/random-irs only, "
                f"got {scheme!r}")
        variant = f"{cfg.architecture}-{scheme}"
        try:
            if scheme == SCHEME_OPT:
                sol = run_ao(cfg, scenario, settings, channels=channels,
                             phase_seed=phase_seed)
            else:
                sol = random_irs_baseline(cfg, scenario, settings,
                                          channels=channels, seed=seed)
        except Exception as exc:
            failures.append(SweepFailure(variant=variant, x=0.0, seed=seed,
                                         error=f"{type(exc).__name__}: "
                                               f"{exc}"))
            continue
        denom = sol.report.total_power + power_overhead(cfg)
        for i, val in enumerate(sol.trace):
            see = val / denom
            rows.append(SweepRow(variant=variant, x=float(i + 1), seed=seed,
                                 sum_secrecy=val, see=see,
                                 outer_iters=sol.outer_iters,
                                 wall_ms=sol.wall_ms))
    return SweepResult(rows=rows, failures=failures)
