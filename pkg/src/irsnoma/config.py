"""System configuration, solver settings, and seeded scenario generation.

Config documents are flat key = value files with three sections: [system],
[scenario], and [solver]. See docs/config-format.md for the full schema.
All records are immutable after validation; scenario generation is fully
deterministic given (geometry, seed).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace

import numpy as np

# Speed of light, m/s. Fixed at four significant figures so derived constants
# (path loss, spacing defaults) stay reproducible across platforms.
C_LIGHT = 2.998e8

ARCH_FC = "fc"
ARCH_SC = "sc"


class ConfigError(ValueError):
    """Malformed or inconsistent configuration document."""


def _default_rx_gain_db(n_tx: int) -> float:
    return 4.0 + 20.0 * math.log10(math.sqrt(n_tx))


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Physical and architectural parameters of the downlink."""

    n_tx: int = 64                  # BS antennas
    n_irs: int = 20                 # reflecting elements
    n_rf: int = 4                   # RF chains == clusters == streams
    users_per_cluster: int = 2
    n_users: int | None = None      # optional total override (else L * upc)
    carrier_freq_hz: float = 340e9
    quant_bits: int = 4             # analog phase-shifter resolution
    tx_gain: float = 1.0            # linear
    rx_gain_db: float = math.nan    # NaN means "apply default formula"
    absorption_per_m: float = 0.0033
    noise_power_w: float = 1e-17
    total_power_w: float = 1.0
    min_rate: float = 0.0           # per-user QoS floor, bit/s/Hz
    path_comp: float = 1.0          # cascade compensation factor eta
    architecture: str = ARCH_FC
    element_spacing_m: float = 0.0  # 0.0 means "half wavelength c/(2f)"
    p_rf_w: float = 0.3             # per RF chain
    p_ps_w: float = 0.04            # per phase shifter
    p_bb_w: float = 0.2             # baseband

    def __post_init__(self) -> None:
        if self.n_tx < 1 or self.n_irs < 1 or self.n_rf < 1:
            raise ConfigError("n_tx, n_irs, n_rf must be positive")
        if self.users_per_cluster < 1:
            raise ConfigError("users_per_cluster must be >= 1")
        if self.architecture not in (ARCH_FC, ARCH_SC):
            raise ConfigError(
                f"architecture must be '{ARCH_FC}' or '{ARCH_SC}', "
                f"got {self.architecture!r}")
        if self.architecture == ARCH_SC and self.n_tx % self.n_rf != 0:
            raise ConfigError(
                f"sub-connected array needs n_tx divisible by n_rf "
                f"(n_tx={self.n_tx}, n_rf={self.n_rf})")
        if self.quant_bits < 1 or self.quant_bits > 24:
            raise ConfigError("quant_bits out of range [1, 24]")
        if self.carrier_freq_hz <= 0:
            raise ConfigError("carrier_freq_hz must be positive")
        if self.noise_power_w <= 0:
            raise ConfigError("noise_power_w must be positive")
        if self.total_power_w <= 0:
            raise ConfigError("total_power_w must be positive")
        if self.min_rate < 0:
            raise ConfigError("min_rate must be >= 0")
        if self.n_users is not None and self.n_users < self.n_rf:
            raise ConfigError(
                f"n_users={self.n_users} smaller than cluster count "
                f"{self.n_rf}")
        if math.isnan(self.rx_gain_db):
            object.__setattr__(
                self, "rx_gain_db", _default_rx_gain_db(self.n_tx))
        if self.element_spacing_m == 0.0:
            object.__setattr__(
                self, "element_spacing_m",
                C_LIGHT / (2.0 * self.carrier_freq_hz))

    @property
    def rx_gain(self) -> float:
        """Receive antenna gain, linear scale."""
        return db_to_linear(self.rx_gain_db)

    @property
    def n_clusters(self) -> int:
        return self.n_rf

    @property
    def total_users(self) -> int:
        if self.n_users is not None:
            return self.n_users
        return self.n_rf * self.users_per_cluster

    def cluster_sizes(self) -> tuple[int, ...]:
        """Users per cluster center, as even as possible (diff <= 1)."""
        m, l = self.total_users, self.n_rf
        base, extra = divmod(m, l)
        return tuple(base + (1 if i < extra else 0) for i in range(l))

    @property
    def n_phase_shifters(self) -> int:
        if self.architecture == ARCH_FC:
            return self.n_tx * self.n_rf
        return self.n_tx

    @property
    def subarray_size(self) -> int:
        return self.n_tx // self.n_rf


@dataclass(frozen=True)
class GeometrySpec:
    """Placement knobs; realized into a Scenario by generate_scenario."""

    bs_irs_distance_m: float = 15.0
    eve_distance_m: float = 5.0
    cluster_distance_m: float = 5.0
    user_disc_radius_m: float = 2.0
    # Optional pinned angles (radians); NaN means "draw from the seed".
    bs_aod_rad: float = math.nan
    irs_aoa_rad: float = math.nan
    eve_angle_rad: float = math.nan
    seed: int = 1

    def __post_init__(self) -> None:
        for name in ("bs_irs_distance_m", "eve_distance_m",
                     "cluster_distance_m"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.user_disc_radius_m < 0:
            raise ConfigError("user_disc_radius_m must be >= 0")
        if self.user_disc_radius_m >= self.cluster_distance_m:
            raise ConfigError(
                "user_disc_radius_m must be smaller than cluster_distance_m "
                "(users would cross the array)")
        for name in ("bs_aod_rad", "irs_aoa_rad", "eve_angle_rad"):
            v = getattr(self, name)
            if not math.isnan(v) and not -math.pi / 2 <= v <= math.pi / 2:
                raise ConfigError(f"{name} outside [-pi/2, pi/2]")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")


@dataclass(frozen=True)
class Scenario:
    """Realized node placement. Angles in radians, distances in meters.

    Users are grouped by the cluster center they were drawn around; the
    clustering stage may later regroup them. All per-user sequences are
    tuples of per-cluster tuples, indexed [center][user].
    """

    d_bs_irs: float
    bs_aod: float
    irs_aoa: float
    d_eve: float
    eve_angle: float
    cluster_angles: tuple[float, ...]
    cluster_distances: tuple[float, ...]
    user_distances: tuple[tuple[float, ...], ...]
    user_angles: tuple[tuple[float, ...], ...]
    seed: int
    geometry: GeometrySpec

    @property
    def n_users(self) -> int:
        return sum(len(c) for c in self.user_distances)

    def flat_distances(self) -> list[float]:
        return [d for grp in self.user_distances for d in grp]

    def flat_angles(self) -> list[float]:
        return [a for grp in self.user_angles for a in grp]


@dataclass(frozen=True)
class SolverSettings:
    """Iteration budgets and tolerances for the optimization stack."""

    outer_max: int = 10             # alternating-optimization rounds
    inner_power_max: int = 30       # SCA rounds, power subproblem
    inner_phase_max: int = 6        # SCA rounds, phase subproblem
    rel_tol: float = 1e-4
    sdp_tol: float = 1e-6           # first-order stationarity residual
    randomization_count: int = 50
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    pgd_max_iter: int = 300
    projection_max_iter: int = 500
    projection_tol: float = 1e-9
    phase_multistart: int = 1
    zf_cond_limit: float = 1e10
    qos_penalty: float = 1e3

    def __post_init__(self) -> None:
        if self.outer_max < 1:
            raise ConfigError("outer_max must be >= 1")
        if not 0 < self.armijo_shrink < 1:
            raise ConfigError("armijo_shrink must lie in (0, 1)")
        if not 0 < self.armijo_c < 1:
            raise ConfigError("armijo_c must lie in (0, 1)")
        if self.rel_tol <= 0 or self.sdp_tol <= 0 or self.projection_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.randomization_count < 1:
            raise ConfigError("randomization_count must be >= 1")
        if self.phase_multistart < 1:
            raise ConfigError("phase_multistart must be >= 1")


def generate_scenario(cfg: SystemConfig, geom: GeometrySpec,
                      seed: int | None = None) -> Scenario:
    """Draw a node placement. Deterministic given (cfg, geom, seed).

    Cluster centers sit at geom.cluster_distance_m from the array with
    seeded angles; each user lands uniformly in a disc of radius
    geom.user_disc_radius_m around its center, so user distances stay within
    center +- radius. Steering angles for users, Eve, and the BS-IRS link are
    drawn uniformly in [-pi/2, pi/2] unless pinned in the geometry.
    """
    use_seed = geom.seed if seed is None else seed
    rng = np.random.default_rng(use_seed)

    def draw_angle(pinned: float) -> float:
        if not math.isnan(pinned):
            return float(pinned)
        return float(rng.uniform(-math.pi / 2, math.pi / 2))

    bs_aod = draw_angle(geom.bs_aod_rad)
    irs_aoa = draw_angle(geom.irs_aoa_rad)
    eve_angle = draw_angle(geom.eve_angle_rad)

    sizes = cfg.cluster_sizes()
    centers_angle = []
    centers_dist = []
    user_d: list[tuple[float, ...]] = []
    user_a: list[tuple[float, ...]] = []
    for size in sizes:
        c_ang = float(rng.uniform(-math.pi / 2, math.pi / 2))
        c_dist = geom.cluster_distance_m
        centers_angle.append(c_ang)
        centers_dist.append(c_dist)
        cx, cy = c_dist * math.cos(c_ang), c_dist * math.sin(c_ang)
        dists = []
        angs = []
        for _ in range(size):
            while True:
                r = geom.user_disc_radius_m * math.sqrt(rng.uniform(0, 1))
                phi = rng.uniform(0, 2 * math.pi)
                d = math.hypot(cx + r * math.cos(phi), cy + r * math.sin(phi))
                if d > 1e-9:  # degenerate on-array placement: redraw
                    break
            dists.append(d)
            angs.append(float(rng.uniform(-math.pi / 2, math.pi / 2)))
        user_d.append(tuple(dists))
        user_a.append(tuple(angs))

    return Scenario(
        d_bs_irs=geom.bs_irs_distance_m,
        bs_aod=bs_aod,
        irs_aoa=irs_aoa,
        d_eve=geom.eve_distance_m,
        eve_angle=eve_angle,
        cluster_angles=tuple(centers_angle),
        cluster_distances=tuple(centers_dist),
        user_distances=tuple(user_d),
        user_angles=tuple(user_a),
        seed=use_seed,
        geometry=replace(geom, seed=use_seed),
    )


# ---------------------------------------------------------------------------
# Document parsing

_SYSTEM_KEYS = {
    "n_tx": int,
    "n_irs": int,
    "n_rf": int,
    "users_per_cluster": int,
    "n_users": int,
    "carrier_freq_hz": float,
    "quant_bits": int,
    "tx_gain": float,
    "rx_gain_db": float,
    "absorption_per_m": float,
    "noise_power_w": float,
    "total_power_w": float,
    "min_rate": float,
    "path_comp": float,
    "architecture": str,
    "element_spacing_m": float,
    "p_rf_w": float,
    "p_ps_w": float,
    "p_bb_w": float,
}

_SCENARIO_KEYS = {
    "bs_irs_distance_m": float,
    "eve_distance_m": float,
    "cluster_distance_m": float,
    "user_disc_radius_m": float,
    "bs_aod_rad": float,
    "irs_aoa_rad": float,
    "eve_angle_rad": float,
    "seed": int,
}

_SOLVER_KEYS = {f.name: type(f.default) for f in fields(SolverSettings)}

_REQUIRED_SYSTEM = ("total_power_w",)


def _parse_section(section, known: dict, label: str) -> dict:
    out = {}
    for key in section:
        if key not in known:
            raise ConfigError(f"unknown key '{key}' in [{label}]")
        raw = section[key]
        typ = known[key]
        try:
            if typ is int:
                out[key] = int(raw)
            elif typ is float:
                out[key] = float(raw)
            else:
                out[key] = raw.strip()
        except ValueError as exc:
            raise ConfigError(
                f"bad value for '{key}' in [{label}]: {raw!r}") from exc
    return out


def load_config(text: str) -> tuple[SystemConfig, Scenario, SolverSettings]:
    """Parse a config document and realize its scenario.

    Raises ConfigError naming the offending key on unknown keys, bad values,
    missing required keys, or inconsistent combinations.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable document: {exc}") from exc

    for sect in parser.sections():
        if sect not in ("system", "scenario", "solver"):
            raise ConfigError(f"unknown section [{sect}]")

    sys_kw = _parse_section(
        parser["system"] if parser.has_section("system") else {},
        _SYSTEM_KEYS, "system")
    for req in _REQUIRED_SYSTEM:
        if req not in sys_kw:
            raise ConfigError(f"missing required key '{req}' in [system]")
    cfg = SystemConfig(**sys_kw)

    scn_kw = _parse_section(
        parser["scenario"] if parser.has_section("scenario") else {},
        _SCENARIO_KEYS, "scenario")
    geom = GeometrySpec(**scn_kw)

    sol_kw = _parse_section(
        parser["solver"] if parser.has_section("solver") else {},
        _SOLVER_KEYS, "solver")
    settings = SolverSettings(**sol_kw)

    scenario = generate_scenario(cfg, geom)
    return cfg, scenario, settings


def load_config_file(path: str) -> tuple[SystemConfig, Scenario,
                                         SolverSettings]:
    with open(path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())


def emit_config(cfg: SystemConfig, geom: GeometrySpec,
                settings: SolverSettings) -> str:
    """Render records back to canonical document text.

    load(emit(load(x))) == load(x): emission writes the geometry knobs and
    seed, not the realized placement, and regeneration is deterministic.
    """
    def fmt(v) -> str:
        if isinstance(v, float):
            return repr(v)  # shortest exact form: reload is bit-identical
        return str(v)

    lines = ["[system]"]
    sys_items = [
        ("n_tx", cfg.n_tx), ("n_irs", cfg.n_irs), ("n_rf", cfg.n_rf),
        ("users_per_cluster", cfg.users_per_cluster),
        ("carrier_freq_hz", cfg.carrier_freq_hz),
        ("quant_bits", cfg.quant_bits), ("tx_gain", cfg.tx_gain),
        ("rx_gain_db", cfg.rx_gain_db),
        ("absorption_per_m", cfg.absorption_per_m),
        ("noise_power_w", cfg.noise_power_w),
        ("total_power_w", cfg.total_power_w),
        ("min_rate", cfg.min_rate), ("path_comp", cfg.path_comp),
        ("architecture", cfg.architecture),
        ("element_spacing_m", cfg.element_spacing_m),
        ("p_rf_w", cfg.p_rf_w), ("p_ps_w", cfg.p_ps_w),
        ("p_bb_w", cfg.p_bb_w),
    ]
    if cfg.n_users is not None:
        sys_items.insert(4, ("n_users", cfg.n_users))
    lines += [f"{k} = {fmt(v)}" for k, v in sys_items]

    lines.append("")
    lines.append("[scenario]")
    for f in fields(GeometrySpec):
        v = getattr(geom, f.name)
        if isinstance(v, float) and math.isnan(v):
            continue
        lines.append(f"{f.name} = {fmt(v)}")

    lines.append("")
    lines.append("[solver]")
    for f in fields(SolverSettings):
        lines.append(f"{f.name} = {fmt(getattr(settings, f.name))}")
    lines.append("")
    return "\n".join(lines)
