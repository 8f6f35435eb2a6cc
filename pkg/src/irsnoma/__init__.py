"""Secrecy-rate optimization toolkit for an IRS-assisted THz NOMA downlink."""

from .ao import Solution, initial_reflection, random_irs_baseline, run_ao
from .channel import ChannelSet, build_channels
from .clustering import ClusterAssignment, cluster_users, refresh_order
from .config import (
    ARCH_FC,
    ARCH_SC,
    C_LIGHT,
    ConfigError,
    GeometrySpec,
    Scenario,
    SolverSettings,
    SystemConfig,
    emit_config,
    generate_scenario,
    load_config,
    load_config_file,
)
from .experiments import (
    SCHEME_OMA,
    SCHEME_OPT,
    SCHEME_RANDOM_IRS,
    SweepResult,
    SweepSpec,
    convergence_rows,
    emit_plot_data,
    run_sweep,
    write_csv,
)
from .metrics import (
    EffectiveGains,
    PowerAllocation,
    RateReport,
    effective_gains,
    oma_report,
    secrecy_report,
    sum_secrecy,
)
from .phase_opt import build_lifted, gaussian_randomize, solve_phase
from .power_alloc import solve_power
from .precoding import PrecoderSet, build_precoders

__version__ = "0.1.0"
