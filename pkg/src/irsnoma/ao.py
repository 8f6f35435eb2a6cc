"""Alternating optimization of transmit powers and reflection phases.

One outer round solves the power subproblem at the current reflection
state, then proposes a new reflection vector (relaxation, randomization,
precoder rebuild, decoding-order refresh). The proposal is accepted only
if it does not decrease the true objective at the current powers and, when
a rate floor is set, keeps every user above it; rejected proposals leave
the previous state in place. The recorded per-round objective is therefore
literally non-decreasing.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, build_channels
from .clustering import ClusterAssignment, cluster_users, refresh_order
from .config import Scenario, SolverSettings, SystemConfig
from .metrics import (EffectiveGains, PowerAllocation, RateReport,
                      effective_gains, secrecy_report, sinr_user,
                      sum_secrecy)
from .phase_opt import build_lifted, gaussian_randomize, solve_phase
from .power_alloc import solve_power
from .precoding import PrecoderSet, build_precoders


def initial_reflection(n_irs: int, init: str = "identity") -> np.ndarray:
    """Parse a reflection-state init spec.

    "identity" gives all-ones phases; "random:<seed>" draws seeded uniform
    phases. Anything else raises ValueError.
    """
    if init == "identity":
        return np.ones(n_irs, dtype=complex)
    if init.startswith("random:"):
        tail = init.split(":", 1)[1]
        try:
            seed = int(tail)
        except ValueError:
            raise ValueError(f"bad reflection init seed {tail!r}") from None
        rng = np.random.default_rng(seed)
        return np.exp(2j * math.pi * rng.uniform(0.0, 1.0, n_irs))
    raise ValueError(
        f"reflection init must be 'identity' or 'random:<seed>', "
        f"got {init!r}")


@dataclass(frozen=True)
class Solution:
    """Final operating point of one alternating-optimization run."""

    p: PowerAllocation
    t: np.ndarray                  # reflection coefficients, |t_n| = 1
    precoders: PrecoderSet
    assignment: ClusterAssignment
    gains: EffectiveGains
    report: RateReport
    trace: tuple[float, ...]       # objective after each outer round
    converged: bool
    outer_iters: int
    power_iters: int               # SCA rounds spent in the power step
    phase_iters: int               # SCA rounds spent in the phase step
    phase_accepts: int             # reflection proposals that passed the gate
    wall_ms: float

    @property
    def value(self) -> float:
        return self.trace[-1]


def _operating_state(channels: ChannelSet, assignment: ClusterAssignment,
                     t: np.ndarray, cfg: SystemConfig,
                     settings: SolverSettings,
                     analog: np.ndarray | None = None,
                     ) -> tuple[PrecoderSet, ClusterAssignment,
                                EffectiveGains]:
    """Precoders, refreshed decoding order, and gains at reflection t."""
    pre = build_precoders(channels, assignment, t, cfg,
                          cond_limit=settings.zf_cond_limit, analog=analog)
    raw = effective_gains(channels, pre, t, assignment, cfg.noise_power_w)
    own = np.empty(channels.n_users)
    for l, grp in enumerate(assignment.members):
        for u in grp:
            own[u] = raw.user_gain[u, l]
    order = refresh_order(assignment, own)
    gains = EffectiveGains(user_gain=raw.user_gain, eve_gain=raw.eve_gain,
                           members=order.members, noise=raw.noise)
    return pre, order, gains


def _worst_rate(gains: EffectiveGains, p: PowerAllocation) -> float:
    return min(
        math.log2(1.0 + sinr_user(gains, p, l, m))
        for l, grp in enumerate(gains.members) for m in range(len(grp)))


def run_ao(cfg: SystemConfig, scenario: Scenario,
           settings: SolverSettings, *,
           channels: ChannelSet | None = None,
           init: str = "identity",
           phase_seed: int = 0,
           optimize_phase: bool = True,
           freeze_analog: bool = False) -> Solution:
    """Alternate power and reflection updates until relative improvement
    falls below settings.rel_tol or settings.outer_max rounds elapse.

    Deterministic given (cfg, scenario, settings, init, phase_seed). With
    optimize_phase False the reflection state stays at its init value and
    the run degenerates to the power-only baseline. freeze_analog pins the
    analog stage built at the init state; only the digital stage follows
    later reflection updates. Raises InfeasiblePolytope when the rate
    floors cannot be met at the initial state (the exception carries the
    violated rows and residual).
    """
    start = time.perf_counter()
    if channels is None:
        channels = build_channels(cfg, scenario)
    t = initial_reflection(channels.n_irs, init)
    assignment = cluster_users(channels, cfg.n_clusters)
    pre, assignment, gains = _operating_state(
        channels, assignment, t, cfg, settings)
    frozen = pre.f if freeze_analog else None

    p: PowerAllocation | None = None
    trace: list[float] = []
    converged = False
    power_iters = 0
    phase_iters = 0
    phase_accepts = 0
    for _ in range(settings.outer_max):
        pres = solve_power(gains, cfg, settings, p_init=p)
        p = pres.p
        power_iters += pres.iterations
        val = sum_secrecy(gains, p)

        if optimize_phase:
            cache = build_lifted(channels, pre, assignment, p,
                                 cfg.noise_power_w)
            theta = np.conj(t)
            phres = solve_phase(
                cache, cfg, settings,
                phi_init=np.outer(theta, theta.conj()),
                multistart_seed=phase_seed + 101 * len(trace))
            phase_iters += phres.iterations
            rand = gaussian_randomize(
                phres.phi, cache, p, settings.randomization_count,
                seed=phase_seed + 1000003 * (len(trace) + 1),
                min_rate=cfg.min_rate)
            pre_c, asg_c, gains_c = _operating_state(
                channels, assignment, rand.t, cfg, settings, analog=frozen)
            val_c = sum_secrecy(gains_c, p)
            qos_ok = (cfg.min_rate <= 0.0
                      or _worst_rate(gains_c, p) >= cfg.min_rate - 1e-9)
            if val_c >= val and qos_ok:
                t, pre, assignment, gains, val = \
                    rand.t, pre_c, asg_c, gains_c, val_c
                phase_accepts += 1

        trace.append(val)
        if len(trace) >= 2:
            gain = trace[-1] - trace[-2]
            if gain < settings.rel_tol * max(1.0, abs(trace[-2])):
                converged = True
                break

    report = secrecy_report(gains, p, cfg)
    wall_ms = (time.perf_counter() - start) * 1e3
    return Solution(p=p, t=t, precoders=pre, assignment=assignment,
                    gains=gains, report=report, trace=tuple(trace),
                    converged=converged, outer_iters=len(trace),
                    power_iters=power_iters, phase_iters=phase_iters,
                    phase_accepts=phase_accepts, wall_ms=wall_ms)


def random_irs_baseline(cfg: SystemConfig, scenario: Scenario,
                        settings: SolverSettings, *,
                        channels: ChannelSet | None = None,
                        seed: int = 0) -> Solution:
    """Power-only benchmark: seeded random reflection phases held fixed."""
    return run_ao(cfg, scenario, settings, channels=channels,
                  init=f"random:{seed}", optimize_phase=False)
