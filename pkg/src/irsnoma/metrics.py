"""Rate and efficiency metrics.

Users decode with intra-cluster successive interference cancellation: within
a cluster sorted strongest-first, user m suffers interference only from the
stronger users 1..m-1 plus all other clusters' full power. The eavesdropper
cancels nothing. Secrecy rates are reported unclamped (the per-user
difference may be negative); a clamped view is carried alongside for
readability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .clustering import ClusterAssignment
from .config import ARCH_FC, SystemConfig
from .precoding import PrecoderSet

LN2 = float(np.log(2.0))


@dataclass
class PowerAllocation:
    """Per-user transmit powers, aligned with the decoding order.

    values[l][m] is the power of the m-th strongest user of cluster l.
    """

    values: list[np.ndarray]

    @classmethod
    def from_vector(cls, x: np.ndarray,
                    sizes: tuple[int, ...]) -> "PowerAllocation":
        out, k = [], 0
        for s in sizes:
            out.append(np.asarray(x[k:k + s], dtype=float).copy())
            k += s
        return cls(out)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(v, dtype=float)
                               for v in self.values])

    def total(self) -> float:
        return float(sum(np.sum(v) for v in self.values))

    def cluster_total(self, l: int) -> float:
        return float(np.sum(self.values[l]))

    def copy(self) -> "PowerAllocation":
        return PowerAllocation([v.copy() for v in self.values])


@dataclass(frozen=True)
class EffectiveGains:
    """Squared beam gains after precoding at a fixed reflection state.

    user_gain[u, i] = |G_u F v_i|^2 for flat user u and beam i;
    eve_gain[i] = |G_E F v_i|^2. Cluster structure comes from the
    assignment whose order the power table follows.
    """

    user_gain: np.ndarray
    eve_gain: np.ndarray
    members: tuple[tuple[int, ...], ...]
    noise: float

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(m) for m in self.members)


def effective_gains(channels: ChannelSet, precoders: PrecoderSet,
                    t: np.ndarray, assignment: ClusterAssignment,
                    noise: float) -> EffectiveGains:
    """Evaluate all |G_u F v_i|^2 and the eavesdropper row at state t."""
    fv = precoders.f @ precoders.v                      # (n_tx, L)
    rows = channels.beta[:, None] * (
        (channels.g_rows * t[None, :]) @ channels.h_bar)  # (M, n_tx)
    user_gain = np.abs(rows @ fv) ** 2
    eve_row = channels.cascade_eve(t)
    eve_gain = np.abs(eve_row @ fv) ** 2
    return EffectiveGains(user_gain=user_gain, eve_gain=eve_gain,
                          members=assignment.members, noise=noise)


def sinr_user(gains: EffectiveGains, p: PowerAllocation, l: int,
              m: int) -> float:
    """Post-SIC SINR of the m-th strongest user of cluster l (0-based)."""
    u = gains.members[l][m]
    own = gains.user_gain[u, l]
    signal = own * p.values[l][m]
    intra = own * float(np.sum(p.values[l][:m]))
    inter = sum(gains.user_gain[u, i] * p.cluster_total(i)
                for i in range(len(gains.members)) if i != l)
    return signal / (intra + inter + gains.noise)


def sinr_eve(gains: EffectiveGains, p: PowerAllocation, l: int,
             m: int) -> float:
    """Eavesdropper SINR on the (l, m) message; no cancellation."""
    own = gains.eve_gain[l]
    signal = own * p.values[l][m]
    intra = own * (p.cluster_total(l) - p.values[l][m])
    inter = sum(gains.eve_gain[i] * p.cluster_total(i)
                for i in range(len(gains.members)) if i != l)
    return signal / (intra + inter + gains.noise)


@dataclass(frozen=True)
class RateReport:
    """Per-user and aggregate rates at one operating point."""

    user_rate: tuple[tuple[float, ...], ...]
    eve_rate: tuple[tuple[float, ...], ...]
    secrecy: tuple[tuple[float, ...], ...]          # unclamped
    secrecy_clamped: tuple[tuple[float, ...], ...]  # max(., 0) view
    sum_secrecy: float
    sum_rate: float
    see: float
    total_power: float
    min_user_rate: float


def power_overhead(cfg: SystemConfig) -> float:
    """Static circuit power: RF chains, phase shifters, baseband."""
    n_ps = cfg.n_tx * cfg.n_rf if cfg.architecture == ARCH_FC else cfg.n_tx
    return cfg.p_rf_w * cfg.n_rf + cfg.p_ps_w * n_ps + cfg.p_bb_w


def secrecy_efficiency(sum_secrecy: float, total_power: float,
                       cfg: SystemConfig) -> float:
    """Sum secrecy rate per watt of transmit plus circuit power."""
    return sum_secrecy / (total_power + power_overhead(cfg))


def secrecy_report(gains: EffectiveGains, p: PowerAllocation,
                   cfg: SystemConfig) -> RateReport:
    """Assemble all per-user rates and the aggregate figures."""
    user_r, eve_r, sec, sec_cl = [], [], [], []
    for l, grp in enumerate(gains.members):
        ur, er, sc, scl = [], [], [], []
        for m in range(len(grp)):
            gu = np.log2(1.0 + sinr_user(gains, p, l, m))
            ge = np.log2(1.0 + sinr_eve(gains, p, l, m))
            ur.append(float(gu))
            er.append(float(ge))
            sc.append(float(gu - ge))
            scl.append(float(max(gu - ge, 0.0)))
        user_r.append(tuple(ur))
        eve_r.append(tuple(er))
        sec.append(tuple(sc))
        sec_cl.append(tuple(scl))
    total = p.total()
    ssum = float(sum(sum(row) for row in sec))
    rsum = float(sum(sum(row) for row in user_r))
    min_rate = float(min((min(row) for row in user_r if row), default=0.0))
    return RateReport(
        user_rate=tuple(tuple(r) for r in user_r),
        eve_rate=tuple(tuple(r) for r in eve_r),
        secrecy=tuple(tuple(r) for r in sec),
        secrecy_clamped=tuple(tuple(r) for r in sec_cl),
        sum_secrecy=ssum,
        sum_rate=rsum,
        see=secrecy_efficiency(ssum, total, cfg),
        total_power=total,
        min_user_rate=min_rate,
    )


def sum_secrecy(gains: EffectiveGains, p: PowerAllocation) -> float:
    """Aggregate secrecy rate without building the full report."""
    out = 0.0
    for l, grp in enumerate(gains.members):
        for m in range(len(grp)):
            out += np.log2(1.0 + sinr_user(gains, p, l, m))
            out -= np.log2(1.0 + sinr_eve(gains, p, l, m))
    return float(out)


def oma_report(gains: EffectiveGains, p: PowerAllocation,
               cfg: SystemConfig) -> RateReport:
    """Re-score an operating point under orthogonal time sharing.

    Each cluster serves its users in equal time fractions: rates scale by
    1/|cluster| and intra-cluster interference disappears for both the user
    and the eavesdropper; other clusters still interfere at full power.
    """
    user_r, eve_r, sec, sec_cl = [], [], [], []
    for l, grp in enumerate(gains.members):
        share = 1.0 / len(grp) if grp else 0.0
        ur, er, sc, scl = [], [], [], []
        for m, u in enumerate(grp):
            inter = sum(gains.user_gain[u, i] * p.cluster_total(i)
                        for i in range(len(gains.members)) if i != l)
            gu = share * np.log2(
                1.0 + gains.user_gain[u, l] * p.values[l][m]
                / (inter + gains.noise))
            inter_e = sum(gains.eve_gain[i] * p.cluster_total(i)
                          for i in range(len(gains.members)) if i != l)
            ge = share * np.log2(
                1.0 + gains.eve_gain[l] * p.values[l][m]
                / (inter_e + gains.noise))
            ur.append(float(gu))
            er.append(float(ge))
            sc.append(float(gu - ge))
            scl.append(float(max(gu - ge, 0.0)))
        user_r.append(tuple(ur))
        eve_r.append(tuple(er))
        sec.append(tuple(sc))
        sec_cl.append(tuple(scl))
    total = p.total()
    ssum = float(sum(sum(row) for row in sec))
    rsum = float(sum(sum(row) for row in user_r))
    min_rate = float(min((min(row) for row in user_r if row), default=0.0))
    return RateReport(
        user_rate=tuple(tuple(r) for r in user_r),
        eve_rate=tuple(tuple(r) for r in eve_r),
        secrecy=tuple(tuple(r) for r in sec),
        secrecy_clamped=tuple(tuple(r) for r in sec_cl),
        sum_secrecy=ssum,
        sum_rate=rsum,
        see=secrecy_efficiency(ssum, total, cfg),
        total_power=total,
        min_user_rate=min_rate,
    )
