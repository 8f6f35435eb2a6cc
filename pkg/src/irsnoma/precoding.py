"""Hybrid analog/digital precoding.

The analog stage co-phases each RF chain toward its cluster head through
B-bit quantized phase shifters; fully-connected chains use the whole array,
sub-connected chains own one disjoint sub-array each. The digital stage
zero-forces across cluster heads and is re-normalized so every composite
beam F v_l has unit power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .clustering import ClusterAssignment
from .config import ARCH_FC, ARCH_SC, SystemConfig


class SingularEquivalentChannel(ValueError):
    """Effective head matrix is rank deficient; exact zero-forcing fails."""


def quantize_phase(angle: float, bits: int) -> int:
    """Index of the closest point of the 2^bits uniform phase grid.

    Distance is circular; exact ties resolve to the smaller index.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    n = 1 << bits
    step = 2.0 * math.pi / n
    a = math.fmod(angle, 2.0 * math.pi)
    if a < 0.0:
        a += 2.0 * math.pi
    i0 = int(a // step) % n
    frac = a - i0 * step
    i1 = (i0 + 1) % n
    if frac < step / 2.0:
        return i0
    if frac > step / 2.0:
        return i1
    return min(i0, i1)


def _quantized_codeword(target_phases: np.ndarray, bits: int) -> np.ndarray:
    """Unit-modulus entries on the quantized grid nearest target_phases."""
    step = 2.0 * math.pi / (1 << bits)
    idx = np.array([quantize_phase(a, bits) for a in target_phases])
    return np.exp(1j * step * idx)


@dataclass(frozen=True)
class PrecoderSet:
    """Analog matrix F (n_tx x n_rf), digital matrix V (n_rf x L), flags."""

    f: np.ndarray
    v: np.ndarray
    architecture: str
    regularized: bool = False

    @property
    def n_phase_shifters(self) -> int:
        if self.architecture == ARCH_FC:
            return self.f.shape[0] * self.f.shape[1]
        return self.f.shape[0]

    def beam(self, l: int) -> np.ndarray:
        """Composite transmit beam F v_l."""
        return self.f @ self.v[:, l]


def analog_precoder(head_rows: np.ndarray, architecture: str,
                    bits: int) -> np.ndarray:
    """Build F from the cluster heads' composite channel rows.

    head_rows is (L, n_tx); column l co-phases head l: per-antenna target
    phase is the conjugate of the channel phase, quantized to B bits.
    Fully-connected entries have magnitude 1/sqrt(n_tx); sub-connected
    columns live on disjoint blocks of n_tx/L antennas with magnitude
    1/sqrt(n_tx/L) and zeros elsewhere.
    """
    l_count, n_tx = head_rows.shape
    targets = -np.angle(head_rows)  # conjugate phase maximizes |g F|
    if architecture == ARCH_FC:
        f = np.empty((n_tx, l_count), dtype=complex)
        for l in range(l_count):
            f[:, l] = _quantized_codeword(targets[l], bits) / math.sqrt(n_tx)
        return f
    if architecture == ARCH_SC:
        if n_tx % l_count != 0:
            raise ValueError("sub-connected array needs n_tx % L == 0")
        n_sf = n_tx // l_count
        f = np.zeros((n_tx, l_count), dtype=complex)
        for l in range(l_count):
            sl = slice(l * n_sf, (l + 1) * n_sf)
            f[sl, l] = _quantized_codeword(targets[l, sl],
                                           bits) / math.sqrt(n_sf)
        return f
    raise ValueError(f"unknown architecture {architecture!r}")


def zf_digital(g_eff: np.ndarray, cond_limit: float = 1e10) -> np.ndarray:
    """Zero-forcing digital precoder for the stacked head matrix.

    g_eff is L x L with column l the conjugated effective row of head l,
    i.e. (h_l F)^H, so the returned V = g_eff (g_eff^H g_eff)^{-1} satisfies
    g_eff^H V = I and beam i vanishes at every head l != i. Computed via a
    linear solve, never an explicit inverse. Raises
    SingularEquivalentChannel naming the most colinear column pair when the
    condition number exceeds cond_limit.
    """
    l_count = g_eff.shape[0]
    if g_eff.shape != (l_count, l_count):
        raise ValueError("g_eff must be square (one column per head)")
    cond = np.linalg.cond(g_eff)
    if not np.isfinite(cond) or cond > cond_limit:
        worst, score = (0, 1), -1.0
        for i in range(l_count):
            for j in range(i + 1, l_count):
                ni = np.linalg.norm(g_eff[:, i])
                nj = np.linalg.norm(g_eff[:, j])
                c = abs(np.vdot(g_eff[:, i], g_eff[:, j])) / max(ni * nj,
                                                                 1e-300)
                if c > score:
                    worst, score = (i, j), c
        raise SingularEquivalentChannel(
            f"effective head matrix is ill conditioned (cond={cond:.3e}); "
            f"most colinear cluster pair: {worst[0]} and {worst[1]} "
            f"(correlation {score:.6f})")
    gram = g_eff.conj().T @ g_eff
    return np.linalg.solve(gram.conj().T, g_eff.conj().T).conj().T


def _ridge_digital(g_eff: np.ndarray) -> np.ndarray:
    """Tikhonov-regularized stand-in when exact zero-forcing is singular."""
    l_count = g_eff.shape[0]
    gram = g_eff.conj().T @ g_eff
    lam = float(np.trace(gram).real) / l_count * 1e-10 + 1e-300
    return np.linalg.solve((gram + lam * np.eye(l_count)).conj().T,
                           g_eff.conj().T).conj().T


def normalize_beams(f: np.ndarray, v_bar: np.ndarray) -> np.ndarray:
    """Scale each digital column so the composite beam has unit norm."""
    v = v_bar.copy()
    for l in range(v.shape[1]):
        scale = np.linalg.norm(f @ v_bar[:, l])
        if scale == 0:
            raise ValueError(f"beam {l} has zero norm; cannot normalize")
        v[:, l] = v_bar[:, l] / scale
    return v


def build_precoders(channels: ChannelSet, assignment: ClusterAssignment,
                    t: np.ndarray, cfg: SystemConfig,
                    cond_limit: float = 1e10,
                    analog: np.ndarray | None = None) -> PrecoderSet:
    """Full pipeline at reflection state t: analog from head cascades, then
    zero-forcing digital with unit-power beams.

    Passing analog reuses that analog stage verbatim (frozen-analog mode)
    and only the digital stage is recomputed.

    The rank-1 bounce makes the physical head matrix singular, so exact
    zero-forcing is unattainable at generated scenarios; in that case the
    digital stage falls back to a deterministic ridge solve and the result
    is flagged regularized.
    """
    assignment.require_nonempty()
    head_rows = np.array([channels.cascade(h, t) for h in assignment.heads])
    if analog is not None:
        f = np.asarray(analog, dtype=complex)
    else:
        f = analog_precoder(head_rows, cfg.architecture, cfg.quant_bits)
    eff = head_rows @ f                     # row l = h_l F
    g_stack = eff.conj().T                  # column l = (h_l F)^H
    regularized = False
    try:
        v_bar = zf_digital(g_stack, cond_limit)
    except SingularEquivalentChannel:
        v_bar = _ridge_digital(g_stack)
        regularized = True
    v = normalize_beams(f, v_bar)
    return PrecoderSet(f=f, v=v, architecture=cfg.architecture,
                       regularized=regularized)
