"""Line-of-sight THz channel construction.

Spherical-spreading path gain with molecular absorption, uniform-linear-array
steering vectors, and the cascaded BS -> IRS -> receiver channels. The
BS-to-IRS link is a single path, so the bounce matrix has rank one and every
cascaded row is a scalar multiple of the transmit steering vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import C_LIGHT, Scenario, SystemConfig


def path_loss(freq_hz: float, distance_m: float,
              absorption_per_m: float) -> float:
    """Amplitude gain of a THz line-of-sight link.

    q(f, d) = c / (4 pi f d) * exp(-tau d / 2). Monotone decreasing in each
    argument for positive inputs.
    """
    if freq_hz <= 0 or distance_m <= 0:
        raise ValueError("freq_hz and distance_m must be positive")
    if absorption_per_m < 0:
        raise ValueError("absorption_per_m must be >= 0")
    spread = C_LIGHT / (4.0 * math.pi * freq_hz * distance_m)
    return spread * math.exp(-absorption_per_m * distance_m / 2.0)


def spatial_frequency(angle_rad: float, freq_hz: float,
                      spacing_m: float) -> float:
    """psi = 2 d0 f sin(angle) / c; equals sin(angle) at half-wavelength."""
    return 2.0 * spacing_m * freq_hz * math.sin(angle_rad) / C_LIGHT


def steering(n: int, psi: float) -> np.ndarray:
    """Unit-norm ULA steering vector, element k = exp(j pi k psi) / sqrt(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n)
    return np.exp(1j * math.pi * k * psi) / math.sqrt(n)


@dataclass(frozen=True)
class ChannelSet:
    """All channel pieces for one realized scenario.

    g_rows[u] is the unit-norm IRS-side steering row of flat user u and
    beta[u] the cascade amplitude eta*Gt*Gr*q(f,d_bs_irs)*q(f,d_u). The
    cascaded row at reflection state t (diagonal of the reflection matrix) is

        G_u = beta[u] * (g_rows[u] * t) @ h_bar.

    layout groups flat user ids by the scenario cluster they were drawn
    around; the clustering stage may regroup them later.
    """

    h_bar: np.ndarray          # (n_irs, n_tx) rank-1 bounce matrix
    a_tx: np.ndarray           # (n_tx,) BS departure steering
    a_irs: np.ndarray          # (n_irs,) IRS arrival steering
    g_rows: np.ndarray         # (n_users, n_irs)
    beta: np.ndarray           # (n_users,)
    g_eve: np.ndarray          # (n_irs,)
    beta_eve: float
    layout: tuple[tuple[int, ...], ...]

    @property
    def n_users(self) -> int:
        return self.g_rows.shape[0]

    @property
    def n_irs(self) -> int:
        return self.h_bar.shape[0]

    @property
    def n_tx(self) -> int:
        return self.h_bar.shape[1]

    def cascade(self, u: int, t: np.ndarray) -> np.ndarray:
        """Composite 1 x n_tx row of user u at reflection diagonal t."""
        return self.beta[u] * ((self.g_rows[u] * t) @ self.h_bar)

    def cascade_eve(self, t: np.ndarray) -> np.ndarray:
        return self.beta_eve * ((self.g_eve * t) @ self.h_bar)


def build_channels(cfg: SystemConfig, scenario: Scenario) -> ChannelSet:
    """Assemble steering rows, bounce matrix, and cascade amplitudes."""
    f = cfg.carrier_freq_hz
    d0 = cfg.element_spacing_m
    tau = cfg.absorption_per_m

    psi_tx = spatial_frequency(scenario.bs_aod, f, d0)
    psi_irs = spatial_frequency(scenario.irs_aoa, f, d0)
    a_tx = steering(cfg.n_tx, psi_tx)
    a_irs = steering(cfg.n_irs, psi_irs)
    h_bar = np.outer(a_irs, a_tx.conj())

    q_bs = path_loss(f, scenario.d_bs_irs, tau)
    amp = cfg.path_comp * cfg.tx_gain * cfg.rx_gain * q_bs

    rows = []
    betas = []
    layout = []
    uid = 0
    for dists, angles in zip(scenario.user_distances, scenario.user_angles):
        ids = []
        for d, ang in zip(dists, angles):
            rows.append(steering(cfg.n_irs, spatial_frequency(ang, f, d0)))
            betas.append(amp * path_loss(f, d, tau))
            ids.append(uid)
            uid += 1
        layout.append(tuple(ids))

    g_eve = steering(cfg.n_irs, spatial_frequency(scenario.eve_angle, f, d0))
    beta_eve = amp * path_loss(f, scenario.d_eve, tau)

    return ChannelSet(
        h_bar=h_bar,
        a_tx=a_tx,
        a_irs=a_irs,
        g_rows=np.array(rows),
        beta=np.array(betas),
        g_eve=g_eve,
        beta_eve=float(beta_eve),
        layout=tuple(layout),
    )
