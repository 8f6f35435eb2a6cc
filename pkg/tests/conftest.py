"""Shared builders for synthetic test fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from irsnoma.channel import ChannelSet, steering
from irsnoma.config import SolverSettings


def toy_channels(g_rows: np.ndarray, beta: np.ndarray,
                 g_eve: np.ndarray | None = None,
                 beta_eve: float = 1.0, n_tx: int = 4,
                 layout: tuple[tuple[int, ...], ...] | None = None,
                 psi_tx: float = 0.3, psi_irs: float = -0.2) -> ChannelSet:
    """ChannelSet with prescribed IRS-side rows and amplitudes."""
    g_rows = np.atleast_2d(np.asarray(g_rows, dtype=complex))
    m, n_irs = g_rows.shape
    a_tx = steering(n_tx, psi_tx)
    a_irs = steering(n_irs, psi_irs)
    if g_eve is None:
        g_eve = steering(n_irs, 0.77)
    if layout is None:
        layout = (tuple(range(m)),)
    return ChannelSet(
        h_bar=np.outer(a_irs, a_tx.conj()),
        a_tx=a_tx,
        a_irs=a_irs,
        g_rows=g_rows,
        beta=np.asarray(beta, dtype=float),
        g_eve=np.asarray(g_eve, dtype=complex),
        beta_eve=float(beta_eve),
        layout=layout,
    )


@pytest.fixture
def tight_settings() -> SolverSettings:
    """Solver settings tightened for small closed-form comparisons."""
    return SolverSettings(rel_tol=1e-10, sdp_tol=1e-7, pgd_max_iter=2000,
                          projection_tol=1e-11, projection_max_iter=1500)
