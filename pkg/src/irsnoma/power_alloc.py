"""Power allocation at fixed precoding and reflection state.

The sum secrecy rate is a difference of concave logs in the power vector.
Each outer step keeps the concave terms (signal-plus-interference at the
user, residual interference at the eavesdropper), replaces the two convex
terms with their first-order Taylor majorants at the expansion point, and
maximizes the resulting concave surrogate over the power polytope. The
surrogate is tight at the expansion point and a global minorant, so the
true objective never decreases across iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SolverSettings, SystemConfig
from .convex_core import PolytopeProblem, feasible_point, solve_polytope
from .metrics import EffectiveGains, PowerAllocation

LN2 = math.log(2.0)


class MonotonicityError(RuntimeError):
    """A surrogate step decreased the true objective: indicates a bug."""


@dataclass(frozen=True)
class SurrogateModel:
    """Affine forms of the four log arguments plus the frozen linearization.

    Powers are flattened cluster by cluster in decoding order (slot k).
    For slot k of cluster l: a_rows/b_rows give signal-plus-interference
    and interference at the user, d_rows the eavesdropper's residual
    interference; c_row (shared by all slots) is the eavesdropper's total
    received power. Each evaluates as row @ p + noise.
    """

    a_rows: np.ndarray          # (K, K)
    b_rows: np.ndarray          # (K, K)
    c_row: np.ndarray           # (K,)
    d_rows: np.ndarray          # (K, K)
    own: np.ndarray             # (K,) slot's gain on its serving beam
    noise: float
    sizes: tuple[int, ...]
    p_bar: np.ndarray           # (K,) expansion point
    b_bar: np.ndarray           # (K,) interference values at p_bar
    c_bar: float                # eavesdropper total at p_bar
    lin_grad: np.ndarray        # (K,) gradient of the linearized terms
    lin_base: float             # their value at p_bar

    @property
    def n_slots(self) -> int:
        return self.p_bar.shape[0]

    def objective(self, p: np.ndarray) -> tuple[float, np.ndarray]:
        """Concave surrogate value and gradient (natural maximization)."""
        a = self.a_rows @ p + self.noise
        d = self.d_rows @ p + self.noise
        val = (float(np.sum(np.log2(a)) + np.sum(np.log2(d)))
               - self.lin_base - float(self.lin_grad @ (p - self.p_bar)))
        grad = (self.a_rows.T @ (1.0 / (a * LN2))
                + self.d_rows.T @ (1.0 / (d * LN2)) - self.lin_grad)
        return val, grad

    def true_value(self, p: np.ndarray) -> float:
        """Exact sum secrecy rate at p (matches the metrics module)."""
        a = self.a_rows @ p + self.noise
        b = self.b_rows @ p + self.noise
        c = float(self.c_row @ p) + self.noise
        d = self.d_rows @ p + self.noise
        return float(np.sum(np.log2(a)) - np.sum(np.log2(b))
                     - self.n_slots * math.log2(c) + np.sum(np.log2(d)))


def _slot_tables(gains: EffectiveGains) -> tuple[np.ndarray, np.ndarray,
                                                 np.ndarray]:
    """Per-slot gain table (K, L), slot->cluster map, own-beam gains."""
    sizes = gains.sizes
    n_clusters = len(sizes)
    k_total = int(sum(sizes))
    table = np.zeros((k_total, n_clusters))
    cluster_of = np.zeros(k_total, dtype=int)
    k = 0
    for l, grp in enumerate(gains.members):
        for u in grp:
            table[k] = gains.user_gain[u]
            cluster_of[k] = l
            k += 1
    own = table[np.arange(k_total), cluster_of]
    return table, cluster_of, own


def build_surrogate(gains: EffectiveGains,
                    p_bar: PowerAllocation | np.ndarray) -> SurrogateModel:
    """Assemble the four affine forms and freeze the linearization at p_bar."""
    if isinstance(p_bar, PowerAllocation):
        p_vec = p_bar.as_vector()
    else:
        p_vec = np.asarray(p_bar, dtype=float).copy()
    table, cluster_of, own = _slot_tables(gains)
    k_total = table.shape[0]
    sizes = gains.sizes
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    b_rows = np.zeros((k_total, k_total))
    for k in range(k_total):
        l = cluster_of[k]
        m = k - offsets[l]
        # stronger users of the same cluster, at the slot's own beam gain
        b_rows[k, offsets[l]:offsets[l] + m] = own[k]
        # every other cluster at full power through its beam
        for i in range(len(sizes)):
            if i != l:
                b_rows[k, offsets[i]:offsets[i + 1]] = table[k, i]
    a_rows = b_rows.copy()
    a_rows[np.arange(k_total), np.arange(k_total)] += own

    eve = np.asarray(gains.eve_gain, dtype=float)
    c_row = np.concatenate([np.full(s, eve[i]) for i, s in enumerate(sizes)])
    d_rows = np.tile(c_row, (k_total, 1))
    d_rows[np.arange(k_total), np.arange(k_total)] = 0.0

    noise = gains.noise
    b_bar = b_rows @ p_vec + noise
    c_bar = float(c_row @ p_vec) + noise
    lin_grad = (b_rows.T @ (1.0 / (b_bar * LN2))
                + k_total * c_row / (c_bar * LN2))
    lin_base = float(np.sum(np.log2(b_bar)) + k_total * math.log2(c_bar))
    return SurrogateModel(
        a_rows=a_rows, b_rows=b_rows, c_row=c_row, d_rows=d_rows,
        own=own, noise=noise, sizes=sizes, p_bar=p_vec,
        b_bar=b_bar, c_bar=c_bar, lin_grad=lin_grad, lin_base=lin_base)


def qos_constraints(model: SurrogateModel,
                    cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Affine per-user rate floors, exact (no approximation).

    rate >= min_rate is equivalent to own*p_k >= kappa * interference with
    kappa = 2^min_rate - 1, an affine inequality because the interference
    form is affine. Zero rows when min_rate is zero.
    """
    kappa = 2.0 ** cfg.min_rate - 1.0
    k_total = model.n_slots
    if kappa <= 0.0:
        return np.zeros((0, k_total)), np.zeros(0)
    rows = kappa * model.b_rows.copy()
    rows[np.arange(k_total), np.arange(k_total)] -= model.own
    rhs = np.full(k_total, -kappa * model.noise)
    return rows, rhs


@dataclass
class PowerResult:
    """Outcome of one SCA run: allocation, per-step true objective trace."""

    p: PowerAllocation
    trace: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    @property
    def value(self) -> float:
        return self.trace[-1] if self.trace else float("-inf")


def solve_power(gains: EffectiveGains, cfg: SystemConfig,
                settings: SolverSettings,
                p_init: PowerAllocation | np.ndarray | None = None
                ) -> PowerResult:
    """Iterate surrogate maximizations until the true objective stalls.

    The initial point is projected onto the feasible polytope (raising the
    infeasibility certificate when the rate floors cannot be met). The true
    objective is evaluated after every inner solve; a decrease beyond
    round-off raises MonotonicityError.
    """
    sizes = gains.sizes
    k_total = int(sum(sizes))
    if p_init is None:
        p_vec = np.full(k_total, 0.9 * cfg.total_power_w / k_total)
    elif isinstance(p_init, PowerAllocation):
        p_vec = p_init.as_vector()
    else:
        p_vec = np.asarray(p_init, dtype=float).copy()

    model = build_surrogate(gains, p_vec)
    q_rows, q_rhs = qos_constraints(model, cfg)
    a_ub = np.vstack([np.ones((1, k_total)), q_rows])
    b_ub = np.concatenate([[cfg.total_power_w], q_rhs])
    shell = PolytopeProblem(
        objective=lambda x: (0.0, np.zeros(k_total)), a_ub=a_ub, b_ub=b_ub)
    p_vec = feasible_point(shell, p_vec)

    model = build_surrogate(gains, p_vec)
    trace = [model.true_value(p_vec)]
    converged = False
    for _ in range(settings.inner_power_max):
        prob = PolytopeProblem(objective=model.objective,
                               a_ub=a_ub, b_ub=b_ub)
        res = solve_polytope(prob, settings, x0=p_vec)
        v_new = model.true_value(res.x)
        prev = trace[-1]
        if v_new < prev - 1e-6 * max(1.0, abs(prev)):
            raise MonotonicityError(
                f"surrogate step decreased the objective: {prev!r} -> "
                f"{v_new!r}")
        if v_new <= prev:
            # inner-solver round-off; keep the better point and stop
            converged = True
            break
        p_vec = res.x
        trace.append(v_new)
        if v_new - prev < settings.rel_tol * max(1.0, abs(prev)):
            converged = True
            break
        model = build_surrogate(gains, p_vec)
    p_vec = np.maximum(p_vec, 0.0)  # clear projection round-off
    return PowerResult(
        p=PowerAllocation.from_vector(p_vec, sizes),
        trace=trace, converged=converged, iterations=len(trace) - 1)
