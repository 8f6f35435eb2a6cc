"""Reflection-phase optimization by semidefinite relaxation.

Every squared beam gain is a quadratic form of the reflection vector, so
lifting to the unit-diagonal PSD matrix turns each of the four log
arguments into an affine trace functional. The same majorize-minimize
scheme as the power step applies: keep the two concave logs, linearize the
two convex ones at the expansion matrix, and maximize over the
spectrahedron. A unit-modulus vector is recovered from the relaxed optimum
by seeded Gaussian randomization, keeping the candidate with the best true
(unlifted) objective.

Convention: the public reflection state t multiplies the IRS rows
elementwise (as consumed by the channel cascade); the lift operates on its
conjugate, which leaves all gains unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .clustering import ClusterAssignment
from .config import SolverSettings, SystemConfig
from .convex_core import SpectrahedronProblem, solve_spectrahedron
from .metrics import EffectiveGains, PowerAllocation
from .power_alloc import MonotonicityError

LN2 = math.log(2.0)

# points per free angle for the exhaustive start scan; surfaces with more
# elements rely on the multistart draws instead
_SCAN_POINTS = {2: 1024, 3: 256}


@dataclass(frozen=True)
class LiftedChannelCache:
    """Per-beam reflection-domain vectors and their power-weighted lifts.

    m_user[u, i] is the length-N vector whose quadratic form with the lifted
    matrix gives user u's squared gain on beam i; m_eve[i] likewise for the
    eavesdropper. The Hermitian stacks a_mats/b_mats/d_mats and the shared
    c_mat fold in the (fixed) power allocation so each log argument reads
    trace(M Phi) + noise.
    """

    m_user: np.ndarray            # (M, L, N)
    m_eve: np.ndarray             # (L, N)
    a_mats: np.ndarray            # (K, N, N)
    b_mats: np.ndarray            # (K, N, N)
    c_mat: np.ndarray             # (N, N)
    d_mats: np.ndarray            # (K, N, N)
    own_mats: np.ndarray          # (K, N, N) slot's own-beam outer product
    p_slots: np.ndarray           # (K,)
    members: tuple[tuple[int, ...], ...]
    noise: float

    @property
    def n_irs(self) -> int:
        return self.m_user.shape[2]

    @property
    def n_slots(self) -> int:
        return self.p_slots.shape[0]

    def values(self, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray,
                                               float, np.ndarray]:
        a = np.einsum("kij,ji->k", self.a_mats, phi).real + self.noise
        b = np.einsum("kij,ji->k", self.b_mats, phi).real + self.noise
        c = float(np.einsum("ij,ji->", self.c_mat, phi).real) + self.noise
        d = np.einsum("kij,ji->k", self.d_mats, phi).real + self.noise
        return a, b, c, d

    def true_lifted(self, phi: np.ndarray) -> float:
        """Sum secrecy rate of the lifted point (exact, no linearization)."""
        a, b, c, d = self.values(phi)
        return float(np.sum(np.log2(a)) - np.sum(np.log2(b))
                     - self.n_slots * math.log2(c) + np.sum(np.log2(d)))

    def gains_at(self, t: np.ndarray) -> EffectiveGains:
        """Unlifted effective gains at reflection state t."""
        proj = np.einsum("uln,n->ul", self.m_user, t)
        user_gain = np.abs(proj) ** 2
        eve_gain = np.abs(self.m_eve @ t) ** 2
        return EffectiveGains(user_gain=user_gain, eve_gain=eve_gain,
                              members=self.members, noise=self.noise)


def build_lifted(channels: ChannelSet, precoders,
                 assignment: ClusterAssignment,
                 p: PowerAllocation, noise: float) -> LiftedChannelCache:
    """Assemble reflection-domain vectors and power-weighted Hermitian
    stacks for the current precoders and powers."""
    n_users = channels.n_users
    n_irs = channels.n_irs
    fv = precoders.f @ precoders.v                       # (n_tx, L)
    bounce = channels.h_bar @ fv                         # (n_irs, L)
    l_count = fv.shape[1]
    m_user = np.empty((n_users, l_count, n_irs), dtype=complex)
    for u in range(n_users):
        m_user[u] = (channels.beta[u]
                     * (channels.g_rows[u][None, :] * bounce.T))
    m_eve = channels.beta_eve * (channels.g_eve[None, :] * bounce.T)

    r_eve = np.einsum("in,im->inm", m_eve, m_eve.conj())  # (L, N, N)
    sizes = tuple(len(g) for g in assignment.members)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    k_total = int(sum(sizes))
    p_slots = p.as_vector()
    p_cluster = np.array([p.cluster_total(l) for l in range(l_count)])

    a_mats = np.zeros((k_total, n_irs, n_irs), dtype=complex)
    b_mats = np.zeros_like(a_mats)
    d_mats = np.zeros_like(a_mats)
    own_mats = np.zeros_like(a_mats)
    c_mat = np.einsum("i,inm->nm", p_cluster, r_eve)
    k = 0
    for l, grp in enumerate(assignment.members):
        for m, u in enumerate(grp):
            r_u = np.einsum("in,im->inm", m_user[u], m_user[u].conj())
            stronger = float(np.sum(p.values[l][:m]))
            coeff = p_cluster.copy()
            coeff[l] = stronger
            b_mats[k] = np.einsum("i,inm->nm", coeff, r_u)
            own_mats[k] = r_u[l]
            a_mats[k] = b_mats[k] + p_slots[k] * r_u[l]
            d_mats[k] = c_mat - p_slots[k] * r_eve[l]
            k += 1
    return LiftedChannelCache(
        m_user=m_user, m_eve=m_eve, a_mats=a_mats, b_mats=b_mats,
        c_mat=c_mat, d_mats=d_mats, own_mats=own_mats, p_slots=p_slots,
        members=assignment.members, noise=noise)


def _surrogate(cache: LiftedChannelCache, phi_hat: np.ndarray,
               kappa: float, penalty: float):
    """Concave surrogate closure at the expansion matrix phi_hat."""
    _, b_hat, c_hat, _ = cache.values(phi_hat)
    k_total = cache.n_slots
    lin_mat = (np.einsum("k,kij->ij", 1.0 / (b_hat * LN2), cache.b_mats)
               + k_total / (c_hat * LN2) * cache.c_mat)
    lin_base = float(np.sum(np.log2(b_hat)) + k_total * math.log2(c_hat))
    qos_mats = kappa * cache.b_mats - cache.p_slots[:, None, None] \
        * cache.own_mats
    qos_shift = kappa * cache.noise

    def objective(phi: np.ndarray) -> tuple[float, np.ndarray]:
        a = np.einsum("kij,ji->k", cache.a_mats, phi).real + cache.noise
        d = np.einsum("kij,ji->k", cache.d_mats, phi).real + cache.noise
        corr = float(np.einsum("ij,ji->", lin_mat, phi - phi_hat).real)
        val = (float(np.sum(np.log2(a)) + np.sum(np.log2(d)))
               - lin_base - corr)
        grad = (np.einsum("k,kij->ij", 1.0 / (a * LN2), cache.a_mats)
                + np.einsum("k,kij->ij", 1.0 / (d * LN2), cache.d_mats)
                - lin_mat)
        if kappa > 0.0:
            viol = np.einsum("kij,ji->k", qos_mats, phi).real + qos_shift
            active = np.maximum(viol, 0.0)
            val -= penalty * float(np.sum(active ** 2))
            grad -= 2.0 * penalty * np.einsum("k,kij->ij", active, qos_mats)
        return val, grad

    return objective


def _penalized_true(cache: LiftedChannelCache, phi: np.ndarray,
                    kappa: float, penalty: float) -> float:
    val = cache.true_lifted(phi)
    if kappa > 0.0:
        a, b, _, _ = cache.values(phi)
        # own-signal trace is a - b; violation when it falls short of
        # kappa times the interference-plus-noise form
        viol = np.maximum(kappa * b - (a - b), 0.0)
        val -= penalty * float(np.sum(viol ** 2))
    return val


def score_reflections(cache: LiftedChannelCache, tmat: np.ndarray,
                      kappa: float = 0.0,
                      penalty: float = 0.0) -> np.ndarray:
    """Penalized true objective at each reflection state (row of tmat).

    Row b of the result equals _penalized_true at the rank-1 lift of
    tmat[b]; everything is evaluated in the unlifted domain so a whole
    batch costs one einsum over the stacked user vectors.
    """
    t = np.asarray(tmat, dtype=complex)
    g = np.abs(np.einsum("uln,bn->bul", cache.m_user, t)) ** 2
    ev = np.abs(t @ cache.m_eve.T) ** 2                     # (B, L)
    sizes = [len(grp) for grp in cache.members]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    p = cache.p_slots
    pc = np.array([float(np.sum(p[offsets[l]:offsets[l + 1]]))
                   for l in range(len(sizes))])
    noise = cache.noise
    c = ev @ pc + noise                                     # (B,)
    val = -cache.n_slots * np.log2(c)
    pen = np.zeros(t.shape[0])
    gu_pc = np.einsum("bul,l->bu", g, pc)
    k = 0
    for l, grp in enumerate(cache.members):
        stronger = 0.0
        for u in grp:
            own = g[:, u, l]
            b = gu_pc[:, u] - own * (pc[l] - stronger) + noise
            a = b + p[k] * own
            d = c - p[k] * ev[:, l]
            val += np.log2(a) - np.log2(b) + np.log2(d)
            if kappa > 0.0:
                pen += np.maximum(kappa * b - (a - b), 0.0) ** 2
            stronger += p[k]
            k += 1
    if kappa > 0.0:
        val -= penalty * pen
    return val


def _scan_best_reflection(cache: LiftedChannelCache, kappa: float,
                          penalty: float) -> np.ndarray | None:
    """Exhaustive coarse scan over unit-modulus states, first element 1.

    Only worthwhile for tiny surfaces; one angle axis is swept per block
    so memory stays flat regardless of the grid size.
    """
    n = cache.n_irs
    pts = _SCAN_POINTS.get(n)
    if pts is None:
        return None
    phases = np.exp(2j * math.pi * np.arange(pts) / pts)
    t_best, v_best = None, -np.inf
    for idx in np.ndindex(*(pts,) * (n - 2)):
        block = np.empty((pts, n), dtype=complex)
        block[:, 0] = 1.0
        for axis, i in enumerate(idx):
            block[:, axis + 1] = phases[i]
        block[:, n - 1] = phases
        vals = score_reflections(cache, block, kappa, penalty)
        j = int(np.argmax(vals))
        if vals[j] > v_best:
            v_best, t_best = float(vals[j]), block[j].copy()
    return t_best


@dataclass
class PhaseResult:
    """Relaxed optimum and its SCA history."""

    phi: np.ndarray
    trace: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    @property
    def value(self) -> float:
        return self.trace[-1] if self.trace else float("-inf")


def solve_phase(cache: LiftedChannelCache, cfg: SystemConfig,
                settings: SolverSettings,
                phi_init: np.ndarray | None = None,
                multistart_seed: int = 0) -> PhaseResult:
    """SCA over the spectrahedron; best result across deterministic starts.

    Start 0 is the identity (or phi_init when given); on surfaces small
    enough to enumerate, an exhaustive coarse angle scan contributes the
    best unit-modulus state as another start, so the returned value
    dominates that whole grid. Further starts, when
    settings.phase_multistart > 1, lift per-cluster co-phasing vectors and
    then seeded random unit-modulus vectors. The surrogate is a local
    minorant, so a poor start can park the ascent at a nearby stationary
    point far below the relaxation optimum; after the start sweep the best
    point is therefore rounded to a unit-modulus vector, re-lifted, and the
    ascent repeated from there while that keeps helping. The tracked
    objective (true lifted value, plus the rate-floor penalty when a floor
    is set) never decreases within one SCA run.
    """
    n = cache.n_irs
    kappa = 2.0 ** cfg.min_rate - 1.0
    penalty = settings.qos_penalty

    def run_sca(phi0: np.ndarray) -> PhaseResult:
        phi = phi0
        trace = [_penalized_true(cache, phi, kappa, penalty)]
        converged = False
        for _ in range(settings.inner_phase_max):
            obj = _surrogate(cache, phi, kappa, penalty)
            prob = SpectrahedronProblem(objective=obj, dim=n)
            res = solve_spectrahedron(prob, settings, phi0=phi)
            v_new = _penalized_true(cache, res.x, kappa, penalty)
            prev = trace[-1]
            if v_new < prev - 1e-6 * max(1.0, abs(prev)):
                raise MonotonicityError(
                    f"phase surrogate step decreased the objective: "
                    f"{prev!r} -> {v_new!r}")
            if v_new <= prev:
                # projection round-off; keep the better point and stop
                converged = True
                break
            phi = res.x
            trace.append(v_new)
            if v_new - prev < settings.rel_tol * max(1.0, abs(prev)):
                converged = True
                break
        return PhaseResult(phi=phi, trace=trace, converged=converged,
                           iterations=len(trace) - 1)

    starts: list[np.ndarray] = []
    if phi_init is not None:
        starts.append(np.asarray(phi_init, dtype=complex))
    else:
        starts.append(np.eye(n, dtype=complex))
    scan_t = _scan_best_reflection(cache, kappa, penalty)
    if scan_t is not None:
        theta = np.conj(scan_t)
        starts.append(np.outer(theta, theta.conj()))
    # deterministic co-phasing starts: lift of the vector aligning each
    # cluster head's reflection-domain channel, then seeded random lifts
    extra = max(0, settings.phase_multistart - 1)
    for l, grp in enumerate(cache.members):
        if extra <= 0:
            break
        if not grp:
            continue
        theta = np.exp(1j * np.angle(cache.m_user[grp[0], l]))
        starts.append(np.outer(theta, theta.conj()))
        extra -= 1
    rng = np.random.default_rng(multistart_seed)
    for _ in range(extra):
        theta = np.exp(2j * math.pi * rng.uniform(0.0, 1.0, n))
        starts.append(np.outer(theta, theta.conj()))

    best: PhaseResult | None = None
    for phi0 in starts:
        cand = run_sca(phi0)
        if best is None or cand.value > best.value:
            best = cand

    # round-and-relift: randomization escapes the current basin whenever a
    # better unit-modulus point exists in the relaxed solution's span
    sizes = tuple(len(g) for g in cache.members)
    p = PowerAllocation.from_vector(cache.p_slots, sizes)
    for round_idx in range(2):
        rounded = gaussian_randomize(
            best.phi, cache, p, count=settings.randomization_count,
            seed=multistart_seed + 7919 * (round_idx + 1),
            min_rate=cfg.min_rate)
        theta = np.conj(rounded.t)
        cand = run_sca(np.outer(theta, theta.conj()))
        if cand.value > best.value:
            best = cand
        else:
            break
    return best


@dataclass(frozen=True)
class RandomizedPhase:
    """Unit-modulus recovery outcome."""

    t: np.ndarray          # reflection coefficients, |t_n| = 1 exactly
    value: float           # true sum secrecy rate at t
    qos_ok: bool           # rate floors met (vacuously true when unset)


def _normalize_global_phase(theta: np.ndarray) -> np.ndarray:
    lead = theta[0]
    if lead == 0:
        return theta
    return theta * (abs(lead) / lead)


def gaussian_randomize(phi: np.ndarray, cache: LiftedChannelCache,
                       p: PowerAllocation, count: int, seed: int,
                       min_rate: float = 0.0) -> RandomizedPhase:
    """Recover a unit-modulus reflection vector from the relaxed optimum.

    Candidates are elementwise phases of U diag(sqrt(w)) r for seeded
    complex Gaussian draws r, plus the leading eigenvector itself; each is
    scored by the true unlifted objective, discarding rate-floor violators.
    If every candidate violates, the least-violating one is returned with
    qos_ok False. Deterministic given (phi, seed, count).
    """
    from .metrics import sinr_user, sum_secrecy

    n = phi.shape[0]
    w, u = np.linalg.eigh(phi)
    w = np.maximum(w, 0.0)
    factor = u * np.sqrt(w)[None, :]
    rng = np.random.default_rng(seed)
    thetas = [_normalize_global_phase(
        np.exp(1j * np.angle(u[:, -1])))]  # leading eigenvector
    for _ in range(count):
        r = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) \
            / math.sqrt(2.0)
        draw = factor @ r
        thetas.append(_normalize_global_phase(np.exp(1j * np.angle(draw))))

    kappa_on = min_rate > 0.0
    best = None          # (value, t, qos_ok)
    fallback = None      # (violation, value, t)
    for theta in thetas:
        t = np.conj(theta)
        gains = cache.gains_at(t)
        value = sum_secrecy(gains, p)
        if kappa_on:
            worst = min(
                math.log2(1.0 + sinr_user(gains, p, l, m)) - min_rate
                for l, grp in enumerate(cache.members)
                for m in range(len(grp)))
            ok = worst >= -1e-9
        else:
            worst, ok = 0.0, True
        if ok and (best is None or value > best[0]):
            best = (value, t, True)
        if not ok and (fallback is None or -worst < fallback[0]):
            fallback = (-worst, value, t)
    if best is not None:
        return RandomizedPhase(t=best[1], value=best[0], qos_ok=True)
    return RandomizedPhase(t=fallback[2], value=fallback[1], qos_ok=False)
