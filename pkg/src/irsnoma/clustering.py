"""User clustering: head selection, correlation assignment, SIC ordering.

Heads are picked greedily by cascade amplitude subject to a mutual
correlation cap; every remaining user joins the head it correlates with
most. Correlation is the normalized inner product of IRS-side steering
rows. Within a cluster, users are kept sorted by effective gain (strongest
first), which fixes the successive-decoding order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet


class EmptyClusterError(RuntimeError):
    """A cluster received no users; callers regenerate the scenario."""


@dataclass(frozen=True)
class ClusterAssignment:
    """heads[l] is the flat user id of cluster l's head; members[l] lists the
    cluster's users in decoding order (head first on construction)."""

    heads: tuple[int, ...]
    members: tuple[tuple[int, ...], ...]

    @property
    def n_clusters(self) -> int:
        return len(self.heads)

    @property
    def empty_clusters(self) -> tuple[int, ...]:
        return tuple(l for l, m in enumerate(self.members) if not m)

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(m) for m in self.members)

    def cluster_of(self) -> dict[int, int]:
        return {u: l for l, grp in enumerate(self.members) for u in grp}

    def require_nonempty(self) -> None:
        empty = self.empty_clusters
        if empty:
            raise EmptyClusterError(
                f"clusters {list(empty)} received no users")


def correlation(a: np.ndarray, b: np.ndarray) -> float:
    """|<a, b>| / (||a|| ||b||), in [0, 1]."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("zero-norm channel row")
    return float(abs(np.vdot(a, b)) / (na * nb))


def select_heads(channels: ChannelSet, n_clusters: int,
                 corr_threshold: float = 0.5) -> tuple[int, ...]:
    """Greedy head pick: strongest cascade amplitude first, then the
    strongest user whose correlation to every chosen head stays below the
    threshold; if none qualifies, the user minimizing the worst-case
    correlation. Ties break toward the lower user id.
    """
    m = channels.n_users
    if n_clusters > m:
        raise ValueError(
            f"cannot pick {n_clusters} heads from {m} users")
    order = sorted(range(m), key=lambda u: (-channels.beta[u], u))
    heads = [order[0]]
    corr = np.zeros(m)
    for u in range(m):
        corr[u] = correlation(channels.g_rows[u], channels.g_rows[heads[0]])
    while len(heads) < n_clusters:
        pick = None
        for u in order:
            if u in heads:
                continue
            if corr[u] < corr_threshold:
                pick = u
                break
        if pick is None:
            candidates = [u for u in order if u not in heads]
            pick = min(candidates, key=lambda u: (corr[u], u))
        heads.append(pick)
        for u in range(m):
            c = correlation(channels.g_rows[u], channels.g_rows[pick])
            corr[u] = max(corr[u], c)
    return tuple(heads)


def assign_users(channels: ChannelSet,
                 heads: tuple[int, ...]) -> ClusterAssignment:
    """Attach every non-head user to its best-correlated head.

    Members start ordered by cascade amplitude (head included); ties break
    toward the lower head index. Empty clusters are representable and
    flagged by the assignment, not an error here.
    """
    groups: list[list[int]] = [[h] for h in heads]
    for u in range(channels.n_users):
        if u in heads:
            continue
        best_l, best_c = 0, -1.0
        for l, h in enumerate(heads):
            c = correlation(channels.g_rows[u], channels.g_rows[h])
            if c > best_c + 1e-15:
                best_l, best_c = l, c
        groups[best_l].append(u)
    members = tuple(
        tuple(sorted(g, key=lambda u: (-channels.beta[u], u)))
        for g in groups)
    return ClusterAssignment(heads=heads, members=members)


def cluster_users(channels: ChannelSet, n_clusters: int,
                  corr_threshold: float = 0.5) -> ClusterAssignment:
    heads = select_heads(channels, n_clusters, corr_threshold)
    return assign_users(channels, heads)


def refresh_order(assignment: ClusterAssignment,
                  gains: np.ndarray) -> ClusterAssignment:
    """Re-sort each cluster by the supplied per-user effective gains
    (descending), preserving membership. gains is indexed by flat user id.
    """
    members = tuple(
        tuple(sorted(grp, key=lambda u: (-gains[u], u)))
        for grp in assignment.members)
    return ClusterAssignment(heads=assignment.heads, members=members)
