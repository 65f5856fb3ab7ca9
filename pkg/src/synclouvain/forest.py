"""Structure of a best-neighbor assignment map.

An assignment a(i) with a(i) = i allowed is a functional graph: every weakly
connected component contains exactly one directed cycle, and everything else
hangs off it in trees pointing toward the cycle. Components become the
working communities; the cycle flags drive the split and move rules.

Component labels and cycle flags are computed by pointer doubling (log n
rounds of numpy gathers), so no Python-level walk touches every node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import canonicalize_labels

__all__ = ["AssignmentForest", "extract_components", "reverse_assignment"]


@dataclass
class AssignmentForest:
    """Assignment map plus its derived component structure."""

    a: np.ndarray
    comm: np.ndarray          # dense labels ordered by smallest member
    n_comms: int
    on_cycle: np.ndarray      # node lies on its component's unique cycle
    _members: list | None = field(default=None, repr=False)

    def community_members(self) -> list:
        """Member arrays per community, ascending node ids (cached)."""
        if self._members is None:
            order = np.argsort(self.comm, kind="stable")
            bounds = np.searchsorted(self.comm[order], np.arange(self.n_comms + 1))
            self._members = [order[bounds[c]:bounds[c + 1]]
                             for c in range(self.n_comms)]
        return self._members


def extract_components(a) -> AssignmentForest:
    """Label weakly connected components of i -> a[i] and flag cycle nodes."""
    a = np.asarray(a, dtype=np.int64)
    n = a.size
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return AssignmentForest(a, empty, 0, np.empty(0, dtype=bool))
    # land every node on its cycle: f = a applied >= n times
    f = a.copy()
    steps = 1
    while steps < n:
        f = f[f]
        steps *= 2
    on_cycle = np.zeros(n, dtype=bool)
    on_cycle[f] = True
    # propagate the minimum cycle id around each cycle as a component key
    minv = f.copy()
    hop = a.copy()
    steps = 1
    while steps < n:
        minv = np.minimum(minv, minv[hop])
        hop = hop[hop]
        steps *= 2
    comm = canonicalize_labels(minv)
    return AssignmentForest(a, comm, int(comm.max()) + 1, on_cycle)


def reverse_assignment(a) -> tuple[np.ndarray, np.ndarray]:
    """CSR of assignment children: nodes j != i with a[j] == i, ascending."""
    a = np.asarray(a, dtype=np.int64)
    n = a.size
    mask = a != np.arange(n, dtype=np.int64)
    targets = a[mask]
    sources = np.flatnonzero(mask)
    kids = sources[np.argsort(targets, kind="stable")]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(targets, minlength=n), out=ptr[1:])
    return ptr, kids
