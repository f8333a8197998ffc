"""Reachability pruning of a Liouvillian.

A state ``j`` is coupled to ``i`` when ``L[j, i] != 0`` (amplitude in ``i``
feeds ``d/dt P[j]``).  Starting from the support of the initial vector, the
forward closure under this relation contains every coefficient that can ever
become nonzero; all other coefficients stay exactly zero, so dropping them
is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import SymBasis
from .operators import SparseOperator

__all__ = ["PruneResult", "reachable_states", "prune_reachable"]


@dataclass(frozen=True)
class PruneResult:
    basis: SymBasis
    operator: SparseOperator
    kept: np.ndarray  # kept[i] = index of reduced state i in the original basis

    def lift(self, reduced: np.ndarray, size: int) -> np.ndarray:
        """Embed a reduced vector back into the original basis (zeros elsewhere)."""
        out = np.zeros(size, dtype=np.result_type(reduced, complex))
        out[self.kept] = reduced
        return out


def reachable_states(matrix: sp.spmatrix, support) -> np.ndarray:
    """Sorted indices reachable from ``support`` along nonzero entries of ``matrix.T``."""
    n = matrix.shape[0]
    support = np.unique(np.asarray(support, dtype=np.int64))
    if support.size == 0:
        raise ValueError("empty support: nothing to prune from")
    if support[0] < 0 or support[-1] >= n:
        raise IndexError("support index out of range")
    pattern = sp.csr_matrix(matrix, copy=True)
    pattern.data = np.ones_like(pattern.data, dtype=np.float64)
    reached = np.zeros(n, dtype=bool)
    reached[support] = True
    frontier = reached.astype(np.float64)
    while True:
        hit = (pattern @ frontier) > 0
        new = hit & ~reached
        if not new.any():
            break
        reached |= new
        frontier = new.astype(np.float64)
    return np.nonzero(reached)[0]


def prune_reachable(basis: SymBasis, L: SparseOperator, support) -> PruneResult:
    """Restrict ``basis`` and ``L`` to the states reachable from ``support``.

    Parameters
    ----------
    basis : SymBasis
        Basis ``L`` is defined on.
    L : SparseOperator
        Frozen Liouvillian.
    support : array_like of int
        Indices with nonzero initial amplitude.
    """
    if not L.frozen:
        raise ValueError("prune_reachable needs a frozen operator")
    kept = reachable_states(L.matrix, support)
    reduced = L.matrix[kept][:, kept]
    sub = basis.restrict(kept)
    op = SparseOperator.from_matrix(sub, reduced)
    op.dropped = L.dropped
    return PruneResult(sub, op, kept)
