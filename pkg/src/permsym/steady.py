"""Steady state as the trace-normalized null vector of the Liouvillian.

The trace functional is a left null vector of every trace-preserving
Liouvillian, so one row of ``L P = 0`` is redundant.  Replacing that row by
the trace row gives a nonsingular system ``A x = e_r`` whenever the kernel is
one-dimensional.  It is solved by sparse LU with iterative refinement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dynamics import DualVector

__all__ = ["SteadyStateError", "SteadyStats", "steady_state"]


class SteadyStateError(RuntimeError):
    """Bordered system singular (degenerate kernel) or refinement did not converge."""


@dataclass
class SteadyStats:
    iterations: int = 0
    residual: float = float("nan")
    factor_nnz: int = 0
    factor_flops: int = 0  # multiply-adds of the factorization
    solve_flops: int = 0  # multiply-adds of all triangular solves and residuals
    operator_nnz: int = 0

    @property
    def rhs_equivalents(self) -> float:
        """Total work in units of one ``L @ x`` product."""
        if self.operator_nnz == 0:
            return 0.0
        return (self.factor_flops + self.solve_flops) / self.operator_nnz


def _lu_flops(lu) -> int:
    # sum over pivots of |L[:, k]| * |U[k, :]| (right-looking elimination count)
    lower = sp.csc_matrix(lu.L)
    upper = sp.csr_matrix(lu.U)
    col = np.diff(lower.indptr) - 1  # strictly-lower entries per column
    row = np.diff(upper.indptr)
    return int(np.dot(col.astype(np.int64), row.astype(np.int64)))


def steady_state(
    L,
    trace: DualVector,
    tol: float = 1e-10,
    max_iter: int = 20,
    stats: SteadyStats | None = None,
) -> np.ndarray:
    """Solve ``L x = 0`` with ``trace(x) = 1``.

    Parameters
    ----------
    L : SparseOperator or sparse matrix
        Frozen Liouvillian.
    trace : DualVector
        Trace functional of the same basis.
    tol : float
        Target ``||L x||_inf <= tol * ||L||_inf``.

    Raises
    ------
    SteadyStateError
        The bordered system is singular (kernel not one-dimensional) or the
        residual target was not met within ``max_iter`` refinements.
    """
    m = sp.csr_matrix(getattr(L, "matrix", L), dtype=complex)
    n = m.shape[0]
    t = np.asarray(trace.coeffs, dtype=complex)
    if t.shape != (n,):
        raise ValueError("trace functional size does not match the operator")
    stats = stats if stats is not None else SteadyStats()
    stats.operator_nnz = m.nnz
    support = np.nonzero(t)[0]
    if support.size == 0:
        raise SteadyStateError("trace functional is zero on this basis")
    r = int(support[0])

    keep = np.ones(n)
    keep[r] = 0.0
    border = sp.csr_matrix((t[support], (np.full(support.size, r), support)), shape=(n, n))
    a = (sp.diags(keep) @ m + border).tocsc()
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:
        raise SteadyStateError(f"bordered system is singular, the null space is not one-dimensional ({exc})") from exc
    stats.factor_nnz = lu.L.nnz + lu.U.nnz
    stats.factor_flops = _lu_flops(lu)
    solve_cost = stats.factor_nnz

    rhs = np.zeros(n, dtype=complex)
    rhs[r] = 1.0
    x = lu.solve(rhs)
    stats.solve_flops += solve_cost
    norm_l = float(np.max(np.asarray(abs(m).sum(axis=1)).ravel())) if m.nnz else 0.0
    target = tol * max(norm_l, np.finfo(float).tiny)
    for it in range(max_iter + 1):
        if not np.all(np.isfinite(x)):
            raise SteadyStateError("bordered system is numerically singular, the null space is not one-dimensional")
        res_l = m @ x
        stats.solve_flops += m.nnz
        stats.residual = float(np.max(np.abs(res_l))) if n else 0.0
        trace_err = abs(np.dot(t, x) - 1.0)
        stats.iterations = it
        if stats.residual <= target and trace_err <= tol:
            return x
        res_b = rhs - a @ x
        x = x + lu.solve(res_b)
        stats.solve_flops += solve_cost + a.nnz
    raise SteadyStateError(
        f"residual {stats.residual:.3e} above target {target:.3e} after {max_iter} refinements"
    )
