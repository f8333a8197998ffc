"""Sparse Liouville-space operators on the symmetric basis.

Rows follow the trace semantics ``P[s] = tr[P_s rho]``: an operator acting as
``rho -> A rho B`` has row ``s`` equal to the expansion of ``B P_s A`` in the
symmetric basis.  Two elementary arrows generate every multi-level operator:

* nonconnecting: ``sum_i s_xx^i P s_yy^i = n_xy P`` (diagonal),
* connecting: ``sum_i s_xy^i P s_kl^i = (n_xl + 1) P[n_xl + 1, n_yk - 1]`` when
  ``n_yk > 0``; as a superoperator this is ``rho -> sum_i s_kl^i rho s_xy^i``.

Mode operators are Kronecker factors on the ``(ket, bra)`` Fock pairs.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
import scipy.sparse as sp

from .basis import MLSDim, SymBasis, _as_dim

__all__ = [
    "AssemblyError",
    "MODE_KINDS",
    "SparseOperator",
    "combine",
    "identity",
    "mls_nonconnecting_matrix",
    "mls_connecting_matrix",
    "collective_matrix",
    "mode_matrix",
]

MODE_KINDS = ("bL", "bR", "bdL", "bdR", "bdbL", "bdbR", "bbdL", "bbdR", "bL_bdR", "bdL_bR")


class AssemblyError(ValueError):
    """Operator assembly referenced something the system does not provide."""


def _require_full(basis: SymBasis) -> None:
    if not basis.is_full:
        raise AssemblyError("operators can only be assembled on a full (unpruned) basis")


def _lift_mls(basis: SymBasis, m: sp.spmatrix) -> sp.csr_matrix:
    if basis.n_mode_states == 1:
        return sp.csr_matrix(m)
    return sp.kron(m, sp.identity(basis.n_mode_states, format="csr"), format="csr")


def _lift_mode(basis: SymBasis, mode: int, m: sp.spmatrix) -> sp.csr_matrix:
    modes = basis.spec.modes
    before = int(np.prod([x.fock**2 for x in modes[:mode]], dtype=np.int64))
    after = int(np.prod([x.fock**2 for x in modes[mode + 1 :]], dtype=np.int64))
    full = sp.kron(sp.identity(before, format="csr"), m, format="csr")
    full = sp.kron(full, sp.identity(after, format="csr"), format="csr")
    return sp.kron(sp.identity(basis.n_mls, format="csr"), full, format="csr")


def _mls_count(basis: SymBasis, pos: int | None) -> np.ndarray:
    states = basis.mls_states
    if pos is None:
        return basis.spec.n_systems - states.sum(axis=1, dtype=np.int64)
    return states[:, pos].astype(np.int64)


def _position(basis: SymBasis, dim: MLSDim) -> int | None:
    try:
        return basis.spec.dim_position(dim)
    except KeyError:
        raise AssemblyError(f"dim {dim.name} is not tracked") from None


def mls_nonconnecting_matrix(basis: SymBasis, dim: MLSDim | str) -> sp.csr_matrix:
    """Diagonal ``n_xy`` operator (``rho -> sum_i s_yy rho s_xx``)."""
    _require_full(basis)
    dim = _as_dim(dim)
    n = _mls_count(basis, _position(basis, dim)).astype(complex)
    return _lift_mls(basis, sp.diags(n, format="csr"))


def mls_connecting_matrix(basis: SymBasis, inc: MLSDim | str, dec: MLSDim | str) -> tuple[sp.csr_matrix, int]:
    """Connecting arrow raising ``inc`` and lowering ``dec``.

    Returns the matrix and the number of rows whose target fell outside the
    truncation.
    """
    _require_full(basis)
    inc, dec = _as_dim(inc), _as_dim(dec)
    if inc == dec:
        raise AssemblyError(f"connecting arrow needs two different dims, got {inc.name} twice")
    p_inc, p_dec = _position(basis, inc), _position(basis, dec)
    states = basis.mls_states.astype(np.int64)
    n_inc = _mls_count(basis, p_inc)
    n_dec = _mls_count(basis, p_dec)
    active = n_dec > 0
    target = states.copy()
    if p_inc is not None:
        target[:, p_inc] += 1
    if p_dec is not None:
        target[:, p_dec] -= 1
    cols = np.full(basis.n_mls, -1, dtype=np.int64)
    cols[active] = basis.mls_lookup(target[active])
    hit = cols >= 0
    dropped = int(np.count_nonzero(active & ~hit))
    rows = np.nonzero(hit)[0]
    vals = (n_inc[rows] + 1).astype(complex)
    m = sp.csr_matrix((vals, (rows, cols[rows])), shape=(basis.n_mls, basis.n_mls))
    return _lift_mls(basis, m), dropped * basis.n_mode_states


def collective_matrix(
    basis: SymBasis, side: Literal["left", "right"], x: int, y: int
) -> tuple[sp.csr_matrix, int]:
    """Collective ``J_xy`` acting from the left (``J rho``) or right (``rho J``).

    The sum over the intermediate level k only includes arrows whose lowered
    dim is tracked; arrows that would raise an untracked dim from a tracked one
    are an error.
    """
    _require_full(basis)
    spec = basis.spec
    if side not in ("left", "right"):
        raise AssemblyError(f"side must be 'left' or 'right', got {side!r}")
    if not (0 <= x < spec.d_levels and 0 <= y < spec.d_levels):
        raise AssemblyError(f"levels ({x}, {y}) outside 0..{spec.d_levels - 1}")
    total = sp.csr_matrix((basis.full_size, basis.full_size), dtype=complex)
    dropped = 0
    for k in range(spec.d_levels):
        if x == y:
            dim = MLSDim(k, x) if side == "left" else MLSDim(x, k)
            if spec.is_tracked(dim):
                total = total + mls_nonconnecting_matrix(basis, dim)
            continue
        if side == "right":
            inc, dec = MLSDim(x, k), MLSDim(y, k)
        else:
            inc, dec = MLSDim(k, y), MLSDim(k, x)
        if not spec.is_tracked(dec):
            continue
        if not spec.is_tracked(inc):
            raise AssemblyError(
                f"J{x}{y} ({side}) maps {dec.name} into untracked {inc.name}; track it or add arrows directly"
            )
        m, d = mls_connecting_matrix(basis, inc, dec)
        total = total + m
        dropped += d
    return sp.csr_matrix(total), dropped


def _ladder(fock: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, fock, dtype=float)), 1, shape=(fock, fock), format="csr")


def _single_mode(kind: str, fock: int) -> sp.csr_matrix:
    b = _ladder(fock)
    bd = sp.csr_matrix(b.T)
    eye = sp.identity(fock, format="csr")
    left = lambda a: sp.kron(a, eye, format="csr")  # noqa: E731
    right = lambda a: sp.kron(eye, a.T, format="csr")  # noqa: E731
    table = {
        "bL": lambda: left(b),
        "bR": lambda: right(b),
        "bdL": lambda: left(bd),
        "bdR": lambda: right(bd),
        "bdbL": lambda: left(bd @ b),
        "bdbR": lambda: right(bd @ b),
        "bbdL": lambda: left(b @ bd),
        "bbdR": lambda: right(b @ bd),
        "bL_bdR": lambda: left(b) @ right(bd),
        "bdL_bR": lambda: left(bd) @ right(b),
    }
    if kind not in table:
        raise AssemblyError(f"unknown mode operator kind {kind!r}")
    return sp.csr_matrix(table[kind]())


def _single_mode_dropped(kind: str, fock: int) -> int:
    big = _single_mode(kind, fock + 1).tocoo()
    m, mp = np.divmod(big.row, fock + 1)
    c, cp = np.divmod(big.col, fock + 1)
    inside = (m < fock) & (mp < fock)
    outside = (c >= fock) | (cp >= fock)
    return int(np.count_nonzero(inside & outside & (big.data != 0)))


def mode_matrix(basis: SymBasis, mode: int, kind: str) -> tuple[sp.csr_matrix, int]:
    """Elementary ladder superoperator of one mode, e.g. ``bL`` for ``b rho``."""
    _require_full(basis)
    modes = basis.spec.modes
    if not isinstance(mode, (int, np.integer)) or not 0 <= mode < len(modes):
        raise AssemblyError(f"mode id {mode!r} out of range")
    fock = modes[mode].fock
    single = _single_mode(kind, fock).astype(complex)
    dropped = _single_mode_dropped(kind, fock) * (basis.full_size // fock**2)
    return _lift_mode(basis, mode, single), dropped


class SparseOperator:
    """Sparse complex matrix on a symmetric basis.

    Contributions are accumulated while the operator is open; ``freeze``
    sums them into a CSR matrix with exact zeros removed, after which the
    operator is immutable.  ``dropped`` counts arrow targets lost to truncation.
    """

    def __init__(self, basis: SymBasis):
        self.basis = basis
        self.dropped = 0
        self.frozen = False
        self._parts: list[sp.spmatrix] = []
        self._matrix: sp.csr_matrix | None = None

    @classmethod
    def from_matrix(cls, basis: SymBasis, matrix, frozen: bool = True) -> "SparseOperator":
        matrix = sp.csr_matrix(matrix, dtype=complex)
        if matrix.shape != (len(basis), len(basis)):
            raise AssemblyError(f"matrix shape {matrix.shape} does not match basis size {len(basis)}")
        op = cls(basis)
        op._parts.append(matrix)
        return op.freeze() if frozen else op

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.basis), len(self.basis))

    def _add(self, c: complex, m: sp.spmatrix) -> "SparseOperator":
        if self.frozen:
            raise AssemblyError("operator is frozen")
        if c != 0:
            self._parts.append(complex(c) * m)
        return self

    def add_mls_nonconnecting(self, dim: MLSDim | str, c: complex) -> "SparseOperator":
        return self._add(c, mls_nonconnecting_matrix(self.basis, dim))

    def add_mls_connecting(self, inc: MLSDim | str, dec: MLSDim | str, c: complex) -> "SparseOperator":
        m, dropped = mls_connecting_matrix(self.basis, inc, dec)
        self.dropped += dropped if c != 0 else 0
        return self._add(c, m)

    def add_collective(self, side: str, x: int, y: int, c: complex) -> "SparseOperator":
        m, dropped = collective_matrix(self.basis, side, x, y)
        self.dropped += dropped if c != 0 else 0
        return self._add(c, m)

    def add_mode_elementary(self, mode: int, kind: str, c: complex) -> "SparseOperator":
        m, dropped = mode_matrix(self.basis, mode, kind)
        self.dropped += dropped if c != 0 else 0
        return self._add(c, m)

    def add_matrix(self, m: sp.spmatrix, c: complex = 1.0) -> "SparseOperator":
        if m.shape != self.shape:
            raise AssemblyError(f"dimension mismatch: {m.shape} vs {self.shape}")
        return self._add(c, sp.csr_matrix(m))

    def axpy(self, alpha: complex, other: "SparseOperator") -> "SparseOperator":
        """``self += alpha * other``."""
        if other.shape != self.shape:
            raise AssemblyError(f"dimension mismatch: {other.shape} vs {self.shape}")
        self.dropped += other.dropped if alpha != 0 else 0
        return self._add(alpha, other.matrix)

    def _assemble(self) -> sp.csr_matrix:
        n = len(self.basis)
        total = sp.csr_matrix((n, n), dtype=complex)
        for p in self._parts:
            total = total + p
        total = sp.csr_matrix(total)
        total.sum_duplicates()
        total.eliminate_zeros()
        total.sort_indices()
        return total

    def freeze(self) -> "SparseOperator":
        if not self.frozen:
            self._matrix = self._assemble()
            self._parts = []
            self._matrix.data.setflags(write=False)
            self.frozen = True
        return self

    @property
    def matrix(self) -> sp.csr_matrix:
        if self.frozen:
            return self._matrix
        return self._assemble()

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def dot(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def __matmul__(self, vec):
        return self.matrix @ vec

    def norm_inf(self) -> float:
        """Maximum absolute row sum."""
        m = self.matrix
        if m.nnz == 0:
            return 0.0
        return float(np.max(np.asarray(abs(m).sum(axis=1)).ravel()))

    def __repr__(self) -> str:
        state = "frozen" if self.frozen else "open"
        return f"SparseOperator(dim={len(self.basis)}, {state})"


def identity(basis: SymBasis) -> SparseOperator:
    return SparseOperator.from_matrix(basis, sp.identity(len(basis), dtype=complex, format="csr"))


def combine(
    a: SparseOperator,
    b: SparseOperator,
    mode: Literal["product", "axpy"] = "product",
    alpha: complex = 1.0,
) -> SparseOperator:
    """Matrix product ``a . b`` (new frozen operator) or in-place ``a += alpha b``.

    Products compose one-sided actions: ``A rho B`` is ``A^L . B^R``, ``A B rho``
    is ``A^L . B^L`` and ``rho A B`` is ``B^R . A^R``.
    """
    if a.shape != b.shape:
        raise AssemblyError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if mode == "product":
        out = SparseOperator.from_matrix(a.basis, a.matrix @ b.matrix)
        out.dropped = a.dropped + b.dropped
        return out
    if mode == "axpy":
        return a.axpy(alpha, b)
    raise ValueError(f"unknown combine mode {mode!r}")
