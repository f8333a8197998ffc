"""Permutation-symmetric Liouville space basis.

A state of N identical (d)-level systems is labelled by how many systems sit
in each single-system matrix ``sigma_kl = |k><l|``.  The counts ``n_kl`` of the
tracked matrices are stored explicitly, the ground density ``n_00`` is implied by
``n_00 = N - sum(n_kl)``.  Each bosonic mode adds a ``(ket, bra)`` pair of Fock
indices.  States are ordered lexicographically: multi-level counts outermost
(dims in declaration order), then ``(ket, bra)`` per mode.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "SpecError",
    "MLSDim",
    "GROUND",
    "Mode",
    "SystemSpec",
    "MultiIndex",
    "SymBasis",
    "define_system",
    "enumerate_basis",
    "dimension_count",
    "is_density_element",
]

_INDEX_LIMIT = 2**62
_DIM_RE = re.compile(r"^n(\d)(\d)$")


class SpecError(ValueError):
    """Invalid system declaration or basis query."""


@dataclass(frozen=True, order=True)
class MLSDim:
    """Identifier of the count ``n_kl`` of systems in ``|k><l|``."""

    left: int
    right: int

    @classmethod
    def parse(cls, text: str) -> "MLSDim":
        m = _DIM_RE.match(text.strip())
        if m is None:
            raise SpecError(f"malformed dim name {text!r}, expected n<k><l>")
        return cls(int(m.group(1)), int(m.group(2)))

    @property
    def name(self) -> str:
        return f"n{self.left}{self.right}"

    @property
    def is_density(self) -> bool:
        return self.left == self.right

    @property
    def transposed(self) -> "MLSDim":
        return MLSDim(self.right, self.left)

    def __str__(self) -> str:
        return self.name


GROUND = MLSDim(0, 0)


def _as_dim(dim: MLSDim | str | tuple[int, int]) -> MLSDim:
    if isinstance(dim, MLSDim):
        return dim
    if isinstance(dim, str):
        return MLSDim.parse(dim)
    k, l = dim
    return MLSDim(int(k), int(l))


@dataclass(frozen=True)
class Mode:
    """A bosonic mode truncated to Fock states ``0 .. fock - 1``."""

    fock: int
    energy: float = 0.0
    name: str = ""


@dataclass(frozen=True)
class SystemSpec:
    n_systems: int
    d_levels: int
    dims: tuple[MLSDim, ...]
    cutoffs: tuple[int, ...]
    level_energies: tuple[float, ...]
    modes: tuple[Mode, ...] = ()

    def dim_position(self, dim: MLSDim | str) -> int | None:
        """Column of ``dim`` in the count table, ``None`` for the implicit ground.

        Raises ``KeyError`` for dims that are neither tracked nor ``n00``.
        """
        dim = _as_dim(dim)
        if dim == GROUND:
            return None
        try:
            return self.dims.index(dim)
        except ValueError:
            raise KeyError(dim.name) from None

    def is_tracked(self, dim: MLSDim | str) -> bool:
        dim = _as_dim(dim)
        return dim == GROUND or dim in self.dims

    @property
    def m_effective(self) -> int:
        """Number of distinct counts including the implicit ``n00``."""
        return len(self.dims) + 1

    def mode_index(self, mode: int | str) -> int:
        if isinstance(mode, str):
            for i, m in enumerate(self.modes):
                if m.name == mode:
                    return i
            raise KeyError(mode)
        if not 0 <= mode < len(self.modes):
            raise KeyError(mode)
        return mode


def define_system(
    n_systems: int,
    d_levels: int,
    dims: Sequence[MLSDim | str | tuple[int, int]],
    cutoffs: int | Sequence[int] | None = None,
    level_energies: Sequence[float] | None = None,
    modes: Sequence[Mode | tuple[int, float]] = (),
) -> SystemSpec:
    """Validate a declaration of N identical systems plus bosonic modes.

    ``cutoffs`` gives the number of allowed values per dim (max count + 1) and
    defaults to ``N + 1`` (no truncation).  ``level_energies`` has one entry per
    level, the ground level usually at 0.
    """
    if n_systems < 0:
        raise SpecError("number of systems must be non-negative")
    if d_levels < 2:
        raise SpecError("need at least two levels per system")
    parsed = [_as_dim(d) for d in dims]
    if not parsed:
        raise SpecError("dim list is empty")
    seen = set()
    for d in parsed:
        if d == GROUND:
            raise SpecError("n00 is the implicit ground density and cannot be declared")
        if d.left >= d_levels or d.right >= d_levels:
            raise SpecError(f"{d.name} references a level >= {d_levels}")
        if d in seen:
            raise SpecError(f"duplicate dim {d.name}")
        seen.add(d)

    if cutoffs is None:
        cuts = [n_systems + 1] * len(parsed)
    elif isinstance(cutoffs, (int, np.integer)):
        cuts = [int(cutoffs)] * len(parsed)
    else:
        cuts = [int(c) for c in cutoffs]
        if len(cuts) != len(parsed):
            raise SpecError("one cutoff per dim required")
    for d, c in zip(parsed, cuts):
        if c < 1:
            raise SpecError(f"cutoff of {d.name} must be >= 1")
        if c > n_systems + 1:
            raise SpecError(f"cutoff of {d.name} exceeds N + 1 = {n_systems + 1}")

    if level_energies is None:
        energies = (0.0,) * d_levels
    else:
        energies = tuple(float(e) for e in level_energies)
        if len(energies) != d_levels:
            raise SpecError(f"expected {d_levels} level energies, got {len(energies)}")

    mode_objs = []
    for i, m in enumerate(modes):
        if not isinstance(m, Mode):
            fock, energy = m
            m = Mode(int(fock), float(energy), f"m{i}")
        if m.fock < 1:
            raise SpecError(f"mode {i} needs a Fock cutoff >= 1")
        if not m.name:
            m = Mode(m.fock, m.energy, f"m{i}")
        mode_objs.append(m)
    names = [m.name for m in mode_objs]
    if len(set(names)) != len(names):
        raise SpecError("duplicate mode name")

    return SystemSpec(
        n_systems=int(n_systems),
        d_levels=int(d_levels),
        dims=tuple(parsed),
        cutoffs=tuple(cuts),
        level_energies=energies,
        modes=tuple(mode_objs),
    )


def dimension_count(n_systems: int, m: int) -> int:
    """Number of count configurations of N systems over m matrices, C(N+m-1, N)."""
    if n_systems < 0 or m < 1:
        raise ValueError("need N >= 0 and m >= 1")
    return math.comb(n_systems + m - 1, n_systems)


@dataclass(frozen=True)
class MultiIndex:
    """Counts of the tracked dims plus per-mode ``(ket, bra)`` Fock indices.

    The coefficient of a state is ``tr[P rho]``, so ``n_kl`` addresses the
    element ``<l| rho |k>`` of one system and ``(ket, bra) = (m, m')`` the
    mode element ``<m| rho |m'>``.
    """

    mls: tuple[int, ...]
    kets: tuple[int, ...] = ()
    bras: tuple[int, ...] = ()

    @property
    def qnumbers(self) -> tuple[int, ...]:
        out = list(self.mls)
        for k, b in zip(self.kets, self.bras):
            out += [k, b]
        return tuple(out)

    @classmethod
    def from_qnumbers(cls, spec: SystemSpec, q: Sequence[int]) -> "MultiIndex":
        nd, nm = len(spec.dims), len(spec.modes)
        if len(q) != nd + 2 * nm:
            raise SpecError(f"expected {nd + 2 * nm} quantum numbers, got {len(q)}")
        q = [int(v) for v in q]
        return cls(tuple(q[:nd]), tuple(q[nd::2]), tuple(q[nd + 1 :: 2]))


def _enumerate_counts(n: int, cutoffs: Sequence[int]) -> np.ndarray:
    """All count vectors with ``0 <= c_j < cutoffs[j]`` and ``sum <= n``, lexicographic."""
    dtype = np.int16 if n < 2**14 else np.int64
    d = len(cutoffs)
    # tail[j, s]: number of ways to fill dims j.. with total <= s
    tail = np.ones((d + 1, n + 1), dtype=np.int64)
    s = np.arange(n + 1)
    for j in range(d - 1, -1, -1):
        csum = np.concatenate(([0], np.cumsum(tail[j + 1])))
        tail[j] = csum[s + 1] - csum[np.maximum(s - cutoffs[j] + 1, 0)]
    states = np.empty((int(tail[0, n]), d), dtype=dtype, order="F")
    used = np.zeros(1, dtype=np.int64)
    for j, c in enumerate(cutoffs):
        reps = np.minimum(c - 1, n - used) + 1
        starts = np.repeat(np.cumsum(reps) - reps, reps)
        vals = np.arange(starts.size, dtype=np.int64) - starts
        if j == d - 1:
            states[:, j] = vals
            break
        used = np.repeat(used, reps) + vals
        # each prefix value covers all completions of its subtree
        states[:, j] = np.repeat(vals, tail[j + 1, n - used])
    return states


class SymBasis:
    """Ordered symmetric basis with a bijective linear index.

    Immutable after construction.  A basis may be a restriction of the full
    enumeration to a sorted subset of states (see ``restrict``); operator
    assembly requires the full enumeration.
    """

    def __init__(self, spec: SystemSpec, mls_states: np.ndarray, kept: np.ndarray | None = None):
        self.spec = spec
        self.mls_states = mls_states
        self.mls_states.setflags(write=False)
        self.mode_radices = tuple(r for m in spec.modes for r in (m.fock, m.fock))
        self.n_mode_states = int(np.prod(self.mode_radices, dtype=object)) if spec.modes else 1
        self.n_mls = mls_states.shape[0]
        self.full_size = self.n_mls * self.n_mode_states
        if self.full_size >= _INDEX_LIMIT:
            raise OverflowError("basis size exceeds the 64-bit index space")
        if kept is not None:
            kept = np.asarray(kept, dtype=np.int64)
            if kept.size and (np.any(np.diff(kept) <= 0) or kept[0] < 0 or kept[-1] >= self.full_size):
                raise SpecError("kept indices must be sorted, unique and in range")
            kept.setflags(write=False)
        self.kept = kept

    # -- sizes and ordering -------------------------------------------------
    def __len__(self) -> int:
        return self.full_size if self.kept is None else int(self.kept.size)

    @property
    def is_full(self) -> bool:
        return self.kept is None

    @cached_property
    def _full_indices(self) -> np.ndarray:
        if self.kept is None:
            return np.arange(self.full_size, dtype=np.int64)
        return self.kept

    @cached_property
    def _mls_strides(self) -> np.ndarray:
        cuts = self.spec.cutoffs
        prod = 1
        for c in cuts:
            prod *= c
        if prod >= _INDEX_LIMIT:
            raise OverflowError("multi-level index space exceeds 64 bits")
        strides = np.ones(len(cuts), dtype=np.int64)
        for j in range(len(cuts) - 2, -1, -1):
            strides[j] = strides[j + 1] * cuts[j + 1]
        return strides

    @cached_property
    def _mls_keys(self) -> np.ndarray:
        return self.mls_states.astype(np.int64) @ self._mls_strides

    def mls_lookup(self, counts: np.ndarray) -> np.ndarray:
        """Row positions of count vectors in the multi-level table, -1 when absent."""
        counts = np.atleast_2d(np.asarray(counts, dtype=np.int64))
        cuts = np.asarray(self.spec.cutoffs, dtype=np.int64)
        ok = np.all((counts >= 0) & (counts < cuts), axis=1)
        ok &= counts.sum(axis=1) <= self.spec.n_systems
        keys = np.where(ok, counts @ self._mls_strides, 0)
        pos = np.searchsorted(self._mls_keys, keys)
        pos = np.minimum(pos, self.n_mls - 1)
        ok &= self._mls_keys[pos] == keys
        return np.where(ok, pos, -1)

    @cached_property
    def _mode_strides(self) -> np.ndarray:
        r = self.mode_radices
        strides = np.ones(len(r), dtype=np.int64)
        for j in range(len(r) - 2, -1, -1):
            strides[j] = strides[j + 1] * r[j + 1]
        return strides

    def _full_to_local(self, full: np.ndarray) -> np.ndarray:
        if self.kept is None:
            return full
        pos = np.searchsorted(self.kept, full)
        pos = np.minimum(pos, max(len(self) - 1, 0))
        hit = (self.kept[pos] == full) if len(self) else np.zeros_like(full, dtype=bool)
        return np.where(hit & (full >= 0), pos, -1)

    # -- per-state tables ---------------------------------------------------
    @cached_property
    def counts(self) -> np.ndarray:
        """Tracked counts per state, shape ``(len, n_dims)``."""
        return self.mls_states[self._full_indices // self.n_mode_states]

    @cached_property
    def mode_digits(self) -> np.ndarray:
        """Fock indices per state as columns ``ket0, bra0, ket1, bra1, ...``."""
        local = self._full_indices % self.n_mode_states
        out = np.empty((local.size, len(self.mode_radices)), dtype=np.int64)
        for j, s in enumerate(self._mode_strides):
            out[:, j] = (local // s) % self.mode_radices[j]
        return out

    def count_of(self, dim: MLSDim | str) -> np.ndarray:
        """Value of ``n_kl`` for every state, including the implicit ``n00``."""
        pos = self.spec.dim_position(dim)
        if pos is None:
            return self.spec.n_systems - self.counts.sum(axis=1, dtype=np.int64)
        return self.counts[:, pos].astype(np.int64)

    def mode_kets(self, mode: int) -> np.ndarray:
        return self.mode_digits[:, 2 * mode]

    def mode_bras(self, mode: int) -> np.ndarray:
        return self.mode_digits[:, 2 * mode + 1]

    @cached_property
    def density_mask(self) -> np.ndarray:
        """True where every polarization count is zero and every mode has ket == bra."""
        mask = np.ones(len(self), dtype=bool)
        for j, d in enumerate(self.spec.dims):
            if not d.is_density:
                mask &= self.counts[:, j] == 0
        digits = self.mode_digits
        for mu in range(len(self.spec.modes)):
            mask &= digits[:, 2 * mu] == digits[:, 2 * mu + 1]
        mask.setflags(write=False)
        return mask

    @cached_property
    def transpose_index(self) -> np.ndarray:
        """Index of the adjoint partner ``{n_lk}; m', m`` of each state, -1 if absent."""
        spec = self.spec
        counts = self.counts.astype(np.int64)
        t_counts = np.zeros_like(counts)
        absent = np.zeros(len(self), dtype=bool)
        for j, d in enumerate(spec.dims):
            tdim = d.transposed
            if tdim in spec.dims:
                t_counts[:, spec.dims.index(tdim)] = counts[:, j]
            else:
                absent |= counts[:, j] > 0
        mls_pos = self.mls_lookup(t_counts)
        absent |= mls_pos < 0
        digits = self.mode_digits.copy()
        digits[:, 0::2], digits[:, 1::2] = self.mode_digits[:, 1::2], self.mode_digits[:, 0::2]
        mode_local = digits @ self._mode_strides if len(self.mode_radices) else np.zeros(len(self), np.int64)
        full = np.where(absent, -1, np.maximum(mls_pos, 0) * self.n_mode_states + mode_local)
        out = self._full_to_local(full)
        out.setflags(write=False)
        return out

    # -- index map ----------------------------------------------------------
    def index(self, query: MultiIndex | Sequence[int]) -> int | None:
        """Linear index of a state, ``None`` when it lies outside the basis."""
        if not isinstance(query, MultiIndex):
            query = MultiIndex.from_qnumbers(self.spec, query)
        spec = self.spec
        if len(query.mls) != len(spec.dims) or len(query.kets) != len(spec.modes) or len(query.bras) != len(spec.modes):
            raise SpecError("MultiIndex shape does not match the system")
        pos = int(self.mls_lookup(np.array(query.mls, dtype=np.int64))[0])
        if pos < 0:
            return None
        local = 0
        for mu, m in enumerate(spec.modes):
            k, b = query.kets[mu], query.bras[mu]
            if not (0 <= k < m.fock and 0 <= b < m.fock):
                return None
            local = (local * m.fock + k) * m.fock + b
        full = pos * self.n_mode_states + local
        out = int(self._full_to_local(np.array([full]))[0])
        return None if out < 0 else out

    def state(self, i: int) -> MultiIndex:
        """MultiIndex of linear index ``i``."""
        if not 0 <= i < len(self):
            raise IndexError(f"state index {i} out of range [0, {len(self)})")
        mls = tuple(int(v) for v in self.counts[i])
        d = self.mode_digits[i]
        return MultiIndex(mls, tuple(int(v) for v in d[0::2]), tuple(int(v) for v in d[1::2]))

    def __getitem__(self, i: int) -> MultiIndex:
        return self.state(i)

    def __iter__(self) -> Iterator[MultiIndex]:
        for i in range(len(self)):
            yield self.state(i)

    @property
    def states(self) -> list[MultiIndex]:
        return list(self)

    def restrict(self, indices: Iterable[int]) -> "SymBasis":
        """Sub-basis keeping the given (local) indices, order preserved."""
        local = np.unique(np.asarray(list(indices), dtype=np.int64))
        if local.size and (local[0] < 0 or local[-1] >= len(self)):
            raise IndexError("restriction index out of range")
        return SymBasis(self.spec, self.mls_states, self._full_indices[local])

    def __repr__(self) -> str:
        return f"SymBasis(N={self.spec.n_systems}, dims={[d.name for d in self.spec.dims]}, size={len(self)})"


def enumerate_basis(spec: SystemSpec) -> SymBasis:
    """Enumerate every state allowed by the cutoffs and ``sum(n_kl) <= N``."""
    prod = 1
    for c in spec.cutoffs:
        prod *= c
    if prod >= _INDEX_LIMIT:
        raise OverflowError("multi-level index space exceeds 64 bits")
    return SymBasis(spec, _enumerate_counts(spec.n_systems, spec.cutoffs))


def is_density_element(spec: SystemSpec, state: MultiIndex) -> bool:
    for d, c in zip(spec.dims, state.mls):
        if not d.is_density and c != 0:
            return False
    return all(k == b for k, b in zip(state.kets, state.bras))
