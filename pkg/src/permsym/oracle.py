"""Dense full-Hilbert-space reference for small systems.

Every multi-level system and mode is kept explicitly; the Liouvillian is a
dense matrix acting on the row-major vectorization of ``rho`` so that
``vec(A rho B) = kron(A, B.T) vec(rho)``.  The physics of each term is coded
here from its operator definition, independently of the symmetric assembly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np
import scipy.sparse as sp

from .basis import GROUND, SpecError, SymBasis, SystemSpec
from .integrate import fixed_step_count, rk4_step
from . import templates as T

__all__ = [
    "HILBERT_LIMIT",
    "OracleSizeError",
    "DenseModel",
    "DeviationReport",
    "build_dense_model",
    "multiset_permutations",
    "multiplicity",
    "projection_matrix",
    "symmetrize_project",
    "reconstruct",
    "dense_evolve",
    "dense_expectation",
    "compare_runs",
]

HILBERT_LIMIT = 64


class OracleSizeError(ValueError):
    """The full Hilbert space exceeds the dense oracle's size bound."""


def _kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


@dataclass
class DenseModel:
    """Explicit operators on ``(levels^N) x prod(fock)`` and the dense Liouvillian."""

    spec: SystemSpec
    hamiltonian: np.ndarray = None
    channels: list = field(default_factory=list)  # (jump, rate): rate (J rho J+ - {J+J, rho}/2)
    extra: np.ndarray = None  # superoperator pieces with no Hamiltonian/jump form

    def __post_init__(self):
        d = self.dim
        if d > HILBERT_LIMIT:
            raise OracleSizeError(f"Hilbert dimension {d} exceeds the oracle bound {HILBERT_LIMIT}")
        if self.hamiltonian is None:
            self.hamiltonian = np.zeros((d, d), dtype=complex)
        if self.extra is None:
            self.extra = np.zeros((d * d, d * d), dtype=complex)

    @property
    def spin_dim(self) -> int:
        return self.spec.d_levels**self.spec.n_systems

    @property
    def mode_dim(self) -> int:
        return int(np.prod([m.fock for m in self.spec.modes], dtype=np.int64)) if self.spec.modes else 1

    @property
    def dim(self) -> int:
        return self.spin_dim * self.mode_dim

    def sigma(self, site: int, k: int, l: int) -> np.ndarray:
        """``|k><l|`` on one multi-level system, identity elsewhere."""
        d = self.spec.d_levels
        local = np.zeros((d, d), dtype=complex)
        local[k, l] = 1.0
        mats = [np.eye(d)] * self.spec.n_systems
        mats = list(mats)
        mats[site] = local
        mats.append(np.eye(self.mode_dim))
        return _kron_all(mats)

    def collective(self, k: int, l: int) -> np.ndarray:
        return sum(self.sigma(i, k, l) for i in range(self.spec.n_systems))

    def lowering(self, mode: int) -> np.ndarray:
        mats = [np.eye(self.spin_dim)]
        for mu, m in enumerate(self.spec.modes):
            if mu == mode:
                mats.append(np.diag(np.sqrt(np.arange(1, m.fock, dtype=float)), 1))
            else:
                mats.append(np.eye(m.fock))
        return _kron_all(mats)

    def raising(self, mode: int) -> np.ndarray:
        return self.lowering(mode).conj().T

    def superop(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """Matrix of ``rho -> left rho right`` on row-major ``vec(rho)``."""
        return np.kron(left, right.T)

    @cached_property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def liouvillian(self) -> np.ndarray:
        eye = self.identity
        h = self.hamiltonian
        out = -1j * (self.superop(h, eye) - self.superop(eye, h))
        for jump, rate in self.channels:
            jd = jump.conj().T
            jdj = jd @ jump
            out = out + rate * (self.superop(jump, jd) - 0.5 * self.superop(jdj, eye) - 0.5 * self.superop(eye, jdj))
        return out + self.extra

    def swap_spins(self, i: int, j: int) -> np.ndarray:
        """Permutation operator exchanging multi-level systems ``i`` and ``j``."""
        d, n = self.spec.d_levels, self.spec.n_systems
        perm = np.zeros((self.dim, self.dim))
        for digits in itertools.product(range(d), repeat=n):
            swapped = list(digits)
            swapped[i], swapped[j] = swapped[j], swapped[i]
            a = _spin_index(digits, d)
            b = _spin_index(swapped, d)
            for m in range(self.mode_dim):
                perm[b * self.mode_dim + m, a * self.mode_dim + m] = 1.0
        return perm


def _spin_index(digits, d: int) -> int:
    idx = 0
    for x in digits:
        idx = idx * d + x
    return idx


def _factor(model: DenseModel, f: T.OpFactor) -> np.ndarray:
    if f.kind == "J":
        return model.collective(f.a, f.b)
    if f.kind == "b":
        return model.lowering(f.a)
    return model.raising(f.a)


_MODE_DENSE = {
    "bL": lambda b, bd, e: (b, e),
    "bR": lambda b, bd, e: (e, b),
    "bdL": lambda b, bd, e: (bd, e),
    "bdR": lambda b, bd, e: (e, bd),
    "bdbL": lambda b, bd, e: (bd @ b, e),
    "bdbR": lambda b, bd, e: (e, bd @ b),
    "bbdL": lambda b, bd, e: (b @ bd, e),
    "bbdR": lambda b, bd, e: (e, b @ bd),
    "bL_bdR": lambda b, bd, e: (b, bd),
    "bdL_bR": lambda b, bd, e: (bd, b),
}


def _add_term(model: DenseModel, term) -> None:
    n = model.spec.n_systems
    if isinstance(term, T.MlsH0):
        model.hamiltonian += term.omega * model.collective(term.dim.left, term.dim.left)
    elif isinstance(term, T.ModeH0):
        b = model.lowering(term.mode)
        model.hamiltonian += term.omega * (b.conj().T @ b)
    elif isinstance(term, T.MlsModeRWA):
        x, y = term.pol.left, term.pol.right
        b = model.lowering(term.mode)
        model.hamiltonian += term.g * (model.collective(x, y) @ b.conj().T + model.collective(y, x) @ b)
    elif isinstance(term, T.MlsModeNonRWA):
        x, y = term.pol.left, term.pol.right
        b = model.lowering(term.mode)
        model.hamiltonian += term.g * (model.collective(x, y) + model.collective(y, x)) @ (b + b.conj().T)
    elif isinstance(term, T.MlsCohDrive):
        x, y = term.pol.left, term.pol.right
        model.hamiltonian += term.amplitude * (model.collective(x, y) + model.collective(y, x))
    elif isinstance(term, T.ModeCohDrive):
        b = model.lowering(term.mode)
        model.hamiltonian += term.amplitude * (b + b.conj().T)
    elif isinstance(term, T.LindbladRelaxMLS):
        x, y = term.source.left, term.target.left
        for i in range(n):
            model.channels.append((model.sigma(i, y, x), 2.0 * term.rate))
    elif isinstance(term, T.LindbladDephMLS):
        # -rate * sum_i s_yy rho s_xx for coherence dim n_xy
        x, y = term.dim.left, term.dim.right
        for i in range(n):
            model.extra += -term.rate * model.superop(model.sigma(i, y, y), model.sigma(i, x, x))
    elif isinstance(term, T.LindbladMode):
        model.channels.append((model.lowering(term.mode), 2.0 * term.rate))
    elif isinstance(term, T.LindbladModeThermal):
        b = model.lowering(term.mode)
        model.channels.append((b, 2.0 * term.rate * (term.nbar + 1.0)))
        if term.nbar:
            model.channels.append((b.conj().T, 2.0 * term.rate * term.nbar))
    elif isinstance(term, T.Hamiltonian):
        prod = model.identity.copy()
        for f in term.factors:
            prod = prod @ _factor(model, f)
        h = term.coef * prod
        if term.hc:
            h = h + h.conj().T
        model.hamiltonian += h
    elif isinstance(term, T.ArrowNonconnecting):
        x, y = term.dim.left, term.dim.right
        for i in range(n):
            model.extra += term.c * model.superop(model.sigma(i, y, y), model.sigma(i, x, x))
    elif isinstance(term, T.ArrowConnecting):
        # raises n_{x l}, lowers n_{y k}: rho -> sum_i s_kl rho s_xy
        x, l = term.inc.left, term.inc.right
        y, k = term.dec.left, term.dec.right
        for i in range(n):
            model.extra += term.c * model.superop(model.sigma(i, k, l), model.sigma(i, x, y))
    elif isinstance(term, T.Collective):
        j = model.collective(term.x, term.y)
        if term.side == "left":
            model.extra += term.c * model.superop(j, model.identity)
        else:
            model.extra += term.c * model.superop(model.identity, j)
    elif isinstance(term, T.ModeElementary):
        b = model.lowering(term.mode)
        left, right = _MODE_DENSE[term.op](b, b.conj().T, model.identity)
        model.extra += term.c * model.superop(left, right)
    else:
        raise SpecError(f"oracle has no dense form for {term!r}")


def build_dense_model(spec: SystemSpec, terms) -> DenseModel:
    """Dense model with the Hamiltonian, jump channels and raw pieces of ``terms``."""
    model = DenseModel(spec)
    for term in terms:
        T.validate_term(spec, term)
        _add_term(model, term)
    return model


# -- projection onto the symmetric basis ------------------------------------
def multiset_permutations(items):
    """Distinct orderings of a multiset, in lexicographic order of the sorted input."""
    pool = sorted(items)
    n = len(pool)
    if n == 0:
        yield ()
        return
    counts: dict = {}
    for x in pool:
        counts[x] = counts.get(x, 0) + 1
    keys = sorted(counts)
    current = []

    def rec():
        if len(current) == n:
            yield tuple(current)
            return
        for k in keys:
            if counts[k]:
                counts[k] -= 1
                current.append(k)
                yield from rec()
                current.pop()
                counts[k] += 1

    yield from rec()


def _pairs_of(spec: SystemSpec, counts) -> list:
    pairs = []
    n_tracked = 0
    for dim, c in zip(spec.dims, counts):
        pairs += [(dim.left, dim.right)] * int(c)
        n_tracked += int(c)
    pairs += [(GROUND.left, GROUND.right)] * (spec.n_systems - n_tracked)
    return pairs


def projection_matrix(model: DenseModel, basis: SymBasis) -> sp.csr_matrix:
    """Sparse matrix mapping row-major ``vec(rho)`` to ``P[s] = tr[P_s rho]``.

    For ``P_s = sum over arrangements of (x) s_{k_i l_i} (x) |m'><m|`` the trace
    picks ``rho[(l, m), (k, m')]``.
    """
    spec = model.spec
    if basis.spec is not spec and basis.spec != spec:
        raise SpecError("basis and dense model describe different systems")
    d = spec.d_levels
    dim = model.dim
    mode_dim = model.mode_dim
    rows, cols = [], []
    focks = [m.fock for m in spec.modes]
    cache: dict = {}
    for s in range(len(basis)):
        st = basis.state(s)
        if st.mls not in cache:
            arrangements = []
            for arr in multiset_permutations(_pairs_of(spec, st.mls)):
                row = _mixed_index([p[1] for p in arr], [d] * len(arr))
                col = _mixed_index([p[0] for p in arr], [d] * len(arr))
                arrangements.append((row, col))
            cache[st.mls] = arrangements
        m_row = _mixed_index(st.kets, focks)
        m_col = _mixed_index(st.bras, focks)
        for row, col in cache[st.mls]:
            r = row * mode_dim + m_row
            c = col * mode_dim + m_col
            rows.append(s)
            cols.append(r * dim + c)
    data = np.ones(len(rows))
    return sp.csr_matrix((data, (rows, cols)), shape=(len(basis), dim * dim))


def _mixed_index(digits, radices) -> int:
    idx = 0
    for x, r in zip(digits, radices):
        idx = idx * r + x
    return idx


def multiplicity(spec: SystemSpec, counts) -> int:
    """Number of distinct arrangements ``N! / prod(n_kl!)`` including the implicit ground count."""
    n0 = spec.n_systems - sum(int(c) for c in counts)
    out = factorial(spec.n_systems) // factorial(n0)
    for c in counts:
        out //= factorial(int(c))
    return out


def symmetrize_project(model: DenseModel, rho: np.ndarray, basis: SymBasis, proj: sp.csr_matrix | None = None) -> np.ndarray:
    """Coefficient vector ``tr[P_s rho]`` of a full density matrix."""
    rho = np.asarray(rho)
    if rho.shape != (model.dim, model.dim):
        raise OracleSizeError(f"rho has shape {rho.shape}, expected {(model.dim, model.dim)}")
    proj = projection_matrix(model, basis) if proj is None else proj
    return proj @ rho.reshape(-1)


def reconstruct(model: DenseModel, coeffs: np.ndarray, basis: SymBasis, proj: sp.csr_matrix | None = None) -> np.ndarray:
    """Permutation-symmetric full ``rho`` whose projection is ``coeffs``."""
    proj = projection_matrix(model, basis) if proj is None else proj
    weights = np.array([multiplicity(model.spec, basis.state(s).mls) for s in range(len(basis))], dtype=float)
    vec = proj.T @ (np.asarray(coeffs) / weights)
    return vec.reshape(model.dim, model.dim)


def dense_evolve(model: DenseModel, rho0: np.ndarray, dt: float, t_end: float, sample_every: int = 1, liouvillian=None):
    """RK4 on the dense Liouvillian with the same step rule as ``evolve``.

    Returns ``(times, states)`` sampled at step 0, every ``sample_every`` steps
    and at ``t_end``.
    """
    lv = model.liouvillian() if liouvillian is None else liouvillian
    y = np.asarray(rho0, dtype=complex).reshape(-1)
    steps, h = fixed_step_count(t_end, dt)
    times, states = [0.0], [y.reshape(model.dim, model.dim).copy()]

    def f(v):
        return lv @ v

    for i in range(1, steps + 1):
        y = rk4_step(f, y, h)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"dense evolution diverged at step {i}")
        if i % sample_every == 0 or i == steps:
            times.append(i * h if i < steps else t_end)
            states.append(y.reshape(model.dim, model.dim).copy())
    return np.array(times), states


def dense_expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    return complex(np.trace(op @ rho))


@dataclass
class DeviationReport:
    observables: dict
    coefficients: float

    @property
    def max_deviation(self) -> float:
        return max([self.coefficients, *self.observables.values()])

    def passed(self, tol: float) -> bool:
        return self.max_deviation < tol

    def lines(self) -> list[str]:
        out = [f"{name}: max |reduced - dense| = {v:.3e}" for name, v in self.observables.items()]
        out.append(f"coefficients: max |reduced - project(dense)| = {self.coefficients:.3e}")
        return out


def compare_runs(
    basis: SymBasis,
    model: DenseModel,
    reduced_times,
    reduced_states,
    dense_times,
    dense_states,
    observables: dict,
) -> DeviationReport:
    """Compare a reduced and a dense trajectory on a common time grid.

    ``observables`` maps a name to ``(reduced_functional, dense_operator)``;
    the reduced functional is called on coefficient vectors.
    """
    rt = np.asarray(reduced_times, dtype=float)
    dt_ = np.asarray(dense_times, dtype=float)
    if rt.shape != dt_.shape or not np.allclose(rt, dt_, rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(rt))) if rt.size else 1.0)):
        raise ValueError("reduced and dense trajectories are on different time grids")
    proj = projection_matrix(model, basis)
    obs = {name: 0.0 for name in observables}
    coeff_dev = 0.0
    for p, rho in zip(reduced_states, dense_states):
        coeff_dev = max(coeff_dev, float(np.max(np.abs(proj @ rho.reshape(-1) - p))))
        for name, (fn, op) in observables.items():
            obs[name] = max(obs[name], abs(fn(p) - dense_expectation(op, rho)))
    return DeviationReport(obs, coeff_dev)
