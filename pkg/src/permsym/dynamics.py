"""Initial states, dual-vector observables and distributions.

A density vector holds ``P[s] = tr[P_s rho]`` for every basis state ``s``;
observables are dual vectors evaluated by a plain (non-conjugating) dot
product.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import MLSDim, MultiIndex, SpecError, SymBasis, _as_dim
from .operators import SparseOperator, mode_matrix

__all__ = [
    "NonPhysicalStateWarning",
    "DualVector",
    "G2Zero",
    "pure_state",
    "thermal_state",
    "init_state",
    "trace_functional",
    "mls_occupation",
    "mode_occupation",
    "custom_observable",
    "g2_zero",
    "make_observable",
    "distribution",
    "hermiticity_defect",
]


class NonPhysicalStateWarning(UserWarning):
    """A pure basis state was requested that is a coherence, not a population."""


@dataclass(frozen=True)
class DualVector:
    """Linear functional on density vectors."""

    coeffs: np.ndarray

    def evaluate(self, dm: np.ndarray) -> complex:
        return complex(np.dot(self.coeffs, dm))

    __call__ = evaluate

    def restrict(self, kept: np.ndarray) -> "DualVector":
        """Functional on a pruned basis (dropped states carry zero amplitude)."""
        return DualVector(self.coeffs[kept])


@dataclass(frozen=True)
class G2Zero:
    """Equal-time second-order correlation ``<b+ b+ b b> / <b+ b>^2``.

    Evaluates to NaN when ``<b+ b>`` is exactly zero; ``undefined`` reports it.
    """

    numerator: DualVector
    denominator: DualVector

    def evaluate(self, dm: np.ndarray) -> complex:
        den = self.denominator.evaluate(dm)
        if den == 0:
            return complex(math.nan, 0.0)
        return self.numerator.evaluate(dm) / den**2

    __call__ = evaluate

    def undefined(self, dm: np.ndarray) -> bool:
        return self.denominator.evaluate(dm) == 0

    def restrict(self, kept: np.ndarray) -> "G2Zero":
        return G2Zero(self.numerator.restrict(kept), self.denominator.restrict(kept))


# -- initial states ---------------------------------------------------------
def pure_state(basis: SymBasis, qnumbers: MultiIndex | Sequence[int]) -> np.ndarray:
    """Unit coefficient on one basis state.

    Warns with ``NonPhysicalStateWarning`` when the state is a coherence.
    """
    idx = basis.index(qnumbers)
    if idx is None:
        raise SpecError(f"state {tuple(qnumbers) if not isinstance(qnumbers, MultiIndex) else qnumbers} is outside the basis")
    if not basis.density_mask[idx]:
        warnings.warn(
            "initial state is a coherence element, not a physical population",
            NonPhysicalStateWarning,
            stacklevel=2,
        )
    dm = np.zeros(len(basis), dtype=complex)
    dm[idx] = 1.0
    return dm


def _boltzmann(energies: Sequence[float], beta: float) -> np.ndarray:
    e = np.asarray(energies, dtype=float)
    if math.isinf(beta):
        w = (e == e.min()).astype(float)
    else:
        w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def thermal_state(basis: SymBasis, temperature: float | None = None, beta: float | None = None) -> np.ndarray:
    """Product Boltzmann state of the multi-level systems and every mode.

    Parameters
    ----------
    temperature : float, optional
        ``k_B T`` in the energy units of the level and mode energies.
    beta : float, optional
        Inverse temperature; ``math.inf`` selects the ground state.

    Notes
    -----
    The multi-level part is ``P[{n_kk}] = N! / prod(n_kk!) * prod(p_k ** n_kk)``
    on the population states; each mode is geometric in ``m``.  Both parts are
    renormalized over the truncated space.
    """
    if (temperature is None) == (beta is None):
        raise SpecError("give exactly one of temperature or beta")
    if beta is None:
        if not temperature > 0:
            raise SpecError("temperature must be > 0; use beta=inf for the ground state")
        beta = 1.0 / temperature
    if beta < 0 or math.isnan(beta):
        raise SpecError("beta must be >= 0")
    spec = basis.spec
    n = spec.n_systems
    p = _boltzmann(spec.level_energies, beta)
    # every populated excited level needs its density dim
    pos = {}
    for k in range(1, spec.d_levels):
        dim = MLSDim(k, k)
        if spec.is_tracked(dim):
            pos[k] = spec.dims.index(dim)
        elif p[k] > 0:
            raise SpecError(f"thermal state populates level {k} but {dim.name} is not tracked")

    mask = basis.density_mask
    counts = basis.counts.astype(np.int64)
    occ = np.zeros((len(basis), spec.d_levels), dtype=np.int64)
    for k, j in pos.items():
        occ[:, k] = counts[:, j]
    occ[:, 0] = basis.count_of(MLSDim(0, 0))
    with np.errstate(divide="ignore"):
        logp = np.log(p)
    log_w = math.lgamma(n + 1) - sum(np.vectorize(math.lgamma)(occ[:, k] + 1.0) for k in range(spec.d_levels))
    for k in range(spec.d_levels):
        if np.isfinite(logp[k]):
            log_w = log_w + occ[:, k] * logp[k]
        else:
            log_w = np.where(occ[:, k] > 0, -np.inf, log_w)
    weights = np.where(mask, np.exp(log_w), 0.0)
    for mu, mode in enumerate(spec.modes):
        pm = _boltzmann(mode.energy * np.arange(mode.fock), beta)
        weights = weights * pm[basis.mode_kets(mu)]
    weights = np.where(mask, weights, 0.0)
    total = weights.sum()
    if not total > 0:
        raise SpecError("thermal weights vanish on the truncated basis")
    return (weights / total).astype(complex)


def init_state(basis: SymBasis, kind: str, value) -> np.ndarray:
    """``kind`` is ``"pure"`` (value: qnumbers) or ``"thermal"`` (value: temperature, ``inf`` beta via ``"beta"``)."""
    if kind == "pure":
        return pure_state(basis, value)
    if kind == "thermal":
        return thermal_state(basis, temperature=value)
    if kind == "beta":
        return thermal_state(basis, beta=value)
    raise SpecError(f"unknown initial state kind {kind!r}")


# -- observables ------------------------------------------------------------
def trace_functional(basis: SymBasis) -> DualVector:
    return DualVector(basis.density_mask.astype(complex))


def mls_occupation(basis: SymBasis, dim: MLSDim | str) -> DualVector:
    """``<J_kk>``: the count ``n_kk`` on every population state."""
    dim = _as_dim(dim)
    if not dim.is_density:
        raise SpecError(f"occupation needs a density dim, got polarization {dim.name}")
    try:
        n = basis.count_of(dim)
    except KeyError:
        raise SpecError(f"dim {dim.name} is not tracked") from None
    return DualVector(np.where(basis.density_mask, n, 0).astype(complex))


def mode_occupation(basis: SymBasis, mode: int) -> DualVector:
    """``<b+ b>`` of one mode."""
    m = basis.mode_kets(mode)
    return DualVector(np.where(basis.density_mask, m, 0).astype(complex))


def custom_observable(op: SparseOperator, trace: DualVector | None = None) -> DualVector:
    """``<O> = t . (O^L P)``: the dual ``O^T t`` of a one-sided operator."""
    if not op.frozen:
        raise SpecError("custom observable needs a frozen operator")
    t = trace if trace is not None else trace_functional(op.basis)
    if t.coeffs.shape[0] != op.shape[0]:
        raise SpecError("operator and trace functional sizes differ")
    return DualVector(np.asarray(op.matrix.T @ t.coeffs).ravel())


def _full_basis_of(basis: SymBasis) -> SymBasis:
    return basis if basis.is_full else SymBasis(basis.spec, basis.mls_states)


def g2_zero(basis: SymBasis, mode: int) -> G2Zero:
    full = _full_basis_of(basis)
    b, _ = mode_matrix(full, mode, "bL")
    bd, _ = mode_matrix(full, mode, "bdL")
    num = SparseOperator.from_matrix(full, bd @ bd @ b @ b)
    den = SparseOperator.from_matrix(full, bd @ b)
    g = G2Zero(custom_observable(num), custom_observable(den))
    return g if basis.is_full else g.restrict(basis.kept)


def make_observable(basis: SymBasis, kind: str, arg):
    """Build an observable by name.

    ``kind`` is one of ``mls_occupation`` (arg: density dim), ``mode_occupation``
    (arg: mode id), ``custom`` (arg: frozen SparseOperator) or ``g2_zero``
    (arg: mode id).  Returns a DualVector, or a G2Zero recipe for ``g2_zero``.
    """
    if kind == "mls_occupation":
        return mls_occupation(basis, arg)
    if kind == "mode_occupation":
        return mode_occupation(basis, basis.spec.mode_index(arg))
    if kind == "custom":
        return custom_observable(arg)
    if kind == "g2_zero":
        return g2_zero(basis, basis.spec.mode_index(arg))
    raise SpecError(f"unknown observable kind {kind!r}")


def distribution(basis: SymBasis, dm: np.ndarray, kind: str, arg) -> np.ndarray:
    """Number distribution of a mode (``mode_number``) or a level (``mls_excitation``).

    Both partition the trace: entries sum to the trace functional on ``dm``.
    """
    mask = basis.density_mask
    values = np.real(dm[mask])
    if kind == "mode_number":
        mu = basis.spec.mode_index(arg)
        bins = basis.mode_kets(mu)[mask]
        size = basis.spec.modes[mu].fock
    elif kind == "mls_excitation":
        dim = _as_dim(arg)
        if not dim.is_density:
            raise SpecError(f"excitation distribution needs a density dim, got {dim.name}")
        bins = basis.count_of(dim)[mask]
        size = basis.spec.n_systems + 1
    else:
        raise SpecError(f"unknown distribution kind {kind!r}")
    return np.bincount(bins, weights=values, minlength=size)


def hermiticity_defect(basis: SymBasis, dm: np.ndarray) -> float:
    """``max_s |conj(P[s]) - P[T(s)]|`` where ``T`` swaps every ``k<->l`` and ket<->bra.

    A state whose partner is not in the basis is compared against zero.
    """
    partner = basis.transpose_index
    other = np.where(partner >= 0, dm[np.maximum(partner, 0)], 0.0)
    if dm.size == 0:
        return 0.0
    return float(np.max(np.abs(np.conj(dm) - other)))
