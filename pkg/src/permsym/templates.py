"""Ready-made Liouvillian terms and the custom-term building blocks.

Hamiltonian terms contribute ``-i[H, rho]`` (hbar = 1) and take real physical
parameters; the factor ``-i`` is injected here.  Elementary terms
(``ArrowNonconnecting``, ``ArrowConnecting``, ``Collective``, ``ModeElementary``)
take the complex coefficient exactly as given.  Every template is additive:
adding a relaxation and a dephasing term for the same transition adds both.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import singledispatch
from typing import ClassVar, Union

import scipy.sparse as sp

from .basis import GROUND, MLSDim, SpecError, SystemSpec
from .operators import (
    MODE_KINDS,
    AssemblyError,
    SparseOperator,
    collective_matrix,
    mode_matrix,
)

__all__ = [
    "OpFactor",
    "MlsH0",
    "ModeH0",
    "MlsModeRWA",
    "MlsModeNonRWA",
    "MlsCohDrive",
    "ModeCohDrive",
    "LindbladRelaxMLS",
    "LindbladDephMLS",
    "LindbladMode",
    "LindbladModeThermal",
    "Hamiltonian",
    "ArrowNonconnecting",
    "ArrowConnecting",
    "Collective",
    "ModeElementary",
    "Term",
    "TEMPLATE_KINDS",
    "add_template",
    "validate_term",
    "assemble",
    "left_product",
]


@dataclass(frozen=True)
class OpFactor:
    """One factor of an operator product: collective ``J_xy`` or a mode ``b`` / ``b^dagger``."""

    kind: str  # "J", "b" or "bd"
    a: int
    b: int = 0

    @classmethod
    def collective(cls, x: int, y: int) -> "OpFactor":
        return cls("J", x, y)

    @classmethod
    def lower(cls, mode: int) -> "OpFactor":
        return cls("b", mode)

    @classmethod
    def raise_(cls, mode: int) -> "OpFactor":
        return cls("bd", mode)

    def dagger(self) -> "OpFactor":
        if self.kind == "J":
            return OpFactor("J", self.b, self.a)
        return OpFactor("bd" if self.kind == "b" else "b", self.a)


@dataclass(frozen=True)
class MlsH0:
    """``H = omega J_xx``."""

    kind: ClassVar[str] = "mls_h0"
    dim: MLSDim
    omega: float


@dataclass(frozen=True)
class ModeH0:
    """``H = omega b^dagger b``."""

    kind: ClassVar[str] = "mode_h0"
    mode: int
    omega: float


@dataclass(frozen=True)
class MlsModeRWA:
    """``H = g (J_xy b^dagger + J_yx b)`` for ``pol = n_xy``."""

    kind: ClassVar[str] = "mls_mode_rwa"
    pol: MLSDim
    mode: int
    g: float


@dataclass(frozen=True)
class MlsModeNonRWA:
    """``H = g (J_xy + J_yx)(b^dagger + b)``."""

    kind: ClassVar[str] = "mls_mode_nonrwa"
    pol: MLSDim
    mode: int
    g: float


@dataclass(frozen=True)
class MlsCohDrive:
    """Rotating-frame drive ``H = E (J_xy + J_yx)``."""

    kind: ClassVar[str] = "mls_coh_drive"
    pol: MLSDim
    amplitude: float


@dataclass(frozen=True)
class ModeCohDrive:
    """Rotating-frame drive ``H = E (b + b^dagger)``."""

    kind: ClassVar[str] = "mode_coh_drive"
    mode: int
    amplitude: float


@dataclass(frozen=True)
class LindbladRelaxMLS:
    """Individual decay from level x to level y.

    ``D rho = rate * sum_i (2 s_yx rho s_xy - s_xx rho - rho s_xx)``; ``rate`` is
    the half-rate (gamma / 2).  Includes the decay-induced dephasing of every
    tracked coherence that involves level x.
    """

    kind: ClassVar[str] = "lindblad_relax_mls"
    source: MLSDim
    target: MLSDim
    rate: float


@dataclass(frozen=True)
class LindbladDephMLS:
    """Single dephasing arrow ``-rate * n_xy`` on a polarization dim."""

    kind: ClassVar[str] = "lindblad_deph_mls"
    dim: MLSDim
    rate: float


@dataclass(frozen=True)
class LindbladMode:
    """``D rho = rate (2 b rho b^dagger - b^dagger b rho - rho b^dagger b)``."""

    kind: ClassVar[str] = "lindblad_mode"
    mode: int
    rate: float


@dataclass(frozen=True)
class LindbladModeThermal:
    """Mode loss into a bath with mean occupation ``nbar``."""

    kind: ClassVar[str] = "lindblad_mode_thermal"
    mode: int
    rate: float
    nbar: float


@dataclass(frozen=True)
class Hamiltonian:
    """``H = coef * F1 F2 ... Fn`` (plus its adjoint when ``hc``)."""

    kind: ClassVar[str] = "hamiltonian"
    coef: float
    factors: tuple[OpFactor, ...]
    hc: bool = False


@dataclass(frozen=True)
class ArrowNonconnecting:
    kind: ClassVar[str] = "arrow_nc"
    dim: MLSDim
    c: complex


@dataclass(frozen=True)
class ArrowConnecting:
    kind: ClassVar[str] = "arrow_c"
    inc: MLSDim
    dec: MLSDim
    c: complex


@dataclass(frozen=True)
class Collective:
    kind: ClassVar[str] = "collective"
    side: str
    x: int
    y: int
    c: complex


@dataclass(frozen=True)
class ModeElementary:
    kind: ClassVar[str] = "mode_op"
    mode: int
    op: str
    c: complex


Term = Union[
    MlsH0,
    ModeH0,
    MlsModeRWA,
    MlsModeNonRWA,
    MlsCohDrive,
    ModeCohDrive,
    LindbladRelaxMLS,
    LindbladDephMLS,
    LindbladMode,
    LindbladModeThermal,
    Hamiltonian,
    ArrowNonconnecting,
    ArrowConnecting,
    Collective,
    ModeElementary,
]

TEMPLATE_KINDS = {
    cls.kind: cls
    for cls in (
        MlsH0,
        ModeH0,
        MlsModeRWA,
        MlsModeNonRWA,
        MlsCohDrive,
        ModeCohDrive,
        LindbladRelaxMLS,
        LindbladDephMLS,
        LindbladMode,
        LindbladModeThermal,
        Hamiltonian,
        ArrowNonconnecting,
        ArrowConnecting,
        Collective,
        ModeElementary,
    )
}


# -- validation -------------------------------------------------------------
def _check_mode(spec: SystemSpec, mode: int) -> None:
    if not 0 <= mode < len(spec.modes):
        raise SpecError(f"mode id {mode} not declared")


def _check_dim(spec: SystemSpec, dim: MLSDim, *, allow_ground: bool = False) -> None:
    if dim == GROUND and allow_ground:
        return
    if dim not in spec.dims:
        raise SpecError(f"dim {dim.name} is not declared")


def _check_pol(spec: SystemSpec, pol: MLSDim) -> None:
    if pol.is_density:
        raise SpecError(f"{pol.name} is a density dim, a polarization n_xy with x != y is required")
    if pol.left >= spec.d_levels or pol.right >= spec.d_levels:
        raise SpecError(f"{pol.name} references a level >= {spec.d_levels}")


def validate_term(spec: SystemSpec, term: Term) -> None:
    """Raise ``SpecError`` when a term references dims, levels or modes the system lacks."""
    if isinstance(term, MlsH0):
        if not term.dim.is_density:
            raise SpecError(f"mls_h0 needs a density dim, got {term.dim.name}")
        _check_dim(spec, term.dim, allow_ground=True)
    elif isinstance(term, (ModeH0, ModeCohDrive, LindbladMode)):
        _check_mode(spec, term.mode)
    elif isinstance(term, LindbladModeThermal):
        _check_mode(spec, term.mode)
        if term.nbar < 0:
            raise SpecError("thermal occupation must be >= 0")
    elif isinstance(term, (MlsModeRWA, MlsModeNonRWA)):
        _check_pol(spec, term.pol)
        _check_dim(spec, term.pol)
        _check_mode(spec, term.mode)
    elif isinstance(term, MlsCohDrive):
        _check_pol(spec, term.pol)
        _check_dim(spec, term.pol)
    elif isinstance(term, LindbladRelaxMLS):
        for d in (term.source, term.target):
            if not d.is_density:
                raise SpecError(f"relaxation connects density dims, got {d.name}")
            _check_dim(spec, d, allow_ground=True)
        if term.source == term.target:
            raise SpecError("relaxation source and target coincide")
    elif isinstance(term, LindbladDephMLS):
        if term.dim.is_density:
            raise SpecError(f"dephasing acts on polarization dims, got {term.dim.name}")
        _check_dim(spec, term.dim)
    elif isinstance(term, Hamiltonian):
        if not term.factors:
            raise SpecError("hamiltonian needs at least one factor")
        for f in term.factors:
            if f.kind == "J":
                if not (0 <= f.a < spec.d_levels and 0 <= f.b < spec.d_levels):
                    raise SpecError(f"J{f.a}{f.b} references a level >= {spec.d_levels}")
            elif f.kind in ("b", "bd"):
                _check_mode(spec, f.a)
            else:
                raise SpecError(f"unknown factor kind {f.kind!r}")
    elif isinstance(term, ArrowNonconnecting):
        _check_dim(spec, term.dim, allow_ground=True)
    elif isinstance(term, ArrowConnecting):
        _check_dim(spec, term.inc, allow_ground=True)
        _check_dim(spec, term.dec, allow_ground=True)
        if term.inc == term.dec:
            raise SpecError("connecting arrow needs two different dims")
    elif isinstance(term, Collective):
        if term.side not in ("left", "right"):
            raise SpecError(f"side must be left or right, got {term.side!r}")
        if not (0 <= term.x < spec.d_levels and 0 <= term.y < spec.d_levels):
            raise SpecError(f"J{term.x}{term.y} references a level >= {spec.d_levels}")
    elif isinstance(term, ModeElementary):
        _check_mode(spec, term.mode)
        if term.op not in MODE_KINDS:
            raise SpecError(f"unknown mode operator {term.op!r}")
    else:
        raise SpecError(f"unknown term {term!r}")


# -- assembly ---------------------------------------------------------------
def _factor_matrix(op: SparseOperator, f: OpFactor, side: str) -> sp.csr_matrix:
    if f.kind == "J":
        m, dropped = collective_matrix(op.basis, side, f.a, f.b)
    else:
        kind = f.kind + ("L" if side == "left" else "R")
        m, dropped = mode_matrix(op.basis, f.a, kind)
    op.dropped += dropped
    return m


def _product_lr(op: SparseOperator, factors: tuple[OpFactor, ...]) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    # F1 F2 .. Fn rho = F1^L F2^L .. Fn^L rho ; rho F1 .. Fn = Fn^R .. F1^R rho
    left = _factor_matrix(op, factors[0], "left")
    for f in factors[1:]:
        left = left @ _factor_matrix(op, f, "left")
    right = _factor_matrix(op, factors[-1], "right")
    for f in reversed(factors[:-1]):
        right = right @ _factor_matrix(op, f, "right")
    return sp.csr_matrix(left), sp.csr_matrix(right)


def _add_hamiltonian(op: SparseOperator, coef: float, factors: tuple[OpFactor, ...], hc: bool) -> None:
    products = [factors]
    if hc:
        products.append(tuple(f.dagger() for f in reversed(factors)))
    for prod in products:
        left, right = _product_lr(op, prod)
        # -i [H, rho] = -i H rho + i rho H
        op.add_matrix(left, -1j * coef)
        op.add_matrix(right, 1j * coef)


@singledispatch
def add_template(term, op: SparseOperator) -> SparseOperator:
    """Add the arrows of ``term`` to the open operator ``op``."""
    raise AssemblyError(f"unsupported term {term!r}")


@add_template.register
def _(term: MlsH0, op):
    x = term.dim.left
    _add_hamiltonian(op, term.omega, (OpFactor.collective(x, x),), False)
    return op


@add_template.register
def _(term: ModeH0, op):
    _add_hamiltonian(op, term.omega, (OpFactor.raise_(term.mode), OpFactor.lower(term.mode)), False)
    return op


@add_template.register
def _(term: MlsModeRWA, op):
    x, y = term.pol.left, term.pol.right
    _add_hamiltonian(op, term.g, (OpFactor.collective(x, y), OpFactor.raise_(term.mode)), True)
    return op


@add_template.register
def _(term: MlsModeNonRWA, op):
    x, y = term.pol.left, term.pol.right
    _add_hamiltonian(op, term.g, (OpFactor.collective(x, y), OpFactor.raise_(term.mode)), True)
    _add_hamiltonian(op, term.g, (OpFactor.collective(x, y), OpFactor.lower(term.mode)), True)
    return op


@add_template.register
def _(term: MlsCohDrive, op):
    x, y = term.pol.left, term.pol.right
    _add_hamiltonian(op, term.amplitude, (OpFactor.collective(x, y),), True)
    return op


@add_template.register
def _(term: ModeCohDrive, op):
    _add_hamiltonian(op, term.amplitude, (OpFactor.lower(term.mode),), True)
    return op


@add_template.register
def _(term: LindbladRelaxMLS, op):
    x, y = term.source.left, term.target.left
    # 2 s_yx rho s_xy: raises n_xx, lowers n_yy
    op.add_mls_connecting(MLSDim(x, x), MLSDim(y, y), 2.0 * term.rate)
    op.add_collective("left", x, x, -term.rate)
    op.add_collective("right", x, x, -term.rate)
    return op


@add_template.register
def _(term: LindbladDephMLS, op):
    op.add_mls_nonconnecting(term.dim, -term.rate)
    return op


def _add_mode_loss(op: SparseOperator, mode: int, rate: float) -> None:
    op.add_mode_elementary(mode, "bL_bdR", 2.0 * rate)
    op.add_mode_elementary(mode, "bdbL", -rate)
    op.add_mode_elementary(mode, "bdbR", -rate)


def _add_mode_gain(op: SparseOperator, mode: int, rate: float) -> None:
    op.add_mode_elementary(mode, "bdL_bR", 2.0 * rate)
    op.add_mode_elementary(mode, "bbdL", -rate)
    op.add_mode_elementary(mode, "bbdR", -rate)


@add_template.register
def _(term: LindbladMode, op):
    _add_mode_loss(op, term.mode, term.rate)
    return op


@add_template.register
def _(term: LindbladModeThermal, op):
    _add_mode_loss(op, term.mode, term.rate * (term.nbar + 1.0))
    if term.nbar != 0:
        _add_mode_gain(op, term.mode, term.rate * term.nbar)
    return op


@add_template.register
def _(term: Hamiltonian, op):
    _add_hamiltonian(op, term.coef, term.factors, term.hc)
    return op


@add_template.register
def _(term: ArrowNonconnecting, op):
    return op.add_mls_nonconnecting(term.dim, term.c)


@add_template.register
def _(term: ArrowConnecting, op):
    return op.add_mls_connecting(term.inc, term.dec, term.c)


@add_template.register
def _(term: Collective, op):
    return op.add_collective(term.side, term.x, term.y, term.c)


@add_template.register
def _(term: ModeElementary, op):
    return op.add_mode_elementary(term.mode, term.op, term.c)


def assemble(basis, terms) -> SparseOperator:
    """Validate and add ``terms`` in order, returning the frozen Liouvillian."""
    op = SparseOperator(basis)
    for t in terms:
        validate_term(basis.spec, t)
        add_template(t, op)
    return op.freeze()


def left_product(basis, factors: tuple[OpFactor, ...]) -> SparseOperator:
    """Frozen operator ``rho -> F1 F2 ... Fn rho`` on a full basis."""
    op = SparseOperator(basis)
    left, _ = _product_lr(op, tuple(factors))
    op.add_matrix(left)
    return op.freeze()
