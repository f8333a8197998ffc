"""Parser and printer for the line-oriented model description format.

A model file has the sections ``[system]``, ``[liouvillian]``, ``[initial]``,
``[solve]`` and ``[output]``; only ``[system]`` is mandatory and each may
appear once.  ``#`` starts a comment.  Example::

    [system]
    N = 2
    levels = 2
    dims = n11 n10 n01
    energies = 0.0 1.0
    mode a fock=4 energy=1.0

    [liouvillian]
    tc_rwa pol=n01 mode=a g=1.0
    lindblad_relax_mls from=n11 to=n00 rate=0.025
    lindblad_mode mode=a rate=0.5

    [initial]
    pure = 1 0 0 0 0

    [solve]
    method = rk4
    dt = 0.01
    t_end = 10.0

    [output]
    properties = ex1.dat
    observable <J_11> = mls_occupation n11
    observable <b+b> = mode_occupation a

Rates are the exact template parameters (half-rates such as ``gamma / 2`` are
written as such, never halved by the parser).  Complex coefficients are
written ``(re, im)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .basis import GROUND, MLSDim, Mode, SpecError, SystemSpec, define_system
from . import templates as T

__all__ = [
    "ModelSyntaxError",
    "SystemSection",
    "InitialSection",
    "SolveSection",
    "ObservableSpec",
    "DistributionSpec",
    "OutputSection",
    "ModelDocument",
    "parse_model",
    "print_model",
    "TERM_ALIASES",
]

SECTIONS = ("system", "liouvillian", "initial", "solve", "output")
TERM_ALIASES = {"tc_rwa": "mls_mode_rwa", "tc_nonrwa": "mls_mode_nonrwa"}
OBSERVABLE_KINDS = ("mls_occupation", "mode_occupation", "g2_zero", "operator")
DISTRIBUTION_KINDS = ("mode_number", "mls_excitation")
SOLVE_METHODS = ("rk4", "rk_adaptive")


class ModelSyntaxError(ValueError):
    """Positioned error in a model description."""

    def __init__(self, line: int, col: int, reason: str):
        self.line = line
        self.col = col
        self.reason = reason
        super().__init__(f"line {line}, col {col}: {reason}")


# -- document ---------------------------------------------------------------
@dataclass(frozen=True)
class SystemSection:
    n_systems: int
    levels: int
    dims: tuple[MLSDim, ...]
    cutoffs: tuple[Optional[int], ...]
    energies: Optional[tuple[float, ...]] = None
    modes: tuple[Mode, ...] = ()

    def spec(self) -> SystemSpec:
        cuts = [self.n_systems + 1 if c is None else c for c in self.cutoffs]
        return define_system(self.n_systems, self.levels, self.dims, cuts, self.energies, self.modes)


@dataclass(frozen=True)
class InitialSection:
    kind: str  # "pure", "temperature" or "beta"
    qnumbers: tuple[int, ...] = ()
    value: Optional[float] = None


@dataclass(frozen=True)
class SolveSection:
    steady: bool = False
    method: Optional[str] = None
    dt: Optional[float] = None
    t_end: Optional[float] = None
    rtol: Optional[float] = None
    atol: Optional[float] = None
    dt_min: Optional[float] = None
    dt_max: Optional[float] = None
    prune: bool = False


@dataclass(frozen=True)
class ObservableSpec:
    label: str
    kind: str
    arg: object  # MLSDim, mode id, or tuple of OpFactor


@dataclass(frozen=True)
class DistributionSpec:
    filename: str
    kind: str
    arg: object


@dataclass(frozen=True)
class OutputSection:
    monitor_every: Optional[int] = None
    properties: Optional[str] = None
    observables: tuple[ObservableSpec, ...] = ()
    distributions: tuple[DistributionSpec, ...] = ()


@dataclass(frozen=True)
class ModelDocument:
    system: SystemSection
    terms: tuple = ()
    initial: Optional[InitialSection] = None
    solve: Optional[SolveSection] = None
    output: Optional[OutputSection] = None
    term_lines: tuple[int, ...] = field(default=(), compare=False)

    def spec(self) -> SystemSpec:
        return self.system.spec()

    def with_system_size(self, n_systems: int) -> "ModelDocument":
        """Same model with a different number of systems (cutoffs reset to untruncated)."""
        sysx = replace(self.system, n_systems=n_systems, cutoffs=(None,) * len(self.system.dims))
        init = self.initial
        if init is not None and init.kind == "pure":
            init = replace(init, qnumbers=tuple(min(q, n_systems) if i < len(sysx.dims) else q for i, q in enumerate(init.qnumbers)))
        return replace(self, system=sysx, initial=init)


# -- lexical helpers --------------------------------------------------------
_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(?:\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|inf|infinity)$", re.I)
_COMPLEX_RE = re.compile(r"^\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)$")
_KV_RE = re.compile(r"([A-Za-z_]\w*)\s*=\s*(\([^)]*\)?|[^\s=]+)")
_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_]\w*)\s*\]$")
_DIMTOK_RE = re.compile(r"^n(\d)(\d)(?::(\d+))?$")
_FACTOR_RE = re.compile(r"^(?:J(\d)(\d)|(bd|b)(?:_([A-Za-z_]\w*))?)$")
_NAME_RE = re.compile(r"^[A-Za-z_]\w*$")


@dataclass
class _Line:
    no: int
    text: str  # comment stripped, right-stripped
    indent: int

    def error(self, reason: str, pos: int = 0) -> ModelSyntaxError:
        return ModelSyntaxError(self.no, pos + 1, reason)


def _parse_int(tok: str, line: _Line, pos: int, what: str) -> int:
    if not _INT_RE.match(tok):
        raise line.error(f"{what}: expected an integer, got {tok!r}", pos)
    return int(tok)


def _parse_float(tok: str, line: _Line, pos: int, what: str, allow_inf: bool = False) -> float:
    if not _FLOAT_RE.match(tok):
        raise line.error(f"{what}: expected a number, got {tok!r}", pos)
    v = float(tok)
    if math.isinf(v) and not allow_inf:
        raise line.error(f"{what}: must be finite", pos)
    return v


def _parse_complex(tok: str, line: _Line, pos: int, what: str) -> complex:
    if tok.startswith("("):
        m = _COMPLEX_RE.match(tok)
        if m is None:
            raise line.error(f"{what}: malformed complex literal {tok!r}, expected (re, im)", pos)
        re_, im_ = m.group(1), m.group(2)
        return complex(_parse_float(re_, line, pos, what), _parse_float(im_, line, pos, what))
    return complex(_parse_float(tok, line, pos, what), 0.0)


def _parse_bool(tok: str, line: _Line, pos: int, what: str) -> bool:
    low = tok.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise line.error(f"{what}: expected true or false, got {tok!r}", pos)


def _parse_dim(tok: str, line: _Line, pos: int) -> MLSDim:
    m = _DIMTOK_RE.match(tok)
    if m is None or m.group(3) is not None:
        raise line.error(f"malformed dim name {tok!r}, expected n<k><l>", pos)
    return MLSDim(int(m.group(1)), int(m.group(2)))


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _fmt_complex(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return _fmt_float(c.real)
    return f"({_fmt_float(c.real)}, {_fmt_float(c.imag)})"


# -- term schema --------------------------------------------------------------
# (key, attribute, value type); type one of dim, mode, float, complex, side, J, factors, bool, modeop
_TERM_SCHEMA = {
    "mls_h0": [("dim", "dim", "dim"), ("omega", "omega", "float")],
    "mode_h0": [("mode", "mode", "mode"), ("omega", "omega", "float")],
    "mls_mode_rwa": [("pol", "pol", "dim"), ("mode", "mode", "mode"), ("g", "g", "float")],
    "mls_mode_nonrwa": [("pol", "pol", "dim"), ("mode", "mode", "mode"), ("g", "g", "float")],
    "mls_coh_drive": [("pol", "pol", "dim"), ("E", "amplitude", "float")],
    "mode_coh_drive": [("mode", "mode", "mode"), ("E", "amplitude", "float")],
    "lindblad_relax_mls": [("from", "source", "dim"), ("to", "target", "dim"), ("rate", "rate", "float")],
    "lindblad_deph_mls": [("dim", "dim", "dim"), ("rate", "rate", "float")],
    "lindblad_mode": [("mode", "mode", "mode"), ("rate", "rate", "float")],
    "lindblad_mode_thermal": [("mode", "mode", "mode"), ("rate", "rate", "float"), ("nbar", "nbar", "float")],
    "hamiltonian": [("coef", "coef", "float"), ("ops", "factors", "factors"), ("hc", "hc", "bool")],
    "arrow_nc": [("dim", "dim", "dim"), ("c", "c", "complex")],
    "arrow_c": [("inc", "inc", "dim"), ("dec", "dec", "dim"), ("c", "c", "complex")],
    "collective": [("side", "side", "side"), ("op", "J", "J"), ("c", "c", "complex")],
    "mode_op": [("kind", "op", "modeop"), ("mode", "mode", "mode"), ("c", "c", "complex")],
}
_OPTIONAL = {("hamiltonian", "hc"): False}


class _Context:
    def __init__(self):
        self.n_systems = None
        self.levels = None
        self.dims = None
        self.modes: list[Mode] = []
        self.cutoffs: list = []

    def cutoff_max(self) -> list[int]:
        return [self.n_systems if c is None else c - 1 for c in self.cutoffs]

    def mode_id(self, name: str, line: _Line, pos: int) -> int:
        for i, m in enumerate(self.modes):
            if m.name == name:
                return i
        raise line.error(f"mode {name!r} is not declared", pos)

    def check_dim(self, dim: MLSDim, line: _Line, pos: int, allow_ground: bool = True) -> None:
        if dim == GROUND and allow_ground:
            return
        if dim not in self.dims:
            raise line.error(f"dim {dim.name} is not declared in [system]", pos)


def _parse_factors(tok: str, ctx: _Context, line: _Line, pos: int) -> tuple[T.OpFactor, ...]:
    out = []
    for part in tok.split("*"):
        m = _FACTOR_RE.match(part)
        if m is None:
            raise line.error(f"malformed operator factor {part!r}, expected J<x><y>, b_<mode> or bd_<mode>", pos)
        if m.group(1) is not None:
            x, y = int(m.group(1)), int(m.group(2))
            if x >= ctx.levels or y >= ctx.levels:
                raise line.error(f"J{x}{y} references a level >= {ctx.levels}", pos)
            out.append(T.OpFactor("J", x, y))
        else:
            name = m.group(4)
            if name is None:
                if len(ctx.modes) != 1:
                    raise line.error(f"{m.group(3)} needs a mode name (b_<mode>) when {len(ctx.modes)} modes are declared", pos)
                mode = 0
            else:
                mode = ctx.mode_id(name, line, pos)
            out.append(T.OpFactor(m.group(3), mode))
    return tuple(out)


def _format_factors(factors, modes) -> str:
    parts = []
    for f in factors:
        if f.kind == "J":
            parts.append(f"J{f.a}{f.b}")
        else:
            parts.append(f"{f.kind}_{modes[f.a].name}")
    return "*".join(parts)


def _parse_term(line: _Line, ctx: _Context):
    text = line.text
    m = re.match(r"\s*(\S+)", text)
    kind_tok = m.group(1)
    kind = TERM_ALIASES.get(kind_tok, kind_tok)
    if kind not in _TERM_SCHEMA:
        raise line.error(f"unknown term {kind_tok!r}", m.start(1))
    schema = _TERM_SCHEMA[kind]
    values: dict = {}
    positions: dict = {}
    pos = m.end(1)
    for kv in _KV_RE.finditer(text, pos):
        gap = text[pos : kv.start()]
        if gap.strip():
            raise line.error(f"unexpected text {gap.strip()!r}", pos + len(gap) - len(gap.lstrip()))
        key = kv.group(1)
        if key in values:
            raise line.error(f"duplicate argument {key!r}", kv.start(1))
        values[key] = kv.group(2)
        positions[key] = kv.start(2)
        pos = kv.end()
    if text[pos:].strip():
        rest = text[pos:]
        raise line.error(f"unexpected text {rest.strip()!r}", pos + len(rest) - len(rest.lstrip()))
    known = {k for k, _, _ in schema}
    for key in values:
        if key not in known:
            raise line.error(f"unknown argument {key!r} for {kind}", positions[key] - len(key) - 1)
    kwargs = {}
    for key, attr, typ in schema:
        if key not in values:
            if (kind, key) in _OPTIONAL:
                kwargs[attr] = _OPTIONAL[(kind, key)]
                continue
            raise line.error(f"{kind} needs argument {key}=", len(text))
        tok, p = values[key], positions[key]
        if typ == "dim":
            d = _parse_dim(tok, line, p)
            if d.left >= ctx.levels or d.right >= ctx.levels:
                raise line.error(f"dim {d.name} references a level >= {ctx.levels}", p)
            ctx.check_dim(d, line, p)
            kwargs[attr] = d
        elif typ == "mode":
            kwargs[attr] = ctx.mode_id(tok, line, p)
        elif typ == "float":
            kwargs[attr] = _parse_float(tok, line, p, key)
        elif typ == "complex":
            kwargs[attr] = _parse_complex(tok, line, p, key)
        elif typ == "bool":
            kwargs[attr] = _parse_bool(tok, line, p, key)
        elif typ == "side":
            if tok not in ("left", "right"):
                raise line.error(f"side must be left or right, got {tok!r}", p)
            kwargs[attr] = tok
        elif typ == "J":
            fm = _FACTOR_RE.match(tok)
            if fm is None or fm.group(1) is None:
                raise line.error(f"expected a collective operator J<x><y>, got {tok!r}", p)
            x, y = int(fm.group(1)), int(fm.group(2))
            if x >= ctx.levels or y >= ctx.levels:
                raise line.error(f"J{x}{y} references a level >= {ctx.levels}", p)
            kwargs["x"], kwargs["y"] = x, y
        elif typ == "factors":
            kwargs[attr] = _parse_factors(tok, ctx, line, p)
        elif typ == "modeop":
            if tok not in T.MODE_KINDS:
                raise line.error(f"unknown mode operator {tok!r}", p)
            kwargs[attr] = tok
    term = T.TEMPLATE_KINDS[kind](**kwargs)
    return term


def _format_term(term, modes) -> str:
    schema = _TERM_SCHEMA[term.kind]
    parts = [term.kind]
    for key, attr, typ in schema:
        if typ == "J":
            parts.append(f"{key}=J{term.x}{term.y}")
            continue
        v = getattr(term, attr)
        if typ == "dim":
            s = v.name
        elif typ == "mode":
            s = modes[v].name
        elif typ == "float":
            s = _fmt_float(v)
        elif typ == "complex":
            s = _fmt_complex(v)
        elif typ == "bool":
            if (term.kind, key) in _OPTIONAL and v == _OPTIONAL[(term.kind, key)]:
                continue
            s = "true" if v else "false"
        elif typ == "factors":
            s = _format_factors(v, modes)
        else:
            s = str(v)
        parts.append(f"{key}={s}")
    return " ".join(parts)


# -- section parsers --------------------------------------------------------
def _split_kv(line: _Line) -> tuple[str, str, int]:
    text = line.text
    if "=" not in text:
        raise line.error("expected 'key = value'", line.indent)
    key, _, value = text.partition("=")
    key_s = key.strip()
    if not _NAME_RE.match(key_s):
        raise line.error(f"malformed key {key_s!r}", line.indent)
    vpos = len(key) + 1 + (len(value) - len(value.lstrip()))
    value = value.strip()
    if not value:
        raise line.error(f"missing value for {key_s!r}", vpos)
    return key_s, value, vpos


def _tokens(value: str, start: int):
    for m in re.finditer(r"\S+", value):
        yield m.group(0), start + m.start()


def _parse_mode_line(line: _Line, ctx: _Context) -> Mode:
    text = line.text
    m = re.match(r"\s*mode\s+(\S+)", text)
    if m is None:
        raise line.error("mode declaration needs a name: mode <name> fock=<int> energy=<float>", line.indent)
    name = m.group(1)
    if not _NAME_RE.match(name):
        raise line.error(f"malformed mode name {name!r}", m.start(1))
    if ctx.dims is None:
        raise line.error("modes must be declared after dims", line.indent)
    if any(x.name == name for x in ctx.modes):
        raise line.error(f"duplicate mode {name!r}", m.start(1))
    values, pos = {}, m.end(1)
    for kv in _KV_RE.finditer(text, pos):
        gap = text[pos : kv.start()]
        if gap.strip():
            raise line.error(f"unexpected text {gap.strip()!r}", pos + len(gap) - len(gap.lstrip()))
        if kv.group(1) in values:
            raise line.error(f"duplicate argument {kv.group(1)!r}", kv.start(1))
        values[kv.group(1)] = (kv.group(2), kv.start(2))
        pos = kv.end()
    if text[pos:].strip():
        rest = text[pos:]
        raise line.error(f"unexpected text {rest.strip()!r}", pos + len(rest) - len(rest.lstrip()))
    for key in values:
        if key not in ("fock", "energy"):
            raise line.error(f"unknown mode argument {key!r}", values[key][1] - len(key) - 1)
    if "fock" not in values:
        raise line.error("mode declaration needs fock=<int>", len(text))
    fock = _parse_int(values["fock"][0], line, values["fock"][1], "fock")
    if fock < 1:
        raise line.error("fock cutoff must be >= 1", values["fock"][1])
    energy = 0.0
    if "energy" in values:
        energy = _parse_float(values["energy"][0], line, values["energy"][1], "energy")
    return Mode(fock, energy, name)


def _parse_system(lines: list[_Line], header: _Line) -> tuple[SystemSection, _Context]:
    ctx = _Context()
    seen: dict = {}
    dims_line = None
    cutoffs: list = []
    energies = None
    for line in lines:
        stripped = line.text.strip()
        if re.match(r"mode(\s|$)", stripped):
            ctx.modes.append(_parse_mode_line(line, ctx))
            continue
        key, value, vpos = _split_kv(line)
        if key in seen:
            raise line.error(f"duplicate key {key!r}", line.indent)
        seen[key] = line
        if ctx.modes and key in ("dims", "N", "levels"):
            raise line.error(f"{key} must be declared before any mode", line.indent)
        if key == "N":
            ctx.n_systems = _parse_int(value, line, vpos, "N")
            if ctx.n_systems < 1:
                raise line.error("N must be >= 1", vpos)
        elif key == "levels":
            ctx.levels = _parse_int(value, line, vpos, "levels")
            if ctx.levels < 2:
                raise line.error("levels must be >= 2", vpos)
        elif key == "dims":
            if ctx.levels is None:
                raise line.error("levels must be declared before dims", line.indent)
            dims = []
            for tok, p in _tokens(value, vpos):
                m = _DIMTOK_RE.match(tok)
                if m is None:
                    raise line.error(f"malformed dim {tok!r}, expected n<k><l> or n<k><l>:<cutoff>", p)
                d = MLSDim(int(m.group(1)), int(m.group(2)))
                if d == GROUND:
                    raise line.error("n00 is the implicit ground density and cannot be declared", p)
                if d.left >= ctx.levels or d.right >= ctx.levels:
                    raise line.error(f"dim {d.name} references a level >= {ctx.levels}", p)
                if d in dims:
                    raise line.error(f"duplicate dim {d.name}", p)
                dims.append(d)
                cutoffs.append(None if m.group(3) is None else int(m.group(3)))
            ctx.dims = tuple(dims)
            dims_line = line
        elif key == "energies":
            energies = []
            for tok, p in _tokens(value, vpos):
                energies.append(_parse_float(tok, line, p, "energies"))
            energies = tuple(energies)
        else:
            raise line.error(f"unknown key {key!r} in [system]", line.indent)
    for req in ("N", "levels", "dims"):
        if req not in seen:
            raise header.error(f"[system] needs {req} =")
    if energies is not None and len(energies) != ctx.levels:
        raise seen["energies"].error(f"expected {ctx.levels} level energies, got {len(energies)}")
    ctx.cutoffs = cutoffs
    section = SystemSection(ctx.n_systems, ctx.levels, ctx.dims, tuple(cutoffs), energies, tuple(ctx.modes))
    try:
        section.spec()
    except SpecError as exc:
        raise dims_line.error(str(exc)) from None
    return section, ctx


def _parse_initial(lines, header, ctx) -> InitialSection:
    result = None
    for line in lines:
        key, value, vpos = _split_kv(line)
        if result is not None:
            raise line.error("[initial] takes exactly one of pure, temperature, beta", line.indent)
        if key == "pure":
            q = tuple(_parse_int(tok, line, p, "pure") for tok, p in _tokens(value, vpos))
            want = len(ctx.dims) + 2 * len(ctx.modes)
            if len(q) != want:
                raise line.error(f"pure state needs {want} quantum numbers, got {len(q)}", vpos)
            nd = len(ctx.dims)
            if any(v < 0 for v in q) or sum(q[:nd]) > ctx.n_systems or any(v > c for v, c in zip(q[:nd], ctx.cutoff_max())):
                raise line.error(f"pure state {' '.join(map(str, q))} violates the counts constraint", vpos)
            if any(q[nd + 2 * i + j] >= m.fock for i, m in enumerate(ctx.modes) for j in (0, 1)):
                raise line.error("pure state Fock index beyond the mode cutoff", vpos)
            result = InitialSection("pure", q)
        elif key == "temperature":
            t = _parse_float(value, line, vpos, "temperature")
            if t <= 0:
                raise line.error("temperature must be > 0 (use beta = inf for the ground state)", vpos)
            result = InitialSection("temperature", value=t)
        elif key == "beta":
            b = _parse_float(value, line, vpos, "beta", allow_inf=True)
            if b < 0:
                raise line.error("beta must be >= 0", vpos)
            result = InitialSection("beta", value=b)
        else:
            raise line.error(f"unknown key {key!r} in [initial]", line.indent)
    if result is None:
        raise header.error("[initial] is empty")
    return result


def _parse_solve(lines, header) -> SolveSection:
    vals: dict = {}
    where: dict = {}
    for line in lines:
        key, value, vpos = _split_kv(line)
        if key in vals:
            raise line.error(f"duplicate key {key!r}", line.indent)
        where[key] = line
        if key == "method":
            if value not in SOLVE_METHODS:
                raise line.error(f"unknown method {value!r}, expected one of {', '.join(SOLVE_METHODS)}", vpos)
            vals[key] = value
        elif key in ("steady", "prune"):
            vals[key] = _parse_bool(value, line, vpos, key)
        elif key in ("dt", "t_end", "rtol", "atol", "dt_min", "dt_max"):
            v = _parse_float(value, line, vpos, key, allow_inf=(key == "dt_max"))
            if key == "t_end" and v < 0:
                raise line.error("t_end must be >= 0", vpos)
            if key != "t_end" and v <= 0:
                raise line.error(f"{key} must be > 0", vpos)
            vals[key] = v
        else:
            raise line.error(f"unknown key {key!r} in [solve]", line.indent)
    if vals.get("steady") and "method" in vals:
        raise where["method"].error("choose one solve mode: steady = true conflicts with method")
    return SolveSection(**vals)


def _parse_output(lines, header, ctx) -> OutputSection:
    monitor = props = None
    observables, distributions = [], []
    labels, files = set(), set()
    for line in lines:
        stripped = line.text.strip()
        m = re.match(r"(observable|distribution)\s+(\S+)\s*=\s*(\S+)(?:\s+(\S+))?\s*$", stripped)
        if re.match(r"(observable|distribution)(\s|$)", stripped):
            if m is None:
                raise line.error(f"expected '{stripped.split()[0]} <name> = <kind> <argument>'", line.indent)
            what, name, kind, arg = m.groups()
            base = line.indent
            argpos = base + m.start(4) if arg is not None else len(line.text)
            kindpos = base + m.start(3)
            if arg is None:
                raise line.error(f"{kind} needs an argument", argpos)
            if what == "observable":
                if kind not in OBSERVABLE_KINDS:
                    raise line.error(f"unknown observable kind {kind!r}", kindpos)
                if name in labels:
                    raise line.error(f"duplicate observable label {name!r}", base + m.start(2))
                labels.add(name)
                observables.append(ObservableSpec(name, kind, _observable_arg(kind, arg, ctx, line, argpos)))
            else:
                if kind not in DISTRIBUTION_KINDS:
                    raise line.error(f"unknown distribution kind {kind!r}", kindpos)
                if name in files:
                    raise line.error(f"duplicate distribution file {name!r}", base + m.start(2))
                files.add(name)
                distributions.append(DistributionSpec(name, kind, _observable_arg(kind, arg, ctx, line, argpos)))
            continue
        key, value, vpos = _split_kv(line)
        if key == "monitor_every":
            if monitor is not None:
                raise line.error("duplicate key 'monitor_every'", line.indent)
            monitor = _parse_int(value, line, vpos, "monitor_every")
            if monitor < 1:
                raise line.error("monitor_every must be >= 1", vpos)
        elif key == "properties":
            if props is not None:
                raise line.error("duplicate key 'properties'", line.indent)
            if len(value.split()) != 1:
                raise line.error("properties takes one file name", vpos)
            props = value
        else:
            raise line.error(f"unknown key {key!r} in [output]", line.indent)
    return OutputSection(monitor, props, tuple(observables), tuple(distributions))


def _observable_arg(kind: str, arg: str, ctx: _Context, line: _Line, pos: int):
    if kind in ("mls_occupation", "mls_excitation"):
        d = _parse_dim(arg, line, pos)
        if not d.is_density:
            raise line.error(f"{kind} needs a density dim, got {d.name}", pos)
        if d.left >= ctx.levels:
            raise line.error(f"dim {d.name} references a level >= {ctx.levels}", pos)
        ctx.check_dim(d, line, pos)
        return d
    if kind in ("mode_occupation", "g2_zero", "mode_number"):
        return ctx.mode_id(arg, line, pos)
    return _parse_factors(arg, ctx, line, pos)


def _format_obs_arg(kind: str, arg, modes) -> str:
    if isinstance(arg, MLSDim):
        return arg.name
    if isinstance(arg, int):
        return modes[arg].name
    return _format_factors(arg, modes)


# -- entry points -------------------------------------------------------------
def _lines(text: str) -> list[_Line]:
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if "\t" in body:
            body = body.replace("\t", " ")
        if body.strip():
            out.append(_Line(no, body, len(body) - len(body.lstrip())))
    return out


def parse_model(text: str) -> ModelDocument:
    """Parse a model description; raises ``ModelSyntaxError`` with line and column."""
    if not isinstance(text, str):
        raise TypeError("model text must be str")
    sections: dict = {}
    current = None
    for line in _lines(text):
        m = _SECTION_RE.match(line.text.strip())
        if m is not None:
            name = m.group(1)
            if name not in SECTIONS:
                raise line.error(f"unknown section [{name}]", line.indent)
            if name in sections:
                raise line.error(f"duplicate section [{name}]", line.indent)
            sections[name] = (line, [])
            current = name
            continue
        if line.text.lstrip().startswith("["):
            raise line.error("malformed section header", line.indent)
        if current is None:
            raise line.error("content before the first section header", line.indent)
        sections[current][1].append(line)
    if "system" not in sections:
        raise ModelSyntaxError(1, 1, "missing [system] section")
    system, ctx = _parse_system(sections["system"][1], sections["system"][0])
    spec = system.spec()
    terms, term_lines = [], []
    if "liouvillian" in sections:
        for line in sections["liouvillian"][1]:
            term = _parse_term(line, ctx)
            try:
                T.validate_term(spec, term)
            except SpecError as exc:
                raise line.error(str(exc), line.indent) from None
            terms.append(term)
            term_lines.append(line.no)
    initial = _parse_initial(sections["initial"][1], sections["initial"][0], ctx) if "initial" in sections else None
    solve = _parse_solve(sections["solve"][1], sections["solve"][0]) if "solve" in sections else None
    output = _parse_output(sections["output"][1], sections["output"][0], ctx) if "output" in sections else None
    return ModelDocument(system, tuple(terms), initial, solve, output, tuple(term_lines))


def print_model(doc: ModelDocument) -> str:
    """Canonical text of a document; ``parse_model(print_model(d)) == d``."""
    s = doc.system
    modes = s.modes
    out = ["[system]", f"N = {s.n_systems}", f"levels = {s.levels}"]
    dims = " ".join(d.name if c is None else f"{d.name}:{c}" for d, c in zip(s.dims, s.cutoffs))
    out.append(f"dims = {dims}")
    if s.energies is not None:
        out.append("energies = " + " ".join(_fmt_float(e) for e in s.energies))
    for m in modes:
        out.append(f"mode {m.name} fock={m.fock} energy={_fmt_float(m.energy)}")
    if doc.terms:
        out += ["", "[liouvillian]"]
        out += [_format_term(t, modes) for t in doc.terms]
    if doc.initial is not None:
        out += ["", "[initial]"]
        i = doc.initial
        if i.kind == "pure":
            out.append("pure = " + " ".join(str(q) for q in i.qnumbers))
        else:
            out.append(f"{i.kind} = {_fmt_float(i.value)}")
    if doc.solve is not None:
        out += ["", "[solve]"]
        sv = doc.solve
        if sv.steady:
            out.append("steady = true")
        if sv.method is not None:
            out.append(f"method = {sv.method}")
        for key in ("dt", "t_end", "rtol", "atol", "dt_min", "dt_max"):
            v = getattr(sv, key)
            if v is not None:
                out.append(f"{key} = {_fmt_float(v)}")
        if sv.prune:
            out.append("prune = true")
    if doc.output is not None:
        out += ["", "[output]"]
        o = doc.output
        if o.monitor_every is not None:
            out.append(f"monitor_every = {o.monitor_every}")
        if o.properties is not None:
            out.append(f"properties = {o.properties}")
        for ob in o.observables:
            out.append(f"observable {ob.label} = {ob.kind} {_format_obs_arg(ob.kind, ob.arg, modes)}")
        for di in o.distributions:
            out.append(f"distribution {di.filename} = {di.kind} {_format_obs_arg(di.kind, di.arg, modes)}")
    return "\n".join(out) + "\n"
