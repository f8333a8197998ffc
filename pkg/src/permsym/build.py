"""Turn a parsed model document into a run and execute it."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .basis import SpecError, SymBasis, enumerate_basis
from .dynamics import (
    distribution,
    g2_zero,
    hermiticity_defect,
    mls_occupation,
    mode_occupation,
    custom_observable,
    pure_state,
    thermal_state,
    trace_functional,
)
from .integrate import IntegrationError, SolverConfig, SolverStats, evolve
from .model import ModelDocument, SolveSection, _format_term
from .operators import AssemblyError, SparseOperator
from .output import DistributionWriter, PropertyWriter
from .pruning import PruneResult, prune_reachable
from .steady import SteadyStateError, SteadyStats, steady_state
from . import templates as T

__all__ = ["BuildError", "Run", "RunReport", "build_run", "execute", "DEFAULT_MONITOR_EVERY", "DEFAULT_DT"]

DEFAULT_MONITOR_EVERY = 30
DEFAULT_DT = 1e-2
DEFAULT_PROPERTIES = "observables.dat"


class BuildError(ValueError):
    """A valid document that cannot be turned into a run."""


@dataclass
class Run:
    doc: ModelDocument
    full_basis: SymBasis
    basis: SymBasis
    liouvillian: SparseOperator
    initial: np.ndarray
    observables: list  # (label, functional)
    distributions: list  # (DistributionSpec)
    config: Optional[SolverConfig]
    steady: bool
    prune: Optional[PruneResult]
    full_nnz: int
    timings: dict = field(default_factory=dict)

    @property
    def trace(self):
        return trace_functional(self.basis)


@dataclass
class RunReport:
    basis_size: int
    full_basis_size: int
    nnz: int
    dropped: int
    timings: dict
    files: list
    steps: int = 0
    rejected: int = 0
    final_time: float = 0.0
    trace_error: float = 0.0
    hermiticity_defect: float = 0.0
    residual: Optional[float] = None
    failure: Optional[str] = None

    def lines(self) -> list[str]:
        out = [
            f"basis size: {self.basis_size}" + (f" (pruned from {self.full_basis_size})" if self.basis_size != self.full_basis_size else ""),
            f"nonzeros in L: {self.nnz}",
            f"dropped arrows: {self.dropped}",
        ]
        if self.residual is not None:
            out.append(f"steady-state residual: {self.residual:.3e}")
        else:
            out.append(f"steps: {self.steps} (rejected {self.rejected}), final time {self.final_time:.6g}")
        out.append(f"trace error: {self.trace_error:.3e}")
        out.append(f"hermiticity defect: {self.hermiticity_defect:.3e}")
        for phase, secs in self.timings.items():
            out.append(f"time {phase}: {secs:.3f} s")
        for f in self.files:
            out.append(f"wrote {f}")
        if self.failure:
            out.append(f"FAILED: {self.failure}")
        return out


def _observable(full: SymBasis, spec):
    if spec.kind == "mls_occupation":
        return mls_occupation(full, spec.arg)
    if spec.kind == "mode_occupation":
        return mode_occupation(full, spec.arg)
    if spec.kind == "g2_zero":
        return g2_zero(full, spec.arg)
    if spec.kind == "operator":
        return custom_observable(T.left_product(full, spec.arg))
    raise BuildError(f"unknown observable kind {spec.kind!r}")


def build_run(
    doc: ModelDocument,
    *,
    dt: Optional[float] = None,
    t_end: Optional[float] = None,
    steady: Optional[bool] = None,
    prune: Optional[bool] = None,
    monitor_every: Optional[int] = None,
) -> Run:
    """Assemble basis, Liouvillian, initial state and observables of ``doc``.

    Keyword arguments override the corresponding document settings.
    """
    timings = {}
    t0 = time.perf_counter()
    try:
        spec = doc.spec()
        full = enumerate_basis(spec)
    except (SpecError, OverflowError) as exc:
        raise BuildError(str(exc)) from exc
    timings["basis"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    op = SparseOperator(full)
    lines = doc.term_lines or (None,) * len(doc.terms)
    for term, line in zip(doc.terms, lines):
        try:
            T.validate_term(spec, term)
            T.add_template(term, op)
        except (SpecError, AssemblyError) as exc:
            where = f"line {line}: " if line else ""
            raise BuildError(f"{where}{term.kind}: {exc}") from exc
    op.freeze()
    timings["assembly"] = time.perf_counter() - t0

    if doc.initial is None:
        raise BuildError("document has no [initial] section")
    init = doc.initial
    try:
        if init.kind == "pure":
            dm0 = pure_state(full, init.qnumbers)
        elif init.kind == "temperature":
            dm0 = thermal_state(full, temperature=init.value)
        else:
            dm0 = thermal_state(full, beta=init.value)
    except SpecError as exc:
        raise BuildError(f"initial state: {exc}") from exc

    solve = doc.solve
    if solve is None:
        solve = SolveSection()
    is_steady = solve.steady if steady is None else steady
    do_prune = solve.prune if prune is None else prune
    out = doc.output
    cadence = monitor_every or (out.monitor_every if out and out.monitor_every else DEFAULT_MONITOR_EVERY)

    config = None
    if not is_steady:
        end = t_end if t_end is not None else solve.t_end
        if end is None:
            raise BuildError("time integration needs t_end (in [solve] or --t-end)")
        kwargs = dict(method=solve.method or "rk4", t_end=end, dt=dt or solve.dt or DEFAULT_DT, monitor_every=cadence)
        for key in ("rtol", "atol", "dt_min", "dt_max"):
            if getattr(solve, key) is not None:
                kwargs[key] = getattr(solve, key)
        try:
            config = SolverConfig(**kwargs)
        except ValueError as exc:
            raise BuildError(str(exc)) from exc

    observables = [(o.label, _observable(full, o)) for o in (out.observables if out else ())]
    dists = list(out.distributions) if out else []

    basis, L, state, pr = full, op, dm0, None
    if do_prune:
        t0 = time.perf_counter()
        pr = prune_reachable(full, op, np.nonzero(dm0)[0])
        basis, L, state = pr.basis, pr.operator, dm0[pr.kept]
        observables = [(label, fn.restrict(pr.kept)) for label, fn in observables]
        timings["pruning"] = time.perf_counter() - t0
    return Run(doc, full, basis, L, state, observables, dists, config, is_steady, pr, op.nnz, timings)


def _metadata(run: Run) -> list[str]:
    doc = run.doc
    s = doc.system
    spec = doc.spec()
    meta = [
        f"N = {s.n_systems}",
        f"levels = {s.levels}",
        "dims = " + " ".join(f"{d.name}:{c}" for d, c in zip(spec.dims, spec.cutoffs)),
        "energies = " + " ".join(repr(e) for e in spec.level_energies),
    ]
    meta += [f"mode {m.name} fock={m.fock} energy={m.energy!r}" for m in s.modes]
    meta += [f"term {_format_term(t, s.modes)}" for t in doc.terms]
    init = doc.initial
    meta.append("initial = " + ("pure " + " ".join(map(str, init.qnumbers)) if init.kind == "pure" else f"{init.kind} {init.value!r}"))
    if run.steady:
        meta.append("solve = steady")
    else:
        c = run.config
        meta.append(f"solve = {c.method} dt={c.dt!r} t_end={c.t_end!r} monitor_every={c.monitor_every}")
        if c.method == "rk_adaptive_32":
            meta.append(f"tolerances = rtol={c.rtol!r} atol={c.atol!r} dt_min={c.dt_min!r} dt_max={c.dt_max!r}")
    meta.append(f"basis_size = {len(run.basis)}")
    return meta


def execute(run: Run, out_dir: Path | str = ".") -> RunReport:
    """Solve ``run`` and write its property and distribution files.

    On failure every opened file gets a failure marker and the exception is
    re-raised with the partially filled report attached as ``exc.report``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = run.doc
    meta = _metadata(run)
    writers = []
    report = RunReport(
        basis_size=len(run.basis),
        full_basis_size=len(run.full_basis),
        nnz=run.liouvillian.nnz,
        dropped=run.liouvillian.dropped,
        timings=dict(run.timings),
        files=[],
    )
    try:
        prop_name = (doc.output.properties if doc.output and doc.output.properties else DEFAULT_PROPERTIES)
        labels = [label for label, _ in run.observables]
        prop = PropertyWriter(out_dir / prop_name, labels, meta)
        writers.append(prop)
        dist_writers = []
        for d in run.distributions:
            arg = d.arg.name if hasattr(d.arg, "name") else doc.system.modes[d.arg].name
            w = DistributionWriter(out_dir / d.filename, f"{d.kind} {arg}", meta)
            writers.append(w)
            dist_writers.append((d, w))
        trace = run.trace

        def monitor(t, dm, step):
            prop.write_row(t, [fn(dm) for _, fn in run.observables])
            for d, w in dist_writers:
                w.write_block(t, distribution(run.basis, dm, d.kind, d.arg))
            report.trace_error = max(report.trace_error, abs(trace.evaluate(dm) - 1.0))
            report.hermiticity_defect = max(report.hermiticity_defect, hermiticity_defect(run.basis, dm))

        t0 = time.perf_counter()
        if run.steady:
            st = SteadyStats()
            x = steady_state(run.liouvillian, trace, stats=st)
            report.residual = st.residual
            report.final_time = math.inf
            monitor(math.inf, x, 0)
        else:
            stats = SolverStats()
            evolve(run.liouvillian, run.initial, run.config, monitor, stats)
            report.steps, report.rejected = stats.steps, stats.rejected
            report.final_time = run.config.t_end
        report.timings["solve"] = time.perf_counter() - t0
    except (IntegrationError, SteadyStateError, OSError, ValueError) as exc:
        report.failure = str(exc)
        for w in writers:
            w.fail(str(exc))
        exc.report = report
        raise
    for w in writers:
        w.close()
    report.files = [str(w.path) for w in writers]
    return report
