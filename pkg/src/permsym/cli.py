"""Command line interface: ``permsym run|examples|dims|verify``."""

from __future__ import annotations

import argparse
import importlib.resources
import sys
import warnings
from pathlib import Path

import numpy as np

from .basis import dimension_count, enumerate_basis
from .build import BuildError, build_run, execute
from .dynamics import NonPhysicalStateWarning, mls_occupation, mode_occupation
from .integrate import IntegrationError, SolverConfig, evolve
from .model import ModelDocument, ModelSyntaxError, parse_model
from .steady import SteadyStateError

EXAMPLES = ("ex1", "ex2", "ex3a", "ex3b", "ex4")


def example_text(name: str) -> str:
    if name not in EXAMPLES:
        raise KeyError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    return (importlib.resources.files("permsym") / "models" / f"{name}.model").read_text(encoding="utf-8")


def load_example(name: str) -> ModelDocument:
    return parse_model(example_text(name))


def dims_table(levels: int | None, max_n: int) -> list[str]:
    """Full versus symmetric state counts for N = 1 .. max_n.

    Two-level: ``4^N`` vs ``C(N+3, N)``; three-level: ``9^N`` vs ``C(N+8, N)``
    and the reduced laser basis ``C(N+4, N)``.
    """
    cols = ["N"]
    if levels in (None, 2):
        cols += ["full_2lvl", "sym_2lvl"]
    if levels in (None, 3):
        cols += ["full_3lvl", "sym_3lvl", "laser_3lvl"]
    rows = ["# " + " ".join(cols)]
    for n in range(1, max_n + 1):
        vals = [n]
        if levels in (None, 2):
            vals += [4**n, dimension_count(n, 4)]
        if levels in (None, 3):
            vals += [9**n, dimension_count(n, 9), dimension_count(n, 5)]
        rows.append(" ".join(str(v) for v in vals))
    return rows


def verify_example(name: str, n_systems: int, t_end: float | None = None, dt: float | None = None, out=print) -> float:
    """Run an example in the symmetric basis and with the dense oracle; return the max deviation."""
    from .oracle import build_dense_model, compare_runs, dense_evolve, symmetrize_project
    from . import templates as T

    doc = load_example(name).with_system_size(n_systems)
    spec = doc.spec()
    basis = enumerate_basis(spec)
    L = T.assemble(basis, doc.terms)
    model = build_dense_model(spec, doc.terms)
    solve = doc.solve
    t_end = t_end if t_end is not None else (solve.t_end if solve and solve.t_end else 10.0)
    dt = dt if dt is not None else (solve.dt if solve and solve.dt else 1e-2)
    dm0, rho0 = _initial_pair(doc, basis, model)
    if np.max(np.abs(symmetrize_project(model, rho0, basis) - dm0)) > 1e-12:
        raise RuntimeError("dense initial state does not project onto the symmetric initial state")

    times, states = [], []

    def record(t, dm, step):
        times.append(t)
        states.append(dm.copy())

    evolve(L, dm0, SolverConfig(method="rk4", dt=dt, t_end=t_end, monitor_every=1), record)
    dtimes, dstates = dense_evolve(model, rho0, dt, t_end)
    observables = {}
    for k in range(spec.d_levels):
        dim_name = f"n{k}{k}"
        if spec.is_tracked(dim_name):
            observables[f"<J_{k}{k}>"] = (mls_occupation(basis, dim_name), model.collective(k, k))
    for mu, mode in enumerate(spec.modes):
        b = model.lowering(mu)
        observables[f"<b+b>_{mode.name}"] = (mode_occupation(basis, mu), b.conj().T @ b)
    report = compare_runs(basis, model, times, states, dtimes, dstates, observables)
    out(f"# {name}: N={n_systems}, basis {len(basis)}, Hilbert dim {model.dim}, {len(times) - 1} RK4 steps, dt={dt:g}")
    for line in report.lines():
        out(line)
    out(f"max deviation: {report.max_deviation:.3e}")
    return report.max_deviation


def _initial_pair(doc: ModelDocument, basis, model):
    from .dynamics import pure_state, thermal_state
    from .oracle import reconstruct

    init = doc.initial
    if init.kind == "pure":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonPhysicalStateWarning)
            dm0 = pure_state(basis, init.qnumbers)
    elif init.kind == "temperature":
        dm0 = thermal_state(basis, temperature=init.value)
    else:
        dm0 = thermal_state(basis, beta=init.value)
    return dm0, reconstruct(model, dm0, basis)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--monitor-every", type=int, default=None, help="write a row every n steps (default 30)")
    p.add_argument("--out-dir", default=".", help="directory for output files")
    p.add_argument("--dt", type=float, default=None, help="override the time step")
    p.add_argument("--t-end", type=float, default=None, help="override the final time")
    p.add_argument("--steady", action="store_true", help="solve for the steady state instead of integrating")
    p.add_argument("--prune", action="store_true", help="drop states unreachable from the initial state")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="permsym", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a model file")
    p_run.add_argument("model", help="model description file")
    _add_run_flags(p_run)
    p_ex = sub.add_parser("examples", help="run a built-in example")
    p_ex.add_argument("name", choices=EXAMPLES)
    p_ex.add_argument("--show", action="store_true", help="print the model file and exit")
    _add_run_flags(p_ex)
    p_dims = sub.add_parser("dims", help="print full versus symmetric basis sizes")
    p_dims.add_argument("--levels", type=int, choices=(2, 3), default=None)
    p_dims.add_argument("--max-n", type=int, default=20)
    p_ver = sub.add_parser("verify", help="compare an example against the dense oracle")
    p_ver.add_argument("name", choices=EXAMPLES)
    p_ver.add_argument("--n", type=int, default=2, help="number of systems")
    p_ver.add_argument("--t-end", type=float, default=None)
    p_ver.add_argument("--dt", type=float, default=None)
    p_ver.add_argument("--tol", type=float, default=1e-8)
    return parser


def _run_document(doc: ModelDocument, args) -> int:
    run = build_run(
        doc,
        dt=args.dt,
        t_end=args.t_end,
        steady=True if args.steady else None,
        prune=True if args.prune else None,
        monitor_every=args.monitor_every,
    )
    report = execute(run, args.out_dir)
    for line in report.lines():
        print(line)
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "dims":
            if args.max_n < 1:
                raise ValueError("--max-n must be >= 1")
            print("\n".join(dims_table(args.levels, args.max_n)))
            return 0
        if args.command == "verify":
            dev = verify_example(args.name, args.n, args.t_end, args.dt)
            if not dev < args.tol:
                print(f"FAILED: deviation {dev:.3e} exceeds {args.tol:g}", file=sys.stderr)
                return 1
            return 0
        if args.monitor_every is not None and args.monitor_every < 1:
            raise ValueError("--monitor-every must be >= 1")
        if args.command == "examples":
            if args.show:
                print(example_text(args.name), end="")
                return 0
            return _run_document(load_example(args.name), args)
        text = Path(args.model).read_text(encoding="utf-8")
        try:
            doc = parse_model(text)
        except ModelSyntaxError as exc:
            print(f"{args.model}: {exc}", file=sys.stderr)
            return 2
        return _run_document(doc, args)
    except (BuildError, IntegrationError, SteadyStateError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
