import math

import numpy as np
import pytest

from permsym import enumerate_basis, templates as T
from permsym.basis import MLSDim
from permsym.build import build_run
from permsym.cli import load_example
from permsym.dynamics import hermiticity_defect, thermal_state, trace_functional
from permsym.integrate import SolverConfig, evolve
from permsym.operators import SparseOperator
from permsym.steady import SteadyStateError, SteadyStats, steady_state

from conftest import two_level

D = MLSDim.parse


def inf_norm(m):
    return float(np.max(np.asarray(abs(m).sum(axis=1)).ravel()))


def test_pure_decay_relaxes_to_ground(tls2):
    L = T.assemble(tls2, [T.LindbladRelaxMLS(D("n11"), D("n00"), 0.3), T.LindbladDephMLS(D("n10"), 0.1), T.LindbladDephMLS(D("n01"), 0.1)])
    x = steady_state(L, trace_functional(tls2))
    expected = thermal_state(tls2, beta=math.inf)
    assert np.max(np.abs(x - expected)) < 1e-12


@pytest.fixture(scope="module")
def laser():
    run = build_run(load_example("ex2"))
    stats = SteadyStats()
    x = steady_state(run.liouvillian, run.trace, stats=stats)
    return run, x, stats


def test_laser_residual_and_trace(laser):
    run, x, stats = laser
    m = run.liouvillian.matrix
    assert np.max(np.abs(m @ x)) <= 1e-10 * inf_norm(m)
    assert run.trace(x) == pytest.approx(1.0, abs=1e-12)
    assert hermiticity_defect(run.basis, x) < 1e-10
    assert stats.residual == pytest.approx(np.max(np.abs(m @ x)))


def test_laser_matches_long_adaptive_run(laser):
    run, x, _ = laser
    cfg = SolverConfig(method="rk_adaptive", t_end=400.0, dt=1e-2, rtol=1e-10, atol=1e-12)
    y = evolve(run.liouvillian, run.initial, cfg)
    for label, fn in run.observables:
        assert fn(y).real == pytest.approx(fn(x).real, abs=1e-6), label


def test_steady_state_is_fixed_point(laser):
    run, x, _ = laser
    y = evolve(run.liouvillian, x, SolverConfig(method="rk4", dt=0.05, t_end=100 / 0.1))
    assert np.max(np.abs(y - x)) < 1e-8


def test_degenerate_kernel_is_error(tls2):
    with pytest.raises(SteadyStateError, match="one-dimensional"):
        steady_state(SparseOperator(tls2).freeze(), trace_functional(tls2))
    # pure dephasing leaves every population stationary
    L = T.assemble(tls2, [T.LindbladDephMLS(D("n10"), 0.2), T.LindbladDephMLS(D("n01"), 0.2)])
    with pytest.raises(SteadyStateError):
        steady_state(L, trace_functional(tls2))


def test_trace_size_mismatch(tls2, tls2_mode):
    L = T.assemble(tls2, [T.LindbladRelaxMLS(D("n11"), D("n00"), 0.3)])
    with pytest.raises(ValueError):
        steady_state(L, trace_functional(tls2_mode))


def test_work_counter_is_positive(laser):
    _, _, stats = laser
    assert stats.factor_flops > 0
    assert stats.rhs_equivalents > 0


def test_thermal_mode_steady_state_is_bose():
    basis = enumerate_basis(two_level(1, fock=12, energy=1.0))
    nbar = 0.4
    L = T.assemble(basis, [T.LindbladModeThermal(0, 0.5, nbar), T.LindbladRelaxMLS(D("n11"), D("n00"), 0.1)])
    x = steady_state(L, trace_functional(basis))
    from permsym.dynamics import distribution

    dist = distribution(basis, x, "mode_number", 0)
    ratio = nbar / (1 + nbar)
    expected = ratio ** np.arange(12)
    assert np.allclose(dist, expected / expected.sum(), atol=1e-12)
