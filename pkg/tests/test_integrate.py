import math

import numpy as np
import pytest
import scipy.sparse as sp

from permsym import enumerate_basis, templates as T
from permsym.basis import MLSDim
from permsym.dynamics import mls_occupation, mode_occupation, pure_state, thermal_state, trace_functional
from permsym.integrate import IntegrationError, SolverConfig, SolverStats, evolve, fixed_step_count, rk4_step

from conftest import two_level

D = MLSDim.parse


def jaynes_cummings(g=1.0, fock=4):
    basis = enumerate_basis(two_level(1, fock=fock))
    L = T.assemble(basis, [T.MlsModeRWA(D("n01"), 0, g)])
    return basis, L


def record_into(times, values, fn):
    def monitor(t, dm, step):
        times.append(t)
        values.append(fn(dm).real)

    return monitor


def test_free_mode_conserves_number():
    basis = enumerate_basis(two_level(1, fock=5))
    L = T.assemble(basis, [T.ModeH0(0, 1.3)])
    dm = thermal_state(basis, temperature=2.0)
    occ = mode_occupation(basis, 0)
    vals = []
    evolve(L, dm, SolverConfig(method="rk4", dt=0.01, t_end=5.0, monitor_every=10), record_into([], vals, occ))
    assert np.ptp(vals) < 1e-12


def test_vacuum_rabi_oscillation():
    g = 1.0
    basis, L = jaynes_cummings(g)
    occ = mls_occupation(basis, "n11")
    times, vals = [], []
    cfg = SolverConfig(method="rk4", dt=1e-3, t_end=10.0, monitor_every=1)
    evolve(L, pure_state(basis, [1, 0, 0, 0, 0]), cfg, record_into(times, vals, occ))
    times, vals = np.array(times), np.array(vals)
    assert np.max(np.abs(vals - np.cos(g * times) ** 2)) < 1e-10
    # frequency from the spacing of successive minima of cos^2(gt): pi / g
    minima = times[1:-1][(vals[1:-1] < vals[:-2]) & (vals[1:-1] <= vals[2:])]
    freq = 2 * np.pi / np.mean(np.diff(minima))
    assert freq == pytest.approx(2 * g, rel=1e-3)


def test_adaptive_agrees_with_fixed_step():
    basis = enumerate_basis(two_level(2, fock=3))
    terms = [
        T.MlsModeRWA(D("n01"), 0, 1.0),
        T.LindbladRelaxMLS(D("n11"), D("n00"), 0.05),
        T.LindbladMode(0, 0.3),
    ]
    L = T.assemble(basis, terms)
    dm0 = pure_state(basis, [1, 0, 0, 0, 0])
    a = evolve(L, dm0, SolverConfig(method="rk4", dt=1e-3, t_end=5.0))
    stats = SolverStats()
    b = evolve(L, dm0, SolverConfig(method="rk_adaptive", dt=1e-3, t_end=5.0, rtol=1e-10, atol=1e-10), stats=stats)
    for obs in (mls_occupation(basis, "n11"), mode_occupation(basis, 0)):
        assert obs(b) == pytest.approx(obs(a), abs=1e-6)
    loose = SolverStats()
    evolve(L, dm0, SolverConfig(method="rk_adaptive", dt=1e-3, t_end=5.0, rtol=1e-6, atol=1e-6), stats=loose)
    assert loose.steps < stats.steps / 10


def test_adaptive_monitor_sees_current_state():
    basis, L = jaynes_cummings()
    occ = mls_occupation(basis, "n11")
    times, vals = [], []
    cfg = SolverConfig(method="rk_adaptive", dt=1e-2, t_end=3.0, rtol=1e-9, atol=1e-9, monitor_every=1)
    evolve(L, pure_state(basis, [1, 0, 0, 0, 0]), cfg, record_into(times, vals, occ))
    assert times[-1] == 3.0
    assert np.max(np.abs(np.array(vals) - np.cos(np.array(times)) ** 2)) < 1e-7


def test_adaptive_steps_are_rejected_and_recovered():
    basis, L = jaynes_cummings()
    stats = SolverStats()
    cfg = SolverConfig(method="rk_adaptive", dt=2.0, t_end=4.0, rtol=1e-8, atol=1e-8)
    evolve(L, pure_state(basis, [1, 0, 0, 0, 0]), cfg, stats=stats)
    assert stats.rejected > 0


def test_dt_min_underflow():
    basis, L = jaynes_cummings()
    cfg = SolverConfig(method="rk_adaptive", dt=0.5, t_end=1.0, rtol=1e-14, atol=1e-14, dt_min=0.1)
    with pytest.raises(IntegrationError, match="dt_min"):
        evolve(L, pure_state(basis, [1, 0, 0, 0, 0]), cfg)


@pytest.mark.parametrize("method", ["rk4", "rk_adaptive"])
def test_divergence_is_reported(method):
    L = sp.identity(3, format="csr") * 1000.0
    cfg = SolverConfig(method=method, dt=1.0, t_end=200.0, rtol=1e10, atol=1e10, dt_max=1.0)
    with pytest.raises(IntegrationError, match="diverged"):
        evolve(L, np.ones(3), cfg)


def test_non_finite_initial_state():
    with pytest.raises(IntegrationError):
        evolve(sp.identity(2, format="csr"), np.array([np.nan, 0.0]), SolverConfig())


def test_size_mismatch():
    with pytest.raises(ValueError, match="does not match"):
        evolve(sp.identity(3, format="csr"), np.zeros(2), SolverConfig())


@pytest.mark.parametrize(
    "kwargs",
    [
        {"method": "euler"},
        {"dt": 0.0},
        {"t_end": -1.0},
        {"rtol": 0.0},
        {"dt_min": 1.0, "dt_max": 0.5},
        {"monitor_every": 0},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


@pytest.mark.parametrize("steps, cadence, rows", [(1000, 30, 35), (900, 30, 31), (10, 1, 11), (7, 10, 2)])
def test_monitor_row_count(steps, cadence, rows):
    stats = SolverStats()
    L = sp.csr_matrix((1, 1))
    evolve(L, np.ones(1), SolverConfig(method="rk4", dt=0.01, t_end=steps * 0.01, monitor_every=cadence), stats=stats)
    assert stats.steps == steps
    assert stats.monitor_calls == rows
    assert stats.times[0] == 0.0
    assert stats.times[-1] == pytest.approx(steps * 0.01, abs=0)


def test_fixed_step_count_ends_exactly():
    n, h = fixed_step_count(1.0, 0.3)
    assert n == 3 and n * h == pytest.approx(1.0)
    assert fixed_step_count(0.0, 0.1) == (0, 0.1)


def test_rk4_step_exact_for_cubic():
    # y' = 3 t^2 written autonomously via y = (t, x)
    f = lambda y: np.array([1.0, 3.0 * y[0] ** 2])  # noqa: E731
    y = rk4_step(f, np.array([0.0, 0.0]), 0.5)
    assert y[1] == pytest.approx(0.125, abs=1e-15)


def test_rk4_convergence_order():
    basis, L = jaynes_cummings()
    dm0 = pure_state(basis, [1, 0, 0, 0, 0])
    occ = mls_occupation(basis, "n11")
    exact = math.cos(2.0) ** 2
    errs = [abs(occ(evolve(L, dm0, SolverConfig(method="rk4", dt=dt, t_end=2.0))).real - exact) for dt in (0.1, 0.05)]
    assert 12 < errs[0] / errs[1] < 20


def test_trace_is_preserved_by_integration():
    basis = enumerate_basis(two_level(3, fock=3))
    terms = [
        T.MlsModeRWA(D("n01"), 0, 1.0),
        T.LindbladRelaxMLS(D("n00"), D("n11"), 0.2),
        T.LindbladModeThermal(0, 0.3, 0.5),
    ]
    L = T.assemble(basis, terms)
    dm = evolve(L, thermal_state(basis, beta=math.inf), SolverConfig(method="rk4", dt=0.01, t_end=5.0))
    assert trace_functional(basis)(dm) == pytest.approx(1.0, abs=1e-12)
