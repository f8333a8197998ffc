import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from permsym import enumerate_basis, templates as T
from permsym.basis import MLSDim, define_system
from permsym.dynamics import mls_occupation, mode_occupation, pure_state
from permsym.integrate import SolverConfig, evolve
from permsym.oracle import (
    HILBERT_LIMIT,
    OracleSizeError,
    build_dense_model,
    compare_runs,
    dense_evolve,
    multiplicity,
    multiset_permutations,
    projection_matrix,
    reconstruct,
    symmetrize_project,
)

from conftest import three_level, two_level

D = MLSDim.parse

TC_TERMS = [
    T.MlsModeRWA(D("n01"), 0, 1.0),
    T.LindbladRelaxMLS(D("n11"), D("n00"), 0.05),
    T.LindbladMode(0, 0.5),
]


def random_density(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def symmetrized(model, rho):
    n = model.spec.n_systems
    out = np.zeros_like(rho)
    perms = [np.eye(model.dim)]
    if n == 2:
        perms.append(model.swap_spins(0, 1))
    for p in perms:
        out += p @ rho @ p.T
    return out / len(perms)


def test_dimensions():
    model = build_dense_model(two_level(2, fock=3), TC_TERMS)
    assert model.dim == 12
    assert model.liouvillian().shape == (144, 144)


def test_size_limit():
    with pytest.raises(OracleSizeError):
        build_dense_model(two_level(3, fock=9), [])
    assert HILBERT_LIMIT == 64


def test_single_site_algebra():
    model = build_dense_model(three_level(2), [])
    for k, l, p, q in [(0, 1, 1, 2), (2, 1, 0, 2), (1, 1, 1, 0)]:
        lhs = model.sigma(0, k, l) @ model.sigma(0, p, q)
        rhs = model.sigma(0, k, q) if l == p else np.zeros_like(lhs)
        assert np.array_equal(lhs, rhs)


def test_commutator_annihilates_identity():
    model = build_dense_model(two_level(2, fock=3), [T.MlsModeRWA(D("n01"), 0, 1.0), T.ModeH0(0, 0.4)])
    out = model.liouvillian() @ model.identity.reshape(-1)
    assert np.max(np.abs(out)) < 1e-14


def test_liouvillian_is_traceless(rng):
    model = build_dense_model(two_level(2, fock=3), TC_TERMS + [T.LindbladModeThermal(0, 0.2, 0.7)])
    rho = random_density(model.dim, rng)
    drho = (model.liouvillian() @ rho.reshape(-1)).reshape(model.dim, model.dim)
    assert abs(np.trace(drho)) < 1e-12


def test_ground_state_projection(tls2_mode):
    model = build_dense_model(tls2_mode.spec, [])
    rho = np.zeros((model.dim, model.dim), dtype=complex)
    rho[0, 0] = 1.0
    p = symmetrize_project(model, rho, tls2_mode)
    assert p[tls2_mode.index([0, 0, 0, 0, 0])] == 1
    assert np.count_nonzero(p) == 1


def test_single_excitation_mixture_projection(tls2):
    model = build_dense_model(tls2.spec, [])
    rho = 0.5 * (model.sigma(0, 1, 1) @ model.sigma(1, 0, 0) + model.sigma(0, 0, 0) @ model.sigma(1, 1, 1))
    p = symmetrize_project(model, rho, tls2)
    assert p[tls2.index([1, 0, 0])] == pytest.approx(1.0)
    assert np.count_nonzero(np.abs(p) > 1e-15) == 1


def test_multiset_permutations_and_multiplicity():
    perms = list(multiset_permutations([0, 0, 1]))
    assert sorted(perms) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    spec = two_level(4)
    assert multiplicity(spec, [2, 1, 0]) == 12  # 4! / (2! 1! 0! 1!)


def test_projection_rows_have_multiplicity_entries(tls2_mode):
    model = build_dense_model(tls2_mode.spec, [])
    proj = projection_matrix(model, tls2_mode)
    for s in range(len(tls2_mode)):
        counts = tls2_mode.state(s).mls
        assert proj[s].nnz == multiplicity(tls2_mode.spec, counts)


def test_reconstruct_inverts_projection_on_symmetric_states(rng):
    basis = enumerate_basis(two_level(2, fock=2))
    model = build_dense_model(basis.spec, [])
    rho = symmetrized(model, random_density(model.dim, rng))
    p = symmetrize_project(model, rho, basis)
    assert np.max(np.abs(reconstruct(model, p, basis) - rho)) < 1e-14


@pytest.mark.parametrize("spec_fn", [lambda: two_level(2, fock=3), lambda: three_level(2, fock=2)])
def test_commuting_diagram(spec_fn, rng):
    spec = spec_fn()
    basis = enumerate_basis(spec)
    if spec.d_levels == 2:
        terms = TC_TERMS + [T.MlsCohDrive(D("n10"), 0.3)]
    else:
        terms = [T.MlsModeRWA(D("n01"), 0, 1.0), T.MlsCohDrive(D("n21"), 0.5), T.LindbladRelaxMLS(D("n11"), D("n22"), 0.1), T.LindbladMode(0, 0.3)]
    model = build_dense_model(spec, terms)
    rho0 = symmetrized(model, random_density(model.dim, rng))
    p0 = symmetrize_project(model, rho0, basis)
    L = T.assemble(basis, terms)
    reduced = evolve(L, p0, SolverConfig(method="rk4", dt=0.01, t_end=1.0))
    _, states = dense_evolve(model, rho0, 0.01, 1.0, sample_every=100)
    assert np.max(np.abs(symmetrize_project(model, states[-1], basis) - reduced)) < 1e-8


def test_dense_trajectory_stays_permutation_symmetric_and_positive(tls2_mode):
    model = build_dense_model(tls2_mode.spec, TC_TERMS)
    rho0 = reconstruct(model, pure_state(tls2_mode, [1, 0, 0, 0, 0]), tls2_mode)
    # fine step: RK4 truncation error alone can push a zero eigenvalue below -1e-10
    _, states = dense_evolve(model, rho0, 0.002, 5.0, sample_every=250)
    swap = model.swap_spins(0, 1)
    for rho in states:
        rho = rho.reshape(model.dim, model.dim)
        assert np.max(np.abs(swap @ rho @ swap.T - rho)) < 1e-12
        assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -1e-10


def test_closed_dense_evolution_is_unitary(rng):
    spec = two_level(2, fock=3)
    model = build_dense_model(spec, [T.MlsModeRWA(D("n01"), 0, 1.0), T.ModeH0(0, 0.2)])
    rho0 = random_density(model.dim, rng)
    _, states = dense_evolve(model, rho0, 0.01, 2.0, sample_every=200)
    rho = states[-1].reshape(model.dim, model.dim)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(np.linalg.eigvalsh(rho), np.linalg.eigvalsh(rho0), atol=1e-10)


def test_dense_jaynes_cummings():
    basis = enumerate_basis(two_level(1, fock=3))
    model = build_dense_model(basis.spec, [T.MlsModeRWA(D("n01"), 0, 1.0)])
    rho0 = reconstruct(model, pure_state(basis, [1, 0, 0, 0, 0]), basis)
    times, states = dense_evolve(model, rho0, 0.001, 3.0, sample_every=500)
    n1 = model.collective(1, 1)
    for t, rho in zip(times, states):
        assert np.trace(n1 @ rho.reshape(model.dim, model.dim)).real == pytest.approx(np.cos(t) ** 2, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(alpha=st.complex_numbers(max_magnitude=10, allow_nan=False), beta=st.complex_numbers(max_magnitude=10, allow_nan=False), seed=st.integers(0, 10**6))
def test_projection_is_linear(alpha, beta, seed):
    basis = enumerate_basis(two_level(2, fock=2))
    model = build_dense_model(basis.spec, [])
    rng = np.random.default_rng(seed)
    r1 = rng.normal(size=(model.dim, model.dim))
    r2 = rng.normal(size=(model.dim, model.dim))
    lhs = symmetrize_project(model, alpha * r1 + beta * r2, basis)
    rhs = alpha * symmetrize_project(model, r1, basis) + beta * symmetrize_project(model, r2, basis)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + abs(alpha) + abs(beta)) * 10


def _trajectories(terms_reduced, terms_dense, t_end=5.0):
    spec = two_level(2, fock=4)
    basis = enumerate_basis(spec)
    L = T.assemble(basis, terms_reduced)
    model = build_dense_model(spec, terms_dense)
    p0 = pure_state(basis, [1, 0, 0, 0, 0])
    times, states = [], []
    evolve(L, p0, SolverConfig(method="rk4", dt=0.01, t_end=t_end, monitor_every=10), lambda t, dm, s: (times.append(t), states.append(dm.copy())))
    dtimes, dstates = dense_evolve(model, reconstruct(model, p0, basis), 0.01, t_end, sample_every=10)
    b = model.lowering(0)
    obs = {"n11": (mls_occupation(basis, "n11"), model.collective(1, 1)), "photons": (mode_occupation(basis, 0), b.conj().T @ b)}
    return basis, model, (times, states), (dtimes, dstates), obs


def test_compare_runs_agreement_and_negative_control():
    basis, model, red, dense, obs = _trajectories(TC_TERMS, TC_TERMS)
    report = compare_runs(basis, model, *red, *dense, obs)
    assert report.passed(1e-8)
    assert len(report.lines()) == 3

    wrong = [TC_TERMS[0], T.LindbladRelaxMLS(D("n11"), D("n00"), -0.05), TC_TERMS[2]]
    basis, model, red, dense, obs = _trajectories(wrong, TC_TERMS)
    bad = compare_runs(basis, model, *red, *dense, obs)
    assert bad.max_deviation > 1e-3


def test_compare_identical_inputs_is_zero(tls2):
    model = build_dense_model(tls2.spec, [])
    rho = reconstruct(model, pure_state(tls2, [1, 0, 0]), tls2)
    report = compare_runs(tls2, model, [0.0], [pure_state(tls2, [1, 0, 0])], [0.0], [rho], {})
    assert report.max_deviation == 0


def test_compare_runs_grid_mismatch(tls2):
    model = build_dense_model(tls2.spec, [])
    with pytest.raises(ValueError, match="time grids"):
        compare_runs(tls2, model, [0.0, 0.1], [], [0.0, 0.2], [], {})


def test_untracked_reduced_dims_reconstruct_consistently():
    spec = define_system(2, 3, ["n22", "n11", "n10", "n01"], level_energies=(0, 1, 2), modes=[two_level(1, fock=2).modes[0]])
    basis = enumerate_basis(spec)
    model = build_dense_model(spec, [])
    proj = projection_matrix(model, basis)
    assert proj.shape == (len(basis), model.dim**2)
