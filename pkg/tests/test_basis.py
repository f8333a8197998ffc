import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from permsym import (
    MLSDim,
    MultiIndex,
    SpecError,
    define_system,
    dimension_count,
    enumerate_basis,
    is_density_element,
)
from permsym.basis import Mode

from conftest import THREE_LEVEL_DIMS, two_level

TABLE_ONE = [
    (0, 0, 0), (0, 0, 1), (0, 0, 2), (0, 1, 0), (0, 1, 1),
    (0, 2, 0), (1, 0, 0), (1, 0, 1), (1, 1, 0), (2, 0, 0),
]


def test_two_systems_match_table_of_ten_states():
    basis = enumerate_basis(two_level(2))
    assert [s.mls for s in basis] == TABLE_ONE
    assert len(basis) < 2 ** (2 * 2)


def test_single_system_has_four_states():
    assert len(enumerate_basis(two_level(1))) == 4


def test_reduced_three_level_laser_dims():
    spec = define_system(2, 3, ["n22", "n11", "n10", "n01"])
    basis = enumerate_basis(spec)
    assert len(basis) == 15 == math.comb(2 + 4, 2)
    brute = {c for c in np.ndindex(3, 3, 3, 3) if sum(c) <= 2}
    assert {s.mls for s in basis} == brute


def test_define_system_examples():
    spec = two_level(2)
    assert spec.m_effective == 4
    assert spec.dims == (MLSDim(1, 1), MLSDim(1, 0), MLSDim(0, 1))


@pytest.mark.parametrize(
    "kwargs, message",
    [
        (dict(dims=["n11", "n11"]), "duplicate"),
        (dict(dims=["n00", "n11"]), "implicit ground"),
        (dict(dims=["n21"]), "level"),
        (dict(dims=["n11"], cutoffs=[0]), "cutoff"),
        (dict(dims=["n11"], cutoffs=[5]), "exceeds"),
        (dict(dims=[]), "empty"),
    ],
)
def test_define_system_errors(kwargs, message):
    with pytest.raises(SpecError, match=message):
        define_system(2, 2, **kwargs)


def test_modes_numbered_in_declaration_order():
    spec = define_system(1, 2, ["n11"], modes=[(3, 1.0), Mode(2, 0.5, "ph")])
    assert [m.name for m in spec.modes] == ["m0", "ph"]
    assert spec.mode_index("ph") == 1


@pytest.mark.parametrize("n, m, expected", [(2, 4, 10), (1, 4, 4), (10, 4, 286)])
def test_dimension_count_values(n, m, expected):
    assert dimension_count(n, m) == expected


def test_dimension_count_matches_enumeration_up_to_twenty():
    for m, dims in ((4, ("n11", "n10", "n01")), (5, ("n22", "n11", "n10", "n01")), (9, THREE_LEVEL_DIMS)):
        levels = 2 if m == 4 else 3
        for n in range(0, 21):
            spec = define_system(n, levels, dims)
            assert len(enumerate_basis(spec)) == dimension_count(n, m)


def test_index_map_round_trip_and_ordering():
    basis = enumerate_basis(two_level(2, fock=3))
    assert basis.index(MultiIndex((0, 0, 0), (0,), (0,))) == 0
    for i in range(len(basis)):
        assert basis.index(basis.state(i)) == i
    assert basis.index([3, 0, 0, 0, 0]) is None  # n11 at its cutoff
    assert basis.index([0, 0, 0, 3, 0]) is None  # Fock index at its cutoff
    with pytest.raises(IndexError):
        basis.state(len(basis))


def test_truncated_dims_respect_cutoffs():
    spec = define_system(4, 2, ["n11", "n10", "n01"], cutoffs=[3, 2, 2])
    basis = enumerate_basis(spec)
    c = basis.counts
    assert c[:, 0].max() == 2 and c[:, 1].max() == 1 and c[:, 2].max() == 1
    assert np.all(c.sum(axis=1) <= 4)


def test_size_with_modes_is_product():
    spec = define_system(2, 2, ["n11", "n10", "n01"], modes=[(3, 1.0), (2, 1.0)])
    assert len(enumerate_basis(spec)) == 10 * 9 * 4


def test_enumeration_is_deterministic():
    a = enumerate_basis(two_level(3, fock=2))
    b = enumerate_basis(two_level(3, fock=2))
    assert a.states == b.states


@pytest.mark.parametrize(
    "state, expected",
    [
        (MultiIndex((1, 0, 0), (2,), (2,)), True),
        (MultiIndex((0, 1, 0), (0,), (0,)), False),
        (MultiIndex((1, 0, 0), (1,), (0,)), False),
    ],
)
def test_is_density_element(state, expected):
    assert is_density_element(two_level(2, fock=3), state) is expected


def test_transpose_index_swaps_polarizations_and_fock_pairs():
    basis = enumerate_basis(two_level(2, fock=2))
    t = basis.transpose_index
    i = basis.index([0, 1, 0, 1, 0])
    assert basis.state(t[i]) == MultiIndex((0, 0, 1), (0,), (1,))
    assert np.all(t[t] == np.arange(len(basis)))


def test_transpose_absent_when_partner_untracked():
    spec = define_system(2, 2, ["n11", "n10"])
    basis = enumerate_basis(spec)
    assert basis.transpose_index[basis.index([0, 1])] == -1


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(0, 6),
    cut=st.lists(st.integers(1, 7), min_size=3, max_size=3),
)
def test_every_state_satisfies_invariants(n, cut):
    cut = [min(c, n + 1) for c in cut]
    spec = define_system(n, 2, ["n11", "n10", "n01"], cutoffs=cut)
    basis = enumerate_basis(spec)
    counts = basis.counts.astype(int)
    assert np.all(counts.sum(axis=1) <= n)
    assert np.all(counts < np.array(cut))
    brute = [c for c in np.ndindex(*cut) if sum(c) <= n]
    assert len(basis) == len(brute)
