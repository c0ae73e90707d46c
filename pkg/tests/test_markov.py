import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from szegedy_walk import errors
from szegedy_walk.markov import (
    MarkedSet,
    chain_from_csv,
    chain_from_json,
    chain_to_csv,
    chain_to_json,
    eigenvalue_gap,
    grover_chain,
    half_discriminant,
    johnson_chain,
    johnson_eigenvalues,
    johnson_subsets,
    lazy_cycle_chain,
    marked_from_json,
    marked_to_json,
    perturb_absorbing,
    random_symmetric_chain,
    spectral_radius_restricted,
    uniform_chain,
    validate_stochastic,
)

seeds = st.integers(0, 2**32 - 1)


def test_validate_accepts_identity():
    p = validate_stochastic(np.eye(3))
    assert p.shape == (3, 3)
    assert not p.entries.flags.writeable


def test_validate_rejects_negative_entry():
    with pytest.raises(errors.NegativeEntry) as exc:
        validate_stochastic([[1.5, -0.5], [0.5, 0.5]])
    assert (exc.value.i, exc.value.j) == (0, 1)


def test_validate_rejects_bad_row_sum():
    with pytest.raises(errors.RowSumViolation) as exc:
        validate_stochastic([[0.5, 0.5], [0.5, 0.4]])
    assert exc.value.i == 1


def test_validate_row_sum_tolerance():
    validate_stochastic([[0.5, 0.5 + 1e-13], [0.5, 0.5]])
    with pytest.raises(errors.RowSumViolation):
        validate_stochastic([[0.5, 0.5 + 1e-11], [0.5, 0.5]])


def test_marked_set_basics():
    g = MarkedSet(5, (3, 1))
    assert g.members == (1, 3)
    assert 3 in g and 2 not in g
    assert g.epsilon == pytest.approx(0.4)
    assert g.complement() == (0, 2, 4)
    with pytest.raises(errors.InputError):
        MarkedSet(3, (3,))
    with pytest.raises(errors.InputError):
        MarkedSet(3, (1, 1))


def test_gap_of_uniform_chain_is_one():
    assert eigenvalue_gap(uniform_chain(6)).gap == pytest.approx(1.0)


def test_gap_of_johnson_5_2():
    # spectrum {1, 1/6 (x4), -1/3 (x5)}
    a = eigenvalue_gap(johnson_chain(5, 2))
    assert a.gap == pytest.approx(5 / 6, abs=1e-12)
    assert a.abs_gap == pytest.approx(2 / 3, abs=1e-12)


def test_gap_of_disconnected_chain_is_zero():
    p = np.kron(np.eye(2), np.full((2, 2), 0.5))
    assert eigenvalue_gap(p).gap == 0.0


def test_gap_requires_symmetry():
    with pytest.raises(errors.NotSymmetric):
        eigenvalue_gap(grover_chain(0.3))


@pytest.mark.parametrize("N,k", [(4, 2), (5, 2), (6, 2), (6, 3), (7, 3)])
def test_johnson_spectrum_matches_closed_form(N, k):
    p = johnson_chain(N, k)
    closed = sorted((lam for lam, mult in johnson_eigenvalues(N, k) for _ in range(mult)), reverse=True)
    assert len(closed) == math.comb(N, k)
    assert np.allclose(eigenvalue_gap(p).eigenvalues, closed, atol=1e-12)
    assert eigenvalue_gap(p).gap == pytest.approx(N / (k * (N - k)), abs=1e-12)


def test_johnson_cap():
    with pytest.raises(errors.TooLarge):
        johnson_chain(20, 10)


def test_johnson_order_is_lexicographic():
    assert johnson_subsets(4, 2)[:3] == [(0, 1), (0, 2), (0, 3)]


def test_perturb_absorbing():
    pp = perturb_absorbing(uniform_chain(3), MarkedSet(3, (1,)))
    assert np.array_equal(pp.entries[1], [0.0, 1.0, 0.0])
    assert np.allclose(pp.entries[0], 1 / 3)


def test_perturb_empty_is_identity_map():
    p = uniform_chain(4)
    assert np.array_equal(perturb_absorbing(p, MarkedSet.empty(4)).entries, p.entries)


def test_half_discriminant_of_grover_chain():
    p = 0.3
    assert np.allclose(half_discriminant(grover_chain(p)), [[1 - p, 0], [0, 1]])


@given(seeds, st.integers(2, 9))
def test_half_discriminant_equals_symmetric_chain(seed, n):
    p = random_symmetric_chain(n, np.random.default_rng(seed))
    assert np.array_equal(half_discriminant(p), p.entries)


@given(seeds, st.integers(2, 12))
def test_random_symmetric_chain_is_doubly_stochastic(seed, n):
    p = random_symmetric_chain(n, np.random.default_rng(seed), density=0.6)
    a = p.entries
    assert np.allclose(a, a.T, atol=1e-15)
    assert np.allclose(a.sum(axis=0), 1, atol=1e-12)
    assert np.all(a >= 0)


def test_spectral_radius_restricted_uniform():
    # P1 = J/n on n - |G| states has Perron root (n - |G|)/n
    assert spectral_radius_restricted(uniform_chain(8), [0, 1]) == pytest.approx(6 / 8)
    assert spectral_radius_restricted(uniform_chain(4), range(4)) == 0.0
    with pytest.raises(errors.EmptyMarkedSet):
        spectral_radius_restricted(uniform_chain(4), [])


@given(seeds, st.integers(2, 16), st.data())
def test_spectral_radius_bound(seed, n, data):
    rng = np.random.default_rng(seed)
    p = random_symmetric_chain(n, rng)
    size = data.draw(st.integers(1, n))
    g = MarkedSet(n, tuple(rng.choice(n, size, replace=False)))
    delta = eigenvalue_gap(p).gap
    assert spectral_radius_restricted(p, g) <= 1 - delta * g.epsilon / 2 + 1e-10


def test_lazy_cycle_is_symmetric_and_slower_when_lazier():
    a = eigenvalue_gap(lazy_cycle_chain(12, 0.5)).gap
    b = eigenvalue_gap(lazy_cycle_chain(12, 0.75)).gap
    assert b == pytest.approx(a / 2)
    assert eigenvalue_gap(lazy_cycle_chain(12, 0.5, chords=2)).gap > a


def test_chain_csv_and_json_round_trip(rng):
    p = random_symmetric_chain(5, rng)
    assert np.array_equal(chain_from_csv(chain_to_csv(p)).entries, p.entries)
    assert np.array_equal(chain_from_json(chain_to_json(p)).entries, p.entries)
    with pytest.raises(errors.InputError):
        chain_from_json(json.dumps({"n": 3, "rows": [[1.0]]}))


def test_marked_json_round_trip():
    g = MarkedSet(6, (0, 5))
    assert marked_from_json(marked_to_json(g), 6) == g
