import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from szegedy_walk import errors
from szegedy_walk.findmarked import (
    LARGE,
    EMPTY,
    CostLedger,
    FindMarkedAnalysis,
    amp_curve,
    average_output_one,
    classical_failure_probability,
    classical_find_marked,
    decision_procedure,
    perturbed_walk_ancilla,
    perturbed_walk_unitary,
    phase_separation,
    quantum_find_marked,
    quantum_find_marked_exact,
    rule_k_max,
    run_record,
)
from szegedy_walk.markov import MarkedSet, eigenvalue_gap, johnson_chain, random_symmetric_chain, uniform_chain
from szegedy_walk.walk import BipartiteWalk, walk_unitary

seeds = st.integers(0, 2**32 - 1)


@st.composite
def instances(draw, max_n=6, nonempty=False):
    n = draw(st.integers(2, max_n))
    rng = np.random.default_rng(draw(seeds))
    p = random_symmetric_chain(n, rng, density=draw(st.sampled_from([0.5, 1.0])))
    g = draw(st.lists(st.integers(0, n - 1), unique=True, min_size=1 if nonempty else 0, max_size=n))
    return p, MarkedSet(n, tuple(g))


def test_ledger_total_and_monotonicity():
    ledger = CostLedger(p0_price=3.0, p1_price=2.0, p2_price=0.5)
    ledger.charge(p0=1, p1=4, p2=2)
    assert ledger.total == 3 + 8 + 1
    with pytest.raises(errors.InputError):
        ledger.charge(p1=-1)


def test_classical_empty_set_never_fires():
    p = uniform_chain(5)
    assert all(classical_find_marked(p, [], 10, seed=s).output_bit == 0 for s in range(200))


def test_classical_full_set_fires_immediately():
    out = classical_find_marked(uniform_chain(5), range(5), 10, seed=1)
    assert out.output_bit == 1
    assert out.ledger.p1_count == 0
    assert out.ledger.p2_count == 11


def test_classical_ledger_counts():
    out = classical_find_marked(uniform_chain(9), [4], 7, seed=3)
    assert out.ledger.p0_count == 1
    assert out.ledger.p1_count <= 7
    assert out.ledger.p2_count == 8
    assert out.output_bit == int(out.final_sample[0] == 4)


def test_classical_is_deterministic_per_seed():
    p = uniform_chain(8)
    a = [classical_find_marked(p, [0], 5, seed=s).final_sample for s in range(50)]
    b = [classical_find_marked(p, [0], 5, seed=s).final_sample for s in range(50)]
    assert a == b


def test_classical_failure_closed_form():
    for n, k in [(8, 0), (8, 5), (16, 40)]:
        assert classical_failure_probability(uniform_chain(n), [0], k) == pytest.approx(
            (1 - 1 / n) ** (k + 1), rel=1e-12
        )


def test_classical_uniform_n8_k64_success():
    p_fail = classical_failure_probability(uniform_chain(8), [0], 64)
    assert 1 - p_fail >= 0.99
    hits = sum(classical_find_marked(uniform_chain(8), [0], 64, seed=s).output_bit for s in range(2000))
    assert hits / 2000 >= 0.99


def test_empty_marked_set_gives_mu():
    p = random_symmetric_chain(4, np.random.default_rng(0))
    nu = perturbed_walk_unitary(p, [])
    mu = walk_unitary(BipartiteWalk.from_chain(p))
    assert np.array_equal(nu.mu, mu.mu)


def test_full_marked_set_fixes_diagonal():
    nu = perturbed_walk_unitary(uniform_chain(3), range(3)).mu
    diag = np.eye(9)[[0, 4, 8]]
    assert np.allclose(diag @ nu, diag)


@given(instances())
def test_ancilla_construction_matches_direct(inst):
    p, g = inst
    n = p.rows
    nu = perturbed_walk_unitary(p, g).mu
    big = perturbed_walk_ancilla(p, g)
    zero = np.arange(0, 2 * n * n, 2)
    assert np.max(np.abs(big[np.ix_(zero, zero)] - nu)) <= 1e-10
    # the ancilla returns to |0>
    assert np.max(np.abs(big[np.ix_(zero, zero + 1)])) <= 1e-12


def test_literal_ancilla_branch_differs():
    p, g = uniform_chain(3), (1,)
    nu = perturbed_walk_unitary(p, g).mu
    big = perturbed_walk_ancilla(p, g, literal=True)
    zero = np.arange(0, 18, 2)
    assert np.max(np.abs(big[np.ix_(zero, zero)] - nu)) > 0.1


def test_phase_separation_uniform_4():
    report = phase_separation(uniform_chain(4), [3])
    assert report.bound == pytest.approx(0.5)
    assert report.violations() == 0
    assert report.min_abs_theta >= math.sqrt(0.25) - 1e-9


@given(instances(max_n=10, nonempty=True))
def test_phase_separation_random(inst):
    p, g = inst
    assert phase_separation(p, g).violations() == 0


def test_exact_empty_is_zero():
    for k in (1, 4, 13):
        prob, _ = quantum_find_marked_exact(uniform_chain(4), [], k)
        assert prob <= 1e-12


def test_exact_k0_is_epsilon():
    p = random_symmetric_chain(5, np.random.default_rng(2))
    prob, state = quantum_find_marked_exact(p, [1, 3], 0)
    expect = p.entries[[1, 3]].sum() / 5
    assert prob == pytest.approx(expect, abs=1e-14)
    assert state.dims == (2, 5, 5)


@given(instances(), st.integers(0, 30))
def test_final_state_algebra(inst, k):
    p, g = inst
    n = p.rows
    _, state = quantum_find_marked_exact(p, g, k)
    nu = perturbed_walk_unitary(p, g).mu
    u = np.sqrt(p.entries / n).ravel()
    evolved = u @ np.linalg.matrix_power(nu, k)
    expected = np.concatenate([(u + evolved) / 2, (u - evolved) / 2])
    assert np.max(np.abs(state.amplitudes - expected)) <= 1e-10


@given(instances(), st.lists(st.integers(0, 60), min_size=1, max_size=5))
def test_closed_form_probability_matches_simulation(inst, ks):
    p, g = inst
    fa = FindMarkedAnalysis(p, g)
    fast = fa.output_one(ks)
    for k, val in zip(ks, fast):
        assert val == pytest.approx(quantum_find_marked_exact(p, g, k)[0], abs=1e-10)


@given(instances(nonempty=True))
def test_overlap_is_unmarked_fraction(inst):
    p, g = inst
    fa = FindMarkedAnalysis(p, g)
    assert fa.u_overlap == pytest.approx((p.rows - len(g)) / p.rows, abs=1e-12)


@given(instances(nonempty=True))
def test_amp_spectral_equals_direct(inst):
    p, g = inst
    curve = amp_curve(p, g, 200)
    assert curve.max_disagreement <= 1e-9
    assert np.all(curve.amp >= -1e-12) and np.all(curve.amp <= 4 + 1e-12)


def test_amp_curve_requires_marked():
    with pytest.raises(errors.EmptyMarkedSet):
        amp_curve(uniform_chain(3), [], 5)


def test_mean_phase_factor_bound():
    # for one phase |theta| >= s, the mean of |1 + e^{i theta K}|^2 over K <= 1000/s is <= 2.5
    for s in (0.05, 0.2, 0.5):
        n_k = math.ceil(1000 / s)
        ks = np.arange(1, n_k + 1)
        for theta in (s, 1.7 * s, math.pi - 1e-3):
            assert np.mean(np.abs(1 + np.exp(1j * theta * ks)) ** 2) <= 2.5


def test_rule_k_max():
    assert rule_k_max(1.0, 0.25) == 2000
    assert rule_k_max(1.0, 0.25, 10) == 20
    with pytest.raises(errors.InputError):
        rule_k_max(0.0, 0.5)


def test_uniform_4_theorem_bound():
    assert average_output_one(uniform_chain(4), [3], 0.25) >= 1 / 1000


def test_decision_empty():
    d = decision_procedure(uniform_chain(6), [], 1 / 6, seed=0, rounds=500)
    assert d.verdict == EMPTY
    assert d.rounds_run == 500
    assert max(d.round_probabilities) <= 1e-12


def test_decision_all_marked_first_round_probability():
    d = decision_procedure(uniform_chain(6), lambda i: True, 1.0, seed=0, rounds=5)
    assert d.round_probabilities[0] >= 1 / 16
    assert d.verdict == LARGE


def test_decision_uniform_16_quarter():
    p = uniform_chain(16)
    assert average_output_one(p, range(4), 0.25) > 1 / 1000
    d = decision_procedure(p, range(4), 0.25, seed=11)
    assert d.verdict == LARGE


def test_decision_ledger_per_round():
    d = decision_procedure(uniform_chain(6), [], 1 / 6, seed=4, rounds=20)
    ks = np.array(d.k_values)
    assert d.ledger.p0_count == 20
    assert d.ledger.p1_count == 2 * ks.sum()
    assert d.ledger.p2_count == 4 * ks.sum() + 20
    assert np.all((ks >= 1) & (ks <= d.k_max))


def test_decision_is_seeded():
    a = decision_procedure(uniform_chain(6), [], 1 / 6, seed=9, rounds=50)
    b = decision_procedure(uniform_chain(6), [], 1 / 6, seed=9, rounds=50)
    assert a.k_values == b.k_values


def test_quantum_sampled_outcome_rule():
    p = uniform_chain(4)
    for s in range(30):
        out = quantum_find_marked(p, [2], 3, seed=s)
        b, i, _ = out.final_sample
        assert out.output_bit == int(b == 1 or i == 2)
        assert out.ledger.p2_count == 13


def test_johnson_instance_probability():
    # N=5, k=2 with one colliding pair: one marked subset of ten
    p = johnson_chain(5, 2)
    assert eigenvalue_gap(p).gap == pytest.approx(5 / 6)
    assert average_output_one(p, [0], 0.1) >= 1 / 1000


def test_exact_size_cap(monkeypatch):
    monkeypatch.setenv("WALK_SIZE_CAP", "10")
    with pytest.raises(errors.TooLarge):
        quantum_find_marked_exact(uniform_chain(4), [0], 1)


def test_run_record_fields():
    rec = run_record("u4", uniform_chain(4), [1], 0.25, 3, amp_k_max=4)
    assert set(rec) == {"chain_id", "n", "marked", "epsilon", "delta", "K", "p_output1", "amp", "cost_total"}
    assert len(rec["amp"]) == 4
    assert rec["cost_total"] == 1 + 2 * 3 + 4 * 3 + 1
