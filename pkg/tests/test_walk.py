import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from szegedy_walk import errors
from szegedy_walk.markov import grover_chain, perturb_absorbing, random_symmetric_chain, uniform_chain
from szegedy_walk.spectral import brute_force_mu, match_unit_multisets, walk_systems
from szegedy_walk.walk import (
    BipartiteWalk,
    QuantumState,
    WalkOperator,
    apply_power,
    build_projectors,
    stationary_state,
    walk_unitary,
)

seeds = st.integers(0, 2**32 - 1)


def _random_state(rng, dims):
    x = rng.normal(size=int(np.prod(dims))) + 1j * rng.normal(size=int(np.prod(dims)))
    return QuantumState(dims, x / np.linalg.norm(x))


def test_single_state_walk_is_identity():
    op = walk_unitary(BipartiteWalk([[1.0]], [[1.0]]))
    assert np.array_equal(op.c_proj, [[1.0]])
    assert np.allclose(op.mu, [[1.0]])


def test_uniform_two_state_projector():
    c_proj, _ = build_projectors(BipartiteWalk.from_chain(uniform_chain(2)))
    v0 = np.array([1, 1, 0, 0]) / np.sqrt(2)
    v1 = np.array([0, 0, 1, 1]) / np.sqrt(2)
    assert np.allclose(c_proj, np.outer(v0, v0) + np.outer(v1, v1))


def test_grover_projector_rows():
    p = 0.3
    c_proj, _ = build_projectors(BipartiteWalk.from_chain(grover_chain(p)))
    v0 = np.array([np.sqrt(1 - p), np.sqrt(p), 0, 0])
    v1 = np.array([0, 0, 0, 1.0])
    assert np.allclose(c_proj, np.outer(v0, v0) + np.outer(v1, v1))


def test_coincident_spans_give_identity():
    # c = r^T structure with every row a point mass: both spans are the diagonal
    op = walk_unitary(BipartiteWalk(np.eye(3), np.eye(3)))
    assert np.allclose(op.mu, np.eye(9))


def test_bipartite_shape_check():
    with pytest.raises(errors.DimensionMismatch):
        BipartiteWalk(np.full((2, 3), 1 / 3), np.full((2, 3), 1 / 3))


def test_rectangular_walk_spectrum():
    rng = np.random.default_rng(7)
    c = rng.random((3, 4))
    c /= c.sum(axis=1, keepdims=True)
    r = rng.random((4, 3))
    r /= r.sum(axis=1, keepdims=True)
    op = walk_unitary(BipartiteWalk(c, r))
    a_sys, b_sys = walk_systems(c, r)
    _, vals, _ = brute_force_mu(a_sys, b_sys)
    assert match_unit_multisets(op.spectrum.lifted.eigenvalues(), vals) <= 1e-8


@given(seeds, st.integers(1, 8))
def test_unitarity_and_projectors(seed, n):
    op = walk_unitary(BipartiteWalk.from_chain(random_symmetric_chain(n, np.random.default_rng(seed))))
    eye = np.eye(op.dim)
    assert np.max(np.abs(op.mu @ op.mu.conj().T - eye)) <= 1e-10
    for proj in (op.c_proj, op.r_proj):
        assert np.max(np.abs(proj @ proj - proj)) <= 1e-10
    assert np.linalg.matrix_rank(op.c_proj) == n


@given(seeds, st.integers(1, 8))
def test_stationary_state_is_fixed(seed, n):
    p = random_symmetric_chain(n, np.random.default_rng(seed))
    op = walk_unitary(BipartiteWalk.from_chain(p))
    u = stationary_state(p)
    assert u.norm == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(u.amplitudes @ op.mu - u.amplitudes) <= 1e-10
    assert np.allclose(apply_power(op, u, 25).amplitudes, u.amplitudes, atol=1e-10)


@given(seeds, st.integers(2, 8), st.data())
def test_idle_subspace_is_fixed(seed, n, data):
    rng = np.random.default_rng(seed)
    p = random_symmetric_chain(n, rng, density=0.5)
    g = data.draw(st.lists(st.integers(0, n - 1), unique=True, max_size=n))
    op = walk_unitary(BipartiteWalk.from_chain(perturb_absorbing(p, g)))
    busy = np.hstack([op.c_proj, op.r_proj])
    u, s, _ = np.linalg.svd(busy)
    idle = u[:, s < 1e-9].T
    if len(idle):
        assert np.max(np.abs(idle @ op.mu - idle)) <= 1e-10


@given(seeds, st.integers(1, 8))
def test_spectrum_matches_lift(seed, n):
    p = random_symmetric_chain(n, np.random.default_rng(seed))
    op = walk_unitary(BipartiteWalk.from_chain(p))
    eig = np.linalg.eigvals(op.mu)
    assert match_unit_multisets(op.spectrum.lifted.eigenvalues(), eig) <= 1e-8


def test_uniform_stationary_state():
    assert np.allclose(stationary_state(uniform_chain(2)).amplitudes, [0.5] * 4)


def test_grover_stationary_state_with_pi():
    p = 0.3
    u = stationary_state([[1 - p, p], [1 - p, p]], pi=[1 - p, p])
    s = np.sqrt(p * (1 - p))
    assert np.allclose(u.amplitudes, [1 - p, s, s, p])


def test_stationary_requires_symmetry():
    with pytest.raises(errors.NotSymmetric):
        stationary_state(grover_chain(0.3))
    with pytest.raises(errors.InputError):
        stationary_state(grover_chain(0.3), pi=[0.5, 0.5])


def test_structured_step_matches_dense(rng):
    p = perturb_absorbing(random_symmetric_chain(6, rng), (2,))
    walk = BipartiteWalk.from_chain(p)
    dense, structured = WalkOperator(walk), WalkOperator(walk, materialize_limit=0)
    assert not structured.materialized
    x = _random_state(rng, (6, 6)).amplitudes
    assert np.allclose(structured.step(x), dense.step(x), atol=1e-14)
    batch = np.vstack([x, 2 * x])
    assert np.allclose(structured.step(batch), batch @ dense.mu, atol=1e-13)


def test_apply_power_methods_agree(rng):
    p = perturb_absorbing(random_symmetric_chain(5, rng), (0, 3))
    op = walk_unitary(BipartiteWalk.from_chain(p))
    x = _random_state(rng, (5, 5))
    assert apply_power(op, x, 0).amplitudes == pytest.approx(x.amplitudes)
    a = apply_power(op, x, 41, method="repeat").amplitudes
    b = apply_power(op, x, 41, method="eigen").amplitudes
    c = x.amplitudes @ np.linalg.matrix_power(op.mu, 41)
    assert np.allclose(a, c, atol=1e-11)
    assert np.allclose(b, c, atol=1e-11)


def test_grover_power_formula():
    p = 0.2
    op = walk_unitary(BipartiteWalk.from_chain(grover_chain(p)))
    u_prime = QuantumState((2, 2), [np.sqrt(1 - p), 0, np.sqrt(p), 0])
    vals, z = op.spectrum.eigenvalues, op.spectrum.vectors()
    gamma = z.conj() @ u_prime.amplitudes
    busy = np.abs(gamma) > 1e-12
    # u' lies in the span of the two eigenvectors with phases -/+ theta, each with weight 1/2
    assert busy.sum() == 2
    assert np.allclose(np.abs(gamma[busy]) ** 2, 0.5)
    for k in (1, 6, 19):
        expected = (gamma[busy] * vals[busy] ** k) @ z[busy]
        assert np.allclose(apply_power(op, u_prime, k).amplitudes, expected, atol=1e-12)


def test_apply_power_dimension_check():
    op = walk_unitary(BipartiteWalk.from_chain(uniform_chain(2)))
    with pytest.raises(errors.DimensionMismatch):
        apply_power(op, QuantumState((3,), [1, 0, 0]), 1)


def test_norm_drift_is_detected():
    class Leaky(WalkOperator):
        def step(self, x):
            return 1.001 * super().step(x)

    op = Leaky(BipartiteWalk.from_chain(uniform_chain(2)))
    with pytest.raises(errors.NormDrift):
        apply_power(op, stationary_state(uniform_chain(2)), 3)


def test_walk_unitary_size_cap(monkeypatch):
    monkeypatch.setenv("WALK_SIZE_CAP", "8")
    with pytest.raises(errors.TooLarge):
        walk_unitary(BipartiteWalk.from_chain(uniform_chain(3)))


def test_large_walk_is_not_materialized():
    op = walk_unitary(BipartiteWalk.from_chain(uniform_chain(20)))
    assert not op.materialized
    u = stationary_state(uniform_chain(20))
    assert np.allclose(apply_power(op, u, 10).amplitudes, u.amplitudes, atol=1e-10)


def test_state_json_round_trip(rng):
    s = _random_state(rng, (2, 3))
    back = QuantumState.from_json(json.loads(json.dumps(s.to_json())))
    assert back.dims == (2, 3)
    assert np.array_equal(back.amplitudes, s.amplitudes)


def test_large_state_exports_summary():
    x = np.zeros(20_000)
    x[123] = 1.0
    obj = QuantumState((20_000,), x).to_json()
    assert set(obj) == {"dims", "norm", "top"}
    assert obj["top"][0]["index"] == [123]
    assert len(obj["top"]) == 16


def test_state_norm_check():
    with pytest.raises(errors.InputError):
        QuantumState((2,), [1.0, 1.0])
    QuantumState((2,), [1.0, 1.0], normalized=False)
