"""Detecting a marked set with a classical walk and with its quantized version.

The quantum detector prepares ``|0>u``, applies a Hadamard to the control
qubit, the perturbed walk ``nu^K`` controlled on it, and a second Hadamard.
The final state is ``|0>(u + u nu^K)/2 + |1>(u - u nu^K)/2``; measuring
``|b>|i>|j>`` outputs 1 when ``b = 1`` or ``i`` is marked.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import _config
from .errors import EmptyMarkedSet, InputError, TooLarge
from .markov import (
    MarkedSet,
    StochasticMatrix,
    _as_chain,
    _as_marked,
    _require_symmetric,
    eigenvalue_gap,
    perturb_absorbing,
)
from .walk import BipartiteWalk, QuantumState, WalkOperator, WalkSpectrum, stationary_matrix

__all__ = [
    "CostLedger",
    "FindMarkedOutcome",
    "AmpCurve",
    "PhaseSeparation",
    "Decision",
    "FindMarkedAnalysis",
    "classical_find_marked",
    "classical_failure_probability",
    "classical_failure_curve",
    "perturbed_walk",
    "perturbed_walk_unitary",
    "perturbed_walk_ancilla",
    "quantum_find_marked_exact",
    "quantum_find_marked",
    "amp_curve",
    "phase_separation",
    "rule_k_max",
    "average_output_one",
    "decision_procedure",
    "run_record",
]

EMPTY = "EMPTY"
LARGE = "LARGE"


@dataclass
class CostLedger:
    """Counts of setup (p0), walk-step (p1) and marked-test (p2) calls."""

    p0_price: float = 1.0
    p1_price: float = 1.0
    p2_price: float = 1.0
    p0_count: int = 0
    p1_count: int = 0
    p2_count: int = 0

    def charge(self, p0: int = 0, p1: int = 0, p2: int = 0) -> None:
        if min(p0, p1, p2) < 0:
            raise InputError("ledger counters only grow")
        self.p0_count += p0
        self.p1_count += p1
        self.p2_count += p2

    @property
    def total(self) -> float:
        return (
            self.p0_count * self.p0_price
            + self.p1_count * self.p1_price
            + self.p2_count * self.p2_price
        )

    def to_json(self) -> dict:
        return {**asdict(self), "total": self.total}


@dataclass(frozen=True)
class FindMarkedOutcome:
    """One run of a detector.

    ``final_sample`` is ``(i,)`` for the classical walker and ``(b, i, j)`` for
    the quantum measurement.
    """

    output_bit: int
    final_sample: tuple[int, ...]
    k_used: int
    ledger: CostLedger

    def to_json(self) -> dict:
        return {
            "output_bit": self.output_bit,
            "final_sample": list(self.final_sample),
            "k_used": self.k_used,
            "ledger": self.ledger.to_json(),
        }


def _setup(p, g) -> tuple[StochasticMatrix, MarkedSet]:
    p = _as_chain(p)
    _require_symmetric(p)
    return p, _as_marked(g, p.rows)


# classical -----------------------------------------------------------------


def classical_find_marked(p, g, k: int, seed=None, ledger: CostLedger | None = None) -> FindMarkedOutcome:
    """Start uniformly, then ``k`` rounds of test-then-step; output the final test.

    Once a marked state is found the walker stays put, so the remaining tests
    are answered without moving.
    """
    p, g = _setup(p, g)
    if k < 0:
        raise InputError(f"k must be nonnegative, got {k}")
    ledger = CostLedger() if ledger is None else ledger
    rng = np.random.default_rng(seed)
    n = p.rows
    cum = np.cumsum(p.entries, axis=1)
    marked = g.mask()
    i = int(rng.integers(n))
    ledger.charge(p0=1)
    steps = 0
    while steps < k and not marked[i]:
        i = min(int(np.searchsorted(cum[i], rng.random(), side="right")), n - 1)
        steps += 1
    ledger.charge(p1=steps, p2=k + 1)
    return FindMarkedOutcome(int(marked[i]), (i,), k, ledger)


def classical_failure_curve(p, g, k_max: int) -> np.ndarray:
    """Exact probability of outputting 0 after ``K`` steps, for ``K = 0..k_max``.

    Equals ``(1/n) 1^T P1^K 1`` with ``P1`` the chain restricted to unmarked states.
    """
    p, g = _setup(p, g)
    n = p.rows
    keep = np.array(g.complement(), dtype=int)
    out = np.zeros(k_max + 1)
    if keep.size == 0:
        return out
    p1 = p.entries[np.ix_(keep, keep)]
    f = np.ones(keep.size)
    for k in range(k_max + 1):
        out[k] = f.sum() / n
        f = p1 @ f
    return out


def classical_failure_probability(p, g, k: int) -> float:
    return float(classical_failure_curve(p, g, k)[-1])


# perturbed walk ------------------------------------------------------------


def perturbed_walk(p, g) -> BipartiteWalk:
    """The bipartite walk ``(P', P')`` of the chain made absorbing on ``g``."""
    p, g = _setup(p, g)
    return BipartiteWalk.from_chain(perturb_absorbing(p, g))


def perturbed_walk_unitary(p, g) -> WalkOperator:
    """``nu``: the quantization of the absorbing chain."""
    walk = perturbed_walk(p, g)
    cap = _config.size_cap()
    if walk.dim > cap:
        raise TooLarge(walk.dim, cap)
    return WalkOperator(walk)


def perturbed_walk_ancilla(p, g, literal: bool = False) -> np.ndarray:
    """``nu`` built from marked-test subroutines on ``[left, right, ancilla]``.

    Each diffusion computes ``g`` of its control register into the ancilla,
    diffuses the other register with the unperturbed row when the ancilla is 0
    and with ``2|i><i| - I`` when it is 1, then uncomputes ``g``. With
    ``literal=True`` the marked branch does nothing instead, which is the
    variant that fails to reproduce ``nu``.
    """
    p, g = _setup(p, g)
    n = p.rows
    d = 2 * n * n
    if d > _config.size_cap():
        raise TooLarge(d, _config.size_cap())
    marked = g.mask()
    sp = np.sqrt(p.entries)
    eye_n = np.eye(n)

    def reflect_about(vec):
        return 2 * np.outer(vec, vec) - eye_n

    def tensor_index(i, j, a):
        return (i * n + j) * 2 + a

    def diffusion(on_left: bool) -> np.ndarray:
        compute = np.zeros((d, d))
        middle = np.zeros((d, d))
        for c in range(n):
            for t in range(n):
                for a in range(2):
                    i, j = (c, t) if on_left else (t, c)
                    compute[tensor_index(i, j, a), tensor_index(i, j, a ^ int(marked[c]))] = 1.0
        for c in range(n):
            for a in range(2):
                if a == 0:
                    block = reflect_about(sp[c])
                elif literal:
                    block = eye_n
                else:
                    block = reflect_about(eye_n[c])
                for t in range(n):
                    for s in range(n):
                        if on_left:
                            middle[tensor_index(c, t, a), tensor_index(c, s, a)] = block[t, s]
                        else:
                            middle[tensor_index(t, c, a), tensor_index(s, c, a)] = block[t, s]
        return compute @ middle @ compute

    return diffusion(True) @ diffusion(False)


# quantum -------------------------------------------------------------------


def quantum_find_marked_exact(p, g, k: int) -> tuple[float, QuantumState]:
    """Step-by-step state-vector run over ``[control, left, right]``.

    Returns the exact probability of outputting 1 and the final state.
    """
    p, g = _setup(p, g)
    n = p.rows
    cap = _config.size_cap()
    if n * n > cap:
        raise TooLarge(n * n, cap)
    if k < 0:
        raise InputError(f"k must be nonnegative, got {k}")
    op = perturbed_walk_unitary(p, g)
    u = stationary_matrix(p).ravel().astype(complex)
    state = np.zeros((2, n * n), dtype=complex)
    state[0] = u
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    state = h @ state
    branch = state[1]
    for _ in range(k):
        branch = op.step(branch)
    state[1] = branch
    state = h @ state
    probs = np.abs(state.reshape(2, n, n)) ** 2
    prob = float(probs[1].sum() + probs[0][g.mask()].sum())
    return prob, QuantumState((2, n, n), state.ravel())


class FindMarkedAnalysis:
    """Closed-form FindMarked quantities for every K at once.

    With unit eigenvectors ``z_k`` of ``nu`` and ``u = u_idle + sum gamma_k z_k``
    (``u_idle`` fixed by ``nu``), ``u nu^K = u_idle + sum gamma_k theta_k^K z_k``.
    """

    def __init__(self, p, g):
        p, g = _setup(p, g)
        self.p, self.g = p, g
        self.n = p.rows
        self.spectrum = WalkSpectrum(perturbed_walk(p, g))
        self.eig = self.spectrum.eigenvalues
        self.u = stationary_matrix(p).astype(complex)
        self.gamma = self.spectrum.project(self.u)
        self.idle_sq = max(0.0, 1.0 - float(np.sum(np.abs(self.gamma) ** 2)))
        self.u_prime = self.u.copy()
        self.u_prime[g.mask()] = 0.0
        self.u_prime_sq = float(np.sum(np.abs(self.u_prime) ** 2))
        self.gamma_prime = self.spectrum.project(self.u_prime)
        busy = float(np.sum(np.abs(self.gamma_prime) ** 2))
        self.idle_prime_sq = max(0.0, self.u_prime_sq - busy)
        rows = np.array(g.members, dtype=int)
        self._rows = rows
        if rows.size:
            z_g = self.spectrum.rows(rows).reshape(len(self.eig), -1)
            self._z_g = z_g
            self._u_idle_g = self.u[rows].ravel() - self.gamma @ z_g
        self.u_overlap = float(np.vdot(self.u_prime, self.u).real)

    def _powers(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=float)
        return np.exp(1j * np.outer(ks, np.angle(self.eig)))

    def stay_norm_sq(self, ks) -> np.ndarray:
        """``|(u + u nu^K)/2|^2``."""
        w = np.abs(1 + self._powers(ks)) ** 2 / 4
        return self.idle_sq + w @ np.abs(self.gamma) ** 2

    def flip_norm_sq(self, ks) -> np.ndarray:
        """``|(u - u nu^K)/2|^2``, the probability of measuring ``b = 1``."""
        w = np.abs(1 - self._powers(ks)) ** 2 / 4
        return w @ np.abs(self.gamma) ** 2

    def marked_norm_sq(self, ks) -> np.ndarray:
        """Mass of ``(u + u nu^K)/2`` on marked left indices."""
        ks = np.asarray(ks)
        if self._rows.size == 0:
            return np.zeros(ks.shape)
        out = np.empty(ks.shape, dtype=float)
        flat = ks.ravel()
        for start in range(0, flat.size, 2048):
            chunk = flat[start : start + 2048]
            evolved = self._u_idle_g + (self._powers(chunk) * self.gamma) @ self._z_g
            half = (self.u[self._rows].ravel() + evolved) / 2
            out.flat[start : start + chunk.size] = np.sum(np.abs(half) ** 2, axis=1)
        return out

    def output_one(self, ks) -> np.ndarray:
        return self.flip_norm_sq(ks) + self.marked_norm_sq(ks)

    def amp(self, ks) -> np.ndarray:
        """``|u' + u' nu^K|^2``; the part of ``u'`` fixed by ``nu`` contributes 4x its mass."""
        w = np.abs(1 + self._powers(ks)) ** 2
        return 4 * self.idle_prime_sq + w @ np.abs(self.gamma_prime) ** 2


def quantum_find_marked(p, g, k: int, seed=None, ledger: CostLedger | None = None) -> FindMarkedOutcome:
    """Sample one measurement of the exact final state."""
    p, g = _setup(p, g)
    _, state = quantum_find_marked_exact(p, g, k)
    ledger = CostLedger() if ledger is None else ledger
    ledger.charge(p0=1, p1=2 * k, p2=4 * k + 1)
    rng = np.random.default_rng(seed)
    probs = state.probabilities()
    idx = int(rng.choice(probs.size, p=probs / probs.sum()))
    b, i, j = (int(t) for t in np.unravel_index(idx, state.dims))
    bit = int(b == 1 or i in g)
    return FindMarkedOutcome(bit, (b, i, j), k, ledger)


@dataclass(frozen=True, eq=False)
class AmpCurve:
    """``amp_K`` for ``K = 1..k_max`` from the spectral formula and by direct evolution.

    ``gamma_sq`` and ``thetas`` list the weights and phases of ``u'``; the part
    of ``u'`` fixed by ``nu`` appears as one component with phase 0.
    """

    k_values: np.ndarray
    amp: np.ndarray
    amp_direct: np.ndarray
    gamma_sq: np.ndarray
    thetas: np.ndarray
    u_overlap: float

    @property
    def max_disagreement(self) -> float:
        return float(np.max(np.abs(self.amp - self.amp_direct))) if self.amp.size else 0.0

    def to_json(self) -> dict:
        return {
            "k_values": self.k_values.tolist(),
            "amp": self.amp.tolist(),
            "amp_direct": self.amp_direct.tolist(),
            "gamma_sq": self.gamma_sq.tolist(),
            "thetas": self.thetas.tolist(),
            "u_overlap": self.u_overlap,
        }


def amp_curve(p, g, k_max: int) -> AmpCurve:
    p, g = _setup(p, g)
    if len(g) == 0:
        raise EmptyMarkedSet()
    fa = FindMarkedAnalysis(p, g)
    ks = np.arange(1, k_max + 1)
    gamma_sq = np.abs(fa.gamma_prime) ** 2
    thetas = np.angle(fa.eig)
    if fa.idle_prime_sq > 0:
        gamma_sq = np.append(gamma_sq, fa.idle_prime_sq)
        thetas = np.append(thetas, 0.0)
    amp = (np.abs(1 + np.exp(1j * np.outer(ks, thetas))) ** 2) @ gamma_sq
    op = WalkOperator(fa.spectrum.walk)
    x = fa.u_prime.ravel()
    direct = np.empty(k_max)
    y = x
    for t in range(k_max):
        y = op.step(y)
        direct[t] = float(np.sum(np.abs(x + y) ** 2))
    return AmpCurve(ks, amp, direct, gamma_sq, thetas, fa.u_overlap)


@dataclass(frozen=True)
class PhaseSeparation:
    """Eigenphases of ``nu`` lifted from discriminant eigenvalues ``omega <= 1 - delta*eps/2``."""

    bound: float
    omega_threshold: float
    omegas: tuple[float, ...]
    thetas: tuple[float, ...]

    @property
    def min_abs_theta(self) -> float:
        return min((abs(t) for t in self.thetas), default=math.pi)

    def violations(self, tol: float = 1e-9) -> int:
        return sum(abs(t) < self.bound - tol for t in self.thetas)


def phase_separation(p, g, epsilon: float | None = None, delta: float | None = None) -> PhaseSeparation:
    p, g = _setup(p, g)
    eps = g.epsilon if epsilon is None else epsilon
    dl = eigenvalue_gap(p).gap if delta is None else delta
    threshold = 1.0 - dl * eps / 2
    spec = WalkSpectrum(perturbed_walk(p, g))
    omegas, thetas = [], []
    for e in spec.lifted.entries:
        if e.lambda_m <= threshold:
            for t in e.thetas:
                omegas.append(float(e.lambda_m))
                thetas.append(t)
    return PhaseSeparation(math.sqrt(dl * eps), threshold, tuple(omegas), tuple(thetas))


def rule_k_max(delta: float, epsilon: float, rule_constant: float = 1000.0) -> int:
    """Upper end of the K range ``1..ceil(rule_constant / sqrt(delta * epsilon))``."""
    if delta <= 0 or epsilon <= 0:
        raise InputError("delta and epsilon must be positive")
    return int(math.ceil(rule_constant / math.sqrt(delta * epsilon)))


def average_output_one(p, g, epsilon: float, rule_constant: float = 1000.0) -> float:
    """Exact output-1 probability with K uniform over the rule range."""
    p, g = _setup(p, g)
    k_max = rule_k_max(eigenvalue_gap(p).gap, epsilon, rule_constant)
    fa = FindMarkedAnalysis(p, g)
    return float(np.mean(fa.output_one(np.arange(1, k_max + 1))))


@dataclass(frozen=True, eq=False)
class Decision:
    verdict: str
    rounds_run: int
    k_values: tuple[int, ...]
    round_probabilities: tuple[float, ...]
    delta: float
    epsilon: float
    k_max: int
    ledger: CostLedger = field(default_factory=CostLedger)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "rounds_run": self.rounds_run,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "k_max": self.k_max,
            "k_values": list(self.k_values),
            "round_probabilities": list(self.round_probabilities),
            "ledger": self.ledger.to_json(),
        }


def _marked_from_oracle(g_oracle, n: int) -> MarkedSet:
    if isinstance(g_oracle, MarkedSet):
        return _as_marked(g_oracle, n)
    if callable(g_oracle):
        return MarkedSet(n, tuple(i for i in range(n) if g_oracle(i)))
    return MarkedSet(n, tuple(g_oracle))


def decision_procedure(
    p,
    g_oracle: Callable[[int], bool] | MarkedSet | Iterable[int],
    epsilon: float,
    rule_constant: float = 1000.0,
    seed=None,
    rounds: int = 3000,
    ledger: CostLedger | None = None,
) -> Decision:
    """Decide EMPTY versus LARGE under the promise ``|G| = 0`` or ``|G| >= epsilon n``.

    Each round draws K uniformly from the rule range, runs the quantum
    detector, and samples its output bit; the first 1 settles LARGE. The
    promise is not checked.
    """
    p = _as_chain(p)
    _require_symmetric(p)
    g = _marked_from_oracle(g_oracle, p.rows)
    if not 0 < epsilon <= 1:
        raise InputError(f"epsilon must lie in (0, 1], got {epsilon}")
    if rounds < 1:
        raise InputError("rounds must be positive")
    delta = eigenvalue_gap(p).gap
    k_max = rule_k_max(delta, epsilon, rule_constant)
    ledger = CostLedger() if ledger is None else ledger
    rng = np.random.default_rng(seed)
    fa = FindMarkedAnalysis(p, g)
    ks, probs = [], []
    verdict = EMPTY
    for _ in range(rounds):
        k = int(rng.integers(1, k_max + 1))
        prob = float(np.clip(fa.output_one([k])[0], 0.0, 1.0))
        ledger.charge(p0=1, p1=2 * k, p2=4 * k + 1)
        ks.append(k)
        probs.append(prob)
        if rng.random() < prob:
            verdict = LARGE
            break
    return Decision(verdict, len(ks), tuple(ks), tuple(probs), delta, epsilon, k_max, ledger)


def run_record(
    chain_id: str,
    p,
    g,
    epsilon: float,
    k: int,
    amp_k_max: int = 0,
    ledger: CostLedger | None = None,
    analysis: FindMarkedAnalysis | None = None,
) -> dict:
    """One JSON-lines record for an exact quantum run at a fixed K.

    Without a ledger, the cost is that of a single quantum round at ``k``.
    """
    p, g = _setup(p, g)
    fa = FindMarkedAnalysis(p, g) if analysis is None else analysis
    if ledger is None:
        ledger = CostLedger()
        ledger.charge(p0=1, p1=2 * k, p2=4 * k + 1)
    amp = fa.amp(np.arange(1, amp_k_max + 1)).tolist() if len(g) and amp_k_max else []
    return {
        "chain_id": chain_id,
        "n": p.rows,
        "marked": list(g.members),
        "epsilon": epsilon,
        "delta": eigenvalue_gap(p).gap,
        "K": k,
        "p_output1": float(fa.output_one([k])[0]),
        "amp": amp,
        "cost_total": ledger.total,
    }
