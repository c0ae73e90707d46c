"""Quantized bipartite walks: projectors, the walk unitary, and its powers.

States are flattened row vectors with index ``i*m + j`` for ``|i>|j>``. Larger
registers are laid out most significant first in the order
``[control, left, right, ancilla]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _config
from .errors import DimensionMismatch, InputError, NormDrift, TooLarge
from .markov import StochasticMatrix, _as_chain, _require_symmetric
from .spectral import Discriminant, LiftedSpectrum, lift_coefficients, walk_systems

__all__ = [
    "QuantumState",
    "BipartiteWalk",
    "WalkOperator",
    "WalkSpectrum",
    "build_projectors",
    "walk_unitary",
    "stationary_state",
    "stationary_matrix",
    "apply_power",
]

_SUMMARY_THRESHOLD = 10_000
_DRIFT_PER_STEP = 1e-12
_REPEAT_LIMIT = 100_000


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Amplitudes over a product of registers of sizes ``dims``."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != math.prod(dims):
            raise DimensionMismatch(math.prod(dims), amps.size)
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > 1e-10:
            raise InputError(f"state norm is {np.linalg.norm(amps)!r}, expected 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_json(self) -> dict:
        if self.amplitudes.size > _SUMMARY_THRESHOLD:
            top = np.argsort(-np.abs(self.amplitudes), kind="stable")[:16]
            return {
                "dims": list(self.dims),
                "norm": self.norm,
                "top": [
                    {
                        "index": [int(t) for t in np.unravel_index(k, self.dims)],
                        "re": float(self.amplitudes[k].real),
                        "im": float(self.amplitudes[k].imag),
                    }
                    for k in top
                ],
            }
        return {
            "dims": list(self.dims),
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "QuantumState":
        if "re" not in obj:
            raise InputError("summary exports cannot be loaded back into a state")
        amps = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        return cls(tuple(obj["dims"]), amps)


@dataclass(frozen=True, eq=False)
class BipartiteWalk:
    """A pair of stochastic maps: ``c`` is n x m (left to right), ``r`` is m x n."""

    c: StochasticMatrix
    r: StochasticMatrix

    def __post_init__(self):
        c = _as_chain(self.c)
        r = _as_chain(self.r)
        if r.shape != (c.cols, c.rows):
            raise DimensionMismatch((c.cols, c.rows), r.shape)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "r", r)

    @classmethod
    def from_chain(cls, p) -> "BipartiteWalk":
        p = _as_chain(p)
        return cls(p, p)

    @property
    def n(self) -> int:
        return self.c.rows

    @property
    def m(self) -> int:
        return self.c.cols

    @property
    def dim(self) -> int:
        return self.n * self.m

    def half_discriminant(self) -> np.ndarray:
        """``sqrt(c o r^T)``: the cross block of the discriminant."""
        c, rt = self.c.entries, self.r.entries.T
        return np.where(c == rt, c, np.sqrt(c * rt))

    def discriminant(self) -> Discriminant:
        n, m = self.n, self.m
        d = self.half_discriminant()
        mat = np.zeros((n + m, n + m), dtype=complex)
        mat[:n, n:] = d
        mat[n:, :n] = d.T
        return Discriminant(mat, (n, m))


def build_projectors(walk: BipartiteWalk) -> tuple[np.ndarray, np.ndarray]:
    """Dense projectors onto span{sqrt c_i} and span{sqrt r_j}."""
    a_sys, b_sys = walk_systems(walk.c.entries, walk.r.entries)
    return a_sys.projector().real, b_sys.projector().real


class WalkSpectrum:
    """Eigenstructure of a quantized walk held as coefficient pairs.

    Each unit eigenvector ``z_k`` is stored through ``(a_k, b_k)`` with
    ``z_k[i, j] = a_k[i] sqrt(c[i, j]) + b_k[j] sqrt(r[j, i])``, so nothing of
    size ``n*m`` per eigenvector is ever formed unless asked for.
    """

    def __init__(self, walk: BipartiteWalk, tol: float = _config.CLUSTER_TOL):
        self.walk = walk
        self.lifted: LiftedSpectrum = lift_coefficients(walk.discriminant(), walk.dim, tol)
        self.eigenvalues, coef = self.lifted.unit_coefficients()
        n = walk.n
        self.a = coef[:, :n]
        self.b = coef[:, n:]
        self.sc = np.sqrt(walk.c.entries)
        self.sr_t = np.sqrt(walk.r.entries).T

    @property
    def thetas(self) -> np.ndarray:
        return np.angle(self.eigenvalues)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Coefficients ``gamma_k = <x, z_k>`` of an n x m state."""
        x = np.asarray(x).reshape(self.walk.n, self.walk.m)
        pa = np.sum(x * self.sc, axis=1)
        pb = np.sum(x * self.sr_t, axis=0)
        return self.a.conj() @ pa + self.b.conj() @ pb

    def rows(self, rows) -> np.ndarray:
        """Entries of every ``z_k`` on the given left indices: shape (l, len(rows), m)."""
        rows = np.asarray(rows, dtype=int)
        return (
            self.a[:, rows, None] * self.sc[None, rows, :]
            + self.b[:, None, :] * self.sr_t[None, rows, :]
        )

    def vectors(self) -> np.ndarray:
        """All unit eigenvectors as flattened rows."""
        return self.rows(np.arange(self.walk.n)).reshape(len(self.eigenvalues), -1)

    def power(self, x: np.ndarray, k: int) -> np.ndarray:
        """``x mu^k`` through the eigendecomposition; mu is identity off the busy part."""
        x = np.asarray(x, dtype=complex).ravel()
        z = self.vectors()
        gamma = self.project(x)
        return x + (gamma * (self.eigenvalues**k - 1.0)) @ z


class WalkOperator:
    """The walk unitary ``mu = (2C - I)(2R - I)`` in right-action form.

    ``mu`` is materialized for dimensions up to ``materialize_limit``; larger
    walks are applied through the rank-structured reflections
    ``x -> 2 (x C) - x`` without ever forming a dense matrix.
    """

    def __init__(self, walk: BipartiteWalk, materialize_limit: int = _config.MATERIALIZE_LIMIT):
        self.walk = walk
        self.n, self.m = walk.n, walk.m
        self.dim = walk.dim
        self._sc = np.sqrt(walk.c.entries)
        self._sr_t = np.sqrt(walk.r.entries).T
        self.materialized = self.dim <= materialize_limit
        if self.materialized:
            _ = self.mu

    def _check_cap(self):
        cap = _config.size_cap()
        if self.dim > cap:
            raise TooLarge(self.dim, cap)

    @cached_property
    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        self._check_cap()
        return build_projectors(self.walk)

    @property
    def c_proj(self) -> np.ndarray:
        return self.projectors[0]

    @property
    def r_proj(self) -> np.ndarray:
        return self.projectors[1]

    @cached_property
    def mu(self) -> np.ndarray:
        c_proj, r_proj = self.projectors
        eye = np.eye(self.dim)
        return (2 * c_proj - eye) @ (2 * r_proj - eye)

    @cached_property
    def spectrum(self) -> WalkSpectrum:
        return WalkSpectrum(self.walk)

    def step(self, x: np.ndarray) -> np.ndarray:
        """One application ``x mu`` of the walk (batched over leading axes)."""
        x = np.asarray(x)
        if self.materialized:
            return x @ self.mu
        shape = x.shape
        xs = x.reshape(-1, self.n, self.m)
        alpha = np.sum(xs * self._sc, axis=2)
        xs = 2 * alpha[:, :, None] * self._sc - xs
        beta = np.sum(xs * self._sr_t, axis=1)
        xs = 2 * beta[:, None, :] * self._sr_t - xs
        return xs.reshape(shape)


def walk_unitary(walk: BipartiteWalk) -> WalkOperator:
    """Construct the walk operator; refuses walks above the dense size cap."""
    cap = _config.size_cap()
    if walk.dim > cap:
        raise TooLarge(walk.dim, cap)
    return WalkOperator(walk)


def stationary_matrix(p, pi=None) -> np.ndarray:
    """``sqrt(pi_i P[i, j])`` as an n x n array; ``pi`` defaults to uniform."""
    p = _as_chain(p)
    n = p.rows
    if pi is None:
        _require_symmetric(p)
        weights = np.full(n, 1.0 / n)
    else:
        weights = np.asarray(pi, dtype=float)
        if weights.shape != (n,):
            raise DimensionMismatch(n, weights.shape)
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > _config.STOCH_TOL * n:
            raise InputError("pi must be a probability vector")
        flow = weights[:, None] * p.entries
        if np.max(np.abs(flow - flow.T)) > _config.SYM_TOL:
            raise InputError("chain is not reversible with respect to pi")
    return np.sqrt(weights[:, None] * p.entries)


def stationary_state(p, pi=None) -> QuantumState:
    """The walk-invariant state with amplitude ``sqrt(P[i, j] / n)`` at ``|i>|j>``.

    For a chain reversible with respect to ``pi`` the amplitude is
    ``sqrt(pi_i P[i, j])`` instead.
    """
    u = stationary_matrix(p, pi)
    return QuantumState(u.shape, u.ravel())


def apply_power(op: WalkOperator, state: QuantumState, k: int, method: str = "auto") -> QuantumState:
    """``state mu^k`` by repeated multiplication or through the eigendecomposition.

    ``method`` is ``"repeat"``, ``"eigen"`` or ``"auto"`` (repeat up to 10^5
    steps). The result is never renormalized; a norm drift above
    ``k * 1e-12`` raises ``NormDrift``.
    """
    if k < 0:
        raise InputError(f"k must be nonnegative, got {k}")
    if state.amplitudes.size != op.dim:
        raise DimensionMismatch(op.dim, state.amplitudes.size)
    if method == "auto":
        method = "repeat" if k <= _REPEAT_LIMIT else "eigen"
    x = state.amplitudes
    if method == "repeat":
        for _ in range(k):
            x = op.step(x)
    elif method == "eigen":
        x = op.spectrum.power(x, k)
    else:
        raise InputError(f"unknown method {method!r}")
    before, after = state.norm, float(np.linalg.norm(x))
    allowed = max(k, 1) * _DRIFT_PER_STEP
    if abs(after - before) > allowed:
        raise NormDrift(abs(after - before), allowed)
    return QuantumState(state.dims, x, normalized=state.normalized)
