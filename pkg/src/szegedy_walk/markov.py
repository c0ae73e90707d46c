"""Classical Markov chains: validation, spectra, marked-set perturbation, generators."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _config
from .errors import (
    EigensolverFailure,
    EmptyMarkedSet,
    InputError,
    NegativeEntry,
    NotSquare,
    NotSymmetric,
    RowSumViolation,
    TooLarge,
)

__all__ = [
    "StochasticMatrix",
    "MarkedSet",
    "ChainAnalysis",
    "validate_stochastic",
    "eigenvalue_gap",
    "perturb_absorbing",
    "half_discriminant",
    "spectral_radius_restricted",
    "johnson_chain",
    "johnson_subsets",
    "johnson_eigenvalues",
    "uniform_chain",
    "grover_chain",
    "lazy_cycle_chain",
    "random_symmetric_chain",
    "chain_to_csv",
    "chain_from_csv",
    "chain_to_json",
    "chain_from_json",
    "marked_to_json",
    "marked_from_json",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """Row-stochastic nonnegative matrix. Build it with :func:`validate_stochastic`."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def asymmetry(self) -> float:
        if not self.is_square:
            return math.inf
        return float(np.max(np.abs(self.entries - self.entries.T), initial=0.0))

    def is_symmetric(self, tol: float = _config.SYM_TOL) -> bool:
        return self.asymmetry() <= tol

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __getitem__(self, key):
        return self.entries[key]

    def __repr__(self):
        return f"StochasticMatrix({self.rows}x{self.cols})"


@dataclass(frozen=True)
class MarkedSet:
    """Subset G of ``range(universe_size)``; members are kept sorted."""

    universe_size: int
    members: tuple[int, ...] = ()

    def __post_init__(self):
        members = tuple(int(m) for m in self.members)
        if len(set(members)) != len(members):
            raise InputError(f"duplicate members in marked set: {members}")
        for m in members:
            if not 0 <= m < self.universe_size:
                raise InputError(f"marked index {m} outside [0, {self.universe_size})")
        object.__setattr__(self, "members", tuple(sorted(members)))

    @classmethod
    def empty(cls, n: int) -> "MarkedSet":
        return cls(n, ())

    @classmethod
    def full(cls, n: int) -> "MarkedSet":
        return cls(n, tuple(range(n)))

    def __len__(self):
        return len(self.members)

    def __contains__(self, i) -> bool:
        return int(i) in self.members

    def __iter__(self):
        return iter(self.members)

    @property
    def epsilon(self) -> float:
        return len(self.members) / self.universe_size

    def mask(self) -> np.ndarray:
        m = np.zeros(self.universe_size, dtype=bool)
        m[list(self.members)] = True
        return m

    def complement(self) -> tuple[int, ...]:
        s = set(self.members)
        return tuple(i for i in range(self.universe_size) if i not in s)


@dataclass(frozen=True, eq=False)
class ChainAnalysis:
    """Spectrum of a symmetric chain.

    ``gap`` is one minus the second largest eigenvalue (zero when the top
    eigenvalue is degenerate). ``abs_gap`` uses the largest non-principal
    modulus instead and is always <= ``gap``.
    """

    eigenvalues: np.ndarray  # descending
    gap: float
    abs_gap: float
    is_symmetric: bool = field(default=True)


def validate_stochastic(m, tol: float = _config.STOCH_TOL) -> StochasticMatrix:
    """Check nonnegativity and unit row sums; return the typed matrix."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise InputError(f"expected a 2-d matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    neg = np.argwhere(a < 0)
    if len(neg):
        i, j = (int(x) for x in neg[0])
        raise NegativeEntry(i, j, float(a[i, j]))
    sums = a.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if len(bad):
        i = int(bad[0])
        raise RowSumViolation(i, float(sums[i]))
    return StochasticMatrix(a)


def _as_chain(p) -> StochasticMatrix:
    return p if isinstance(p, StochasticMatrix) else validate_stochastic(p)


def _require_symmetric(p: StochasticMatrix, tol: float = _config.SYM_TOL):
    if not p.is_square:
        raise NotSquare(p.shape)
    dev = p.asymmetry()
    if dev > tol:
        raise NotSymmetric(dev)


def eigenvalue_gap(p, tol: float = _config.SYM_TOL) -> ChainAnalysis:
    p = _as_chain(p)
    _require_symmetric(p, tol)
    a = p.entries
    try:
        lam = np.linalg.eigvalsh((a + a.T) / 2)[::-1]
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    if abs(lam[0] - 1.0) > 1e-10:
        raise EigensolverFailure(f"top eigenvalue {lam[0]!r} is not 1")
    if len(lam) == 1:
        return ChainAnalysis(lam, 1.0, 1.0)
    if lam[1] > 1.0 - 1e-10:
        return ChainAnalysis(lam, 0.0, 0.0)
    gap = float(min(1.0, 1.0 - lam[1]))
    abs_gap = float(min(1.0, 1.0 - np.max(np.abs(lam[1:]))))
    return ChainAnalysis(lam, gap, max(abs_gap, 0.0))


def _as_marked(g, n: int) -> MarkedSet:
    if isinstance(g, MarkedSet):
        if g.universe_size != n:
            raise InputError(f"marked set universe {g.universe_size} != chain size {n}")
        return g
    return MarkedSet(n, tuple(g))


def perturb_absorbing(p, g) -> StochasticMatrix:
    """Make every marked state absorbing; unmarked rows are untouched."""
    p = _as_chain(p)
    if not p.is_square:
        raise NotSquare(p.shape)
    g = _as_marked(g, p.rows)
    a = np.array(p.entries)
    for i in g:
        a[i] = 0.0
        a[i, i] = 1.0
    return StochasticMatrix(a)


def half_discriminant(p) -> np.ndarray:
    """Entrywise sqrt(P[i,j] P[j,i])."""
    a = np.asarray(p, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(a.shape)
    # exact on symmetric pairs, where sqrt(x*x) could otherwise round
    return np.where(a == a.T, a, np.sqrt(a * a.T))


def spectral_radius_restricted(p, g) -> float:
    """Spectral radius of P restricted to the unmarked states (P1 block)."""
    p = _as_chain(p)
    _require_symmetric(p)
    g = _as_marked(g, p.rows)
    if len(g) == 0:
        raise EmptyMarkedSet()
    keep = np.array(g.complement(), dtype=int)
    if keep.size == 0:
        return 0.0
    p1 = p.entries[np.ix_(keep, keep)]
    lam = np.linalg.eigvalsh((p1 + p1.T) / 2)
    return float(np.max(np.abs(lam)))


# generators ---------------------------------------------------------------


def johnson_subsets(universe: int, subset_size: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(universe), subset_size))


def johnson_chain(universe: int, subset_size: int, cap: int = _config.JOHNSON_CAP) -> StochasticMatrix:
    """Walk on k-subsets of an N-set: swap one element in for one element out.

    States are indexed in lexicographic order of ``itertools.combinations``.
    """
    N, k = int(universe), int(subset_size)
    if not 0 < k < N:
        raise InputError(f"need 0 < k < N, got N={N}, k={k}")
    size = math.comb(N, k)
    if size > cap:
        raise TooLarge(size, cap)
    subsets = johnson_subsets(N, k)
    index = {h: t for t, h in enumerate(subsets)}
    w = 1.0 / (k * (N - k))
    a = np.zeros((size, size))
    for t, h in enumerate(subsets):
        inside = set(h)
        for out in h:
            for new in range(N):
                if new in inside:
                    continue
                h2 = tuple(sorted((inside - {out}) | {new}))
                a[t, index[h2]] = w
    return validate_stochastic(a)


def johnson_eigenvalues(universe: int, subset_size: int) -> list[tuple[float, int]]:
    """Closed-form spectrum of :func:`johnson_chain` as (eigenvalue, multiplicity)."""
    N, k = universe, subset_size
    out = []
    for j in range(min(k, N - k) + 1):
        lam = ((k - j) * (N - k - j) - j) / (k * (N - k))
        mult = math.comb(N, j) - (math.comb(N, j - 1) if j > 0 else 0)
        out.append((lam, mult))
    return out


def uniform_chain(n: int) -> StochasticMatrix:
    """P = J/n: jump to a uniformly random state (self-loops included)."""
    return StochasticMatrix(np.full((n, n), 1.0 / n))


def grover_chain(p: float) -> StochasticMatrix:
    """Two-state chain (unmarked, marked) with the marked state absorbing."""
    if not 0.0 <= p <= 1.0:
        raise InputError(f"p must lie in [0, 1], got {p}")
    return validate_stochastic([[1.0 - p, p], [0.0, 1.0]])


def lazy_cycle_chain(n: int, laziness: float = 0.5, chords: int = 0) -> StochasticMatrix:
    """Lazy symmetric walk on the n-cycle, optionally with ``chords`` extra
    circulant offsets spread over the cycle.

    The chord offsets are ``round(n * t / (chords + 1))`` for t = 1..chords,
    so more chords shrink the mixing time while the chain stays symmetric.
    """
    if n < 3:
        raise InputError("cycle needs n >= 3")
    offsets = {1}
    for t in range(1, chords + 1):
        s = round(n * t / (chords + 1)) % n
        if s:
            offsets.add(min(s, n - s))
    a = np.zeros((n, n))
    moves = []
    for s in sorted(offsets):
        moves.extend({s % n, (-s) % n})
    w = (1.0 - laziness) / len(moves)
    for i in range(n):
        a[i, i] += laziness
        for s in moves:
            a[i, (i + s) % n] += w
    return validate_stochastic(a)


def random_symmetric_chain(
    n: int,
    rng: np.random.Generator,
    density: float = 1.0,
    max_iter: int = 10_000,
    tol: float = 1e-14,
) -> StochasticMatrix:
    """Random symmetric doubly stochastic chain via symmetric Sinkhorn scaling.

    A symmetric positive-diagonal matrix is rescaled as ``D^-1/2 A D^-1/2``
    until every row sum is within ``tol`` of one.
    """
    a = rng.random((n, n))
    if density < 1.0:
        a = a * (rng.random((n, n)) < density)
    a = np.triu(a) + np.triu(a, 1).T
    a[np.diag_indices(n)] += 0.1
    for _ in range(max_iter):
        s = a.sum(axis=1)
        if np.max(np.abs(s - 1.0)) <= tol:
            break
        d = 1.0 / np.sqrt(s)
        a = d[:, None] * a * d[None, :]
        a = (a + a.T) / 2
    else:
        raise EigensolverFailure(f"Sinkhorn scaling did not converge in {max_iter} iterations")
    return validate_stochastic(a)


# import / export -------------------------------------------------------


def chain_to_csv(p) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(p, dtype=float):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def chain_from_csv(text: str) -> StochasticMatrix:
    rows = [[float(x) for x in r] for r in csv.reader(io.StringIO(text)) if r]
    return validate_stochastic(rows)


def chain_to_json(p) -> str:
    a = np.asarray(p, dtype=float)
    return json.dumps({"n": int(a.shape[0]), "rows": a.tolist()})


def chain_from_json(text: str) -> StochasticMatrix:
    obj = json.loads(text)
    rows = obj["rows"]
    if "n" in obj and int(obj["n"]) != len(rows):
        raise InputError(f"'n' = {obj['n']} but {len(rows)} rows given")
    return validate_stochastic(rows)


def marked_to_json(g: MarkedSet) -> str:
    return json.dumps(list(g.members))


def marked_from_json(text: str, n: int) -> MarkedSet:
    return MarkedSet(n, tuple(json.loads(text)))
