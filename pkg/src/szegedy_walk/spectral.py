"""Spectra of products of two reflections.

Conventions used throughout the package: states are row vectors and operators
act on the right, so ``x @ U`` applies ``U`` to ``x``. For two orthonormal
systems ``{v_i}`` (rows of ``V``) and ``{w_j}`` (rows of ``W``) the projector
onto their span is ``V^H V`` and the walk operator is

    mu = ref_A @ ref_B        (first reflect about span{v}, then about span{w})

The discriminant ``M = Gram(v, w) - I`` has entries ``<x_s, x_t> = x_s . conj(x_t)``.
Its *row* eigenvectors ``(a, b) M = lam (a, b)`` are lifted to eigenvectors of
``mu`` through the tilde map ``(a, b) -> a @ V + b @ W``:

    lam in (0,1):  a~ - lam b~ +/- i sqrt(1-lam^2) b~   with   2 lam^2 - 1 -/+ 2i lam sqrt(1-lam^2)
    lam = 1:       a~ (= b~)                              with   1
    lam = 0:       a~ and b~ separately                   with  -1

In column-vector (ket) language the same matrices read ``mu^T = (2R-I)(2C-I)``
acting on the transposed vectors; spectra are identical.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from . import _config
from .errors import DimensionMismatch, EigensolverFailure, InputError, NotOrthonormal, TooLarge

__all__ = [
    "OrthonormalSystem",
    "Discriminant",
    "LiftedEntry",
    "LiftedSpectrum",
    "gram_discriminant",
    "tilde",
    "tau",
    "reflection",
    "lift_spectrum",
    "lift_coefficients",
    "brute_force_mu",
    "tau_norm_check",
    "walk_systems",
    "random_systems",
    "match_unit_multisets",
    "mu_eigenvalue",
]


@dataclass(frozen=True, eq=False)
class OrthonormalSystem:
    """Orthonormal vectors stored as the rows of a ``(k, d)`` complex array."""

    vectors: np.ndarray
    name: str = "system"
    tol: float = field(default=_config.ORTHO_TOL, repr=False)

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex, copy=True)
        if v.ndim != 2:
            raise InputError(f"expected a (k, d) array of row vectors, got ndim={v.ndim}")
        if len(v):
            gram = v @ v.conj().T
            dev = np.abs(gram - np.eye(len(v)))
            i, j = np.unravel_index(np.argmax(dev), dev.shape)
            if dev[i, j] > self.tol:
                raise NotOrthonormal(self.name, int(i), int(j), complex(gram[i, j]))
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the span, for right action (``x @ P``)."""
        return self.vectors.conj().T @ self.vectors


@dataclass(frozen=True, eq=False)
class Discriminant:
    m: np.ndarray
    block_split: tuple[int, int]

    @property
    def n_left(self) -> int:
        return self.block_split[0]

    @property
    def n_right(self) -> int:
        return self.block_split[1]

    def spectral_norm(self) -> float:
        if self.m.size == 0:
            return 0.0
        return float(np.linalg.norm(self.m, 2))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.m) if self.m.size else np.zeros(0)

    def row_eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenpairs for the row action ``x M = lam x``; vectors are columns.

        Every column gets its largest-magnitude component rotated to be real
        positive so repeated runs give identical output.
        """
        try:
            lam, x = np.linalg.eigh(self.m.T)
        except np.linalg.LinAlgError as exc:
            raise EigensolverFailure(str(exc)) from exc
        for k in range(x.shape[1]):
            col = x[:, k]
            t = int(np.argmax(np.abs(col).round(12)))
            if abs(col[t]) > 0:
                x[:, k] = col * (abs(col[t]) / col[t])
        return lam, x


def gram_discriminant(a_sys: OrthonormalSystem, b_sys: OrthonormalSystem) -> Discriminant:
    """``M = Gram(v_1..v_n, w_1..w_m) - I`` with exactly zero diagonal blocks."""
    if a_sys.ambient_dim != b_sys.ambient_dim:
        raise DimensionMismatch(a_sys.ambient_dim, b_sys.ambient_dim)
    n, m = len(a_sys), len(b_sys)
    cross = a_sys.vectors @ b_sys.vectors.conj().T
    mat = np.zeros((n + m, n + m), dtype=complex)
    mat[:n, n:] = cross
    mat[n:, :n] = cross.conj().T
    return Discriminant(mat, (n, m))


def tilde(a, b, a_sys: OrthonormalSystem, b_sys: OrthonormalSystem) -> np.ndarray:
    """Linear map ``(a, b) -> sum a_i v_i + sum b_j w_j``."""
    a = np.zeros(len(a_sys)) if a is None else np.asarray(a)
    b = np.zeros(len(b_sys)) if b is None else np.asarray(b)
    if a.shape[-1] != len(a_sys):
        raise DimensionMismatch(len(a_sys), a.shape[-1])
    if b.shape[-1] != len(b_sys):
        raise DimensionMismatch(len(b_sys), b.shape[-1])
    return a @ a_sys.vectors + b @ b_sys.vectors


def tau(a, b, lam: float, a_sys, b_sys, sign: int = +1) -> np.ndarray:
    """``a~ - lam b~ + sign * i sqrt(1 - lam^2) b~``."""
    at = tilde(a, None, a_sys, b_sys)
    bt = tilde(None, b, a_sys, b_sys)
    s = np.sqrt(max(0.0, 1.0 - lam * lam))
    return at + (-lam + sign * 1j * s) * bt


def mu_eigenvalue(lam: float, sign: int = +1) -> complex:
    """Eigenvalue of ``mu`` attached to ``tau(..., sign)``."""
    s = np.sqrt(max(0.0, 1.0 - lam * lam))
    return complex(2 * lam * lam - 1, -sign * 2 * lam * s)


def reflection(sys: OrthonormalSystem) -> np.ndarray:
    """``2 C - I``: fixes span(sys), negates its orthogonal complement."""
    return 2 * sys.projector() - np.eye(sys.ambient_dim)


@dataclass(frozen=True, eq=False)
class LiftedEntry:
    """One eigenvector of M and the mu-eigenpairs built from it.

    ``kind`` is ``"pair"`` for 0 < lam < 1, ``"one"`` for lam = 1 and
    ``"zero_a"`` / ``"zero_b"`` for the two halves of the lam = 0 eigenspace.
    Row ``t`` of ``coefficients`` is the pair ``(a', b')`` whose tilde image is
    the ``t``-th mu-eigenvector; ``norms`` holds the norms of those images.
    ``mu_eigenvectors`` is ``None`` when the spectrum was lifted without the
    ambient systems.
    """

    lambda_m: float
    eigvec_m: np.ndarray
    mu_eigenvalues: tuple[complex, ...]
    coefficients: np.ndarray
    norms: tuple[float, ...]
    kind: str
    mu_eigenvectors: np.ndarray | None = None

    @property
    def thetas(self) -> tuple[float, ...]:
        return tuple(float(np.angle(z)) for z in self.mu_eigenvalues)


@dataclass(frozen=True, eq=False)
class LiftedSpectrum:
    entries: tuple[LiftedEntry, ...]
    ambient_dim: int
    busy_dim: int
    idle_dim: int
    block_split: tuple[int, int] = (0, 0)

    def _require_vectors(self):
        if any(e.mu_eigenvectors is None for e in self.entries):
            raise InputError("spectrum was lifted without ambient vectors")

    def pairs(self):
        """Yield ``(eigenvalue, vector, entry)`` for every lifted eigenvector."""
        self._require_vectors()
        for e in self.entries:
            for val, vec in zip(e.mu_eigenvalues, e.mu_eigenvectors):
                yield val, vec, e

    def eigenvalues(self, include_idle: bool = True) -> np.ndarray:
        vals = [val for e in self.entries for val in e.mu_eigenvalues]
        if include_idle:
            vals.extend([1.0 + 0j] * self.idle_dim)
        return np.array(vals, dtype=complex)

    def unit_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and coefficient rows scaled so their tilde images are unit."""
        n, m = self.block_split
        vals, rows = [], []
        for e in self.entries:
            for val, coef, nrm in zip(e.mu_eigenvalues, e.coefficients, e.norms):
                vals.append(val)
                rows.append(coef / nrm)
        if not rows:
            return np.zeros(0, dtype=complex), np.zeros((0, n + m), dtype=complex)
        return np.array(vals, dtype=complex), np.array(rows, dtype=complex)

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit eigenvectors (rows) spanning the busy subspace, with eigenvalues."""
        vals, vecs = [], []
        for val, vec, _ in self.pairs():
            vals.append(val)
            vecs.append(vec / np.linalg.norm(vec))
        if not vecs:
            return np.zeros(0, dtype=complex), np.zeros((0, self.ambient_dim), dtype=complex)
        return np.array(vals), np.array(vecs)

    def max_residual(self, mu: np.ndarray) -> float:
        """Largest ``|x mu - theta x| / |x|`` over the lifted vectors."""
        worst = 0.0
        for val, vec, _ in self.pairs():
            r = np.linalg.norm(vec @ mu - val * vec) / np.linalg.norm(vec)
            worst = max(worst, float(r))
        return worst

    def table(self) -> list[dict]:
        rows = []
        for e in self.entries:
            for val, nrm in zip(e.mu_eigenvalues, e.norms):
                rows.append(
                    {
                        "lambda": float(e.lambda_m),
                        "re_mu": float(val.real),
                        "im_mu": float(val.imag),
                        "theta": float(np.angle(val)),
                        "norm": float(nrm),
                        "kind": e.kind,
                    }
                )
        return rows

    def to_json(self) -> dict:
        return {
            "ambient_dim": self.ambient_dim,
            "busy_dim": self.busy_dim,
            "idle_dim": self.idle_dim,
            "entries": [
                {
                    "lambda": r["lambda"],
                    "theta": r["theta"],
                    "mu_eig": [r["re_mu"], r["im_mu"]],
                    "norm": r["norm"],
                    "kind": r["kind"],
                }
                for r in self.table()
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "re_mu", "im_mu", "theta", "norm", "kind"])
        for r in self.table():
            nums = [f"{r[k]:.17g}" for k in ("lambda", "re_mu", "im_mu", "theta", "norm")]
            w.writerow(nums + [r["kind"]])
        return buf.getvalue()


def _clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Split sorted ``values`` into runs whose neighbours differ by at most ``tol``."""
    if len(values) == 0:
        return []
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    return np.split(np.arange(len(values)), breaks)


def _range_basis(parts: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the column space of ``parts``.

    Used on the halves of an orthonormal basis of ker M, whose Gram matrices
    are projectors: singular values are 0 or 1, so the 0.5 cut is safe.
    """
    if parts.size == 0:
        return parts[:, :0]
    u, s, _ = np.linalg.svd(parts, full_matrices=False)
    return u[:, s > 0.5]


def _image_norms(coef: np.ndarray, cross: np.ndarray, n: int) -> tuple[float, ...]:
    """Norms of ``tilde(a, b)`` from the cross Gram block, row by row."""
    a, b = coef[:, :n], coef[:, n:]
    sq = (
        np.sum(np.abs(a) ** 2, axis=1)
        + np.sum(np.abs(b) ** 2, axis=1)
        + 2 * np.real(np.sum((a @ cross) * b.conj(), axis=1))
    )
    return tuple(float(np.sqrt(max(s, 0.0))) for s in sq)


def lift_coefficients(
    disc: Discriminant, ambient_dim: int, tol: float = _config.CLUSTER_TOL
) -> LiftedSpectrum:
    """Lift the spectrum of M to mu using coefficient pairs only.

    Needs nothing but M, so it scales to walks whose ambient space is far
    too large to hold the eigenvectors explicitly.
    """
    n, m = disc.block_split
    cross = disc.m[:n, n:]
    entries: list[LiftedEntry] = []

    def add(lam, vec, vals, coef, kind):
        coef = np.atleast_2d(np.asarray(coef, dtype=complex))
        entries.append(LiftedEntry(lam, vec, vals, coef, _image_norms(coef, cross, n), kind))

    if n + m:
        lam, x = disc.row_eigh()
        zero = np.flatnonzero(np.abs(lam) <= tol)
        ones = np.flatnonzero(lam >= 1.0 - tol)
        mid = np.flatnonzero((lam > tol) & (lam < 1.0 - tol))
        zeros_m = np.zeros(m, dtype=complex)
        zeros_n = np.zeros(n, dtype=complex)

        for k in ones:
            vec = x[:, k]
            add(1.0, vec, (1.0 + 0j,), np.concatenate([vec[:n], zeros_m]), "one")

        for group in _clusters(lam[mid], tol):
            idx = mid[group]
            lam_g = float(np.mean(lam[idx]))
            s = np.sqrt(1.0 - lam_g * lam_g)
            for k in idx:
                vec = x[:, k]
                a, b = vec[:n], vec[n:]
                coef = [np.concatenate([a, (-lam_g + sg * 1j * s) * b]) for sg in (+1, -1)]
                add(lam_g, vec, (mu_eigenvalue(lam_g, +1), mu_eigenvalue(lam_g, -1)), coef, "pair")

        if len(zero):
            xz = x[:, zero]
            for col in _range_basis(xz[:n]).T:
                vec = np.concatenate([col, zeros_m])
                add(0.0, vec, (-1.0 + 0j,), vec, "zero_a")
            for col in _range_basis(xz[n:]).T:
                vec = np.concatenate([zeros_n, col])
                add(0.0, vec, (-1.0 + 0j,), vec, "zero_b")

    busy = sum(len(e.mu_eigenvalues) for e in entries)
    return LiftedSpectrum(tuple(entries), ambient_dim, busy, ambient_dim - busy, (n, m))


def lift_spectrum(
    disc: Discriminant,
    a_sys: OrthonormalSystem,
    b_sys: OrthonormalSystem,
    tol: float = _config.CLUSTER_TOL,
) -> LiftedSpectrum:
    """Eigenpairs of ``mu`` on the busy subspace, built from those of M."""
    n, m = disc.block_split
    if (n, m) != (len(a_sys), len(b_sys)):
        raise DimensionMismatch((len(a_sys), len(b_sys)), (n, m))
    spec = lift_coefficients(disc, a_sys.ambient_dim, tol)
    entries = tuple(
        replace(e, mu_eigenvectors=tilde(e.coefficients[:, :n], e.coefficients[:, n:], a_sys, b_sys))
        for e in spec.entries
    )
    return replace(spec, entries=entries)


def brute_force_mu(
    a_sys: OrthonormalSystem, b_sys: OrthonormalSystem, cap: int | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense ``mu = ref_A @ ref_B`` and its full eigendecomposition.

    Returns ``(mu, eigenvalues, eigenvectors)`` with eigenvectors as unit rows
    satisfying ``z @ mu = theta z``. Uses the complex Schur form, which is
    diagonal for a normal matrix, so the eigenvectors come out orthonormal
    even inside degenerate eigenspaces.
    """
    cap = _config.size_cap() if cap is None else cap
    d = a_sys.ambient_dim
    if d > cap:
        raise TooLarge(d, cap)
    if b_sys.ambient_dim != d:
        raise DimensionMismatch(d, b_sys.ambient_dim)
    mu = reflection(a_sys) @ reflection(b_sys)
    try:
        t, z = scipy.linalg.schur(mu.T, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverFailure(str(exc)) from exc
    return mu, np.diag(t).copy(), z.T.copy()


def tau_norm_check(lam: float, pair, lifted: np.ndarray) -> float:
    """Return ``|lifted|``.

    ``pair`` must be a unit eigenvector of M with eigenvalue ``lam`` in [0, 1);
    the lifted vector's norm is then sqrt(1 - lam^2).
    """
    if not 0.0 <= lam < 1.0:
        raise InputError(f"lam must lie in [0, 1), got {lam}")
    if abs(np.linalg.norm(pair) - 1.0) > 1e-10:
        raise InputError("pair must be a unit vector")
    return float(np.linalg.norm(lifted))


def walk_systems(c, r) -> tuple[OrthonormalSystem, OrthonormalSystem]:
    """Row-amplitude systems of the bipartite walk ``(c, r)``.

    ``v_i`` has amplitude ``sqrt(c[i, j])`` at index ``i*m + j``; ``w_j`` has
    amplitude ``sqrt(r[j, i])`` at the same index.
    """
    c = np.asarray(c, dtype=float)
    r = np.asarray(r, dtype=float)
    n, m = c.shape
    if r.shape != (m, n):
        raise DimensionMismatch((m, n), r.shape)
    v = np.zeros((n, n * m))
    w = np.zeros((m, n * m))
    sc, sr = np.sqrt(c), np.sqrt(r)
    for i in range(n):
        v[i, i * m : (i + 1) * m] = sc[i]
    for j in range(m):
        w[j, j::m] = sr[j]
    return OrthonormalSystem(v, "left"), OrthonormalSystem(w, "right")


def random_systems(
    rng: np.random.Generator,
    ambient_dim: int,
    n: int,
    m: int,
    shared: int = 0,
    orthogonal: int = 0,
    complex_: bool = True,
) -> tuple[OrthonormalSystem, OrthonormalSystem]:
    """Random orthonormal systems with optional forced structure.

    ``shared`` directions lie in both spans (eigenvalue 1 of M) and
    ``orthogonal`` vectors of the first system are orthogonal to the whole
    second span (they contribute to eigenvalue 0 of M). Everything else is
    drawn generically from a Haar-random frame. The spans meet in exactly
    ``shared`` dimensions, which needs ``n + m - shared <= ambient_dim``.
    """
    d = ambient_dim
    k_a = n - shared - orthogonal
    if shared > min(n, m) or k_a < 0 or m + orthogonal > d or n + m - shared > d:
        raise InputError(
            f"incompatible dimensions: d={d}, n={n}, m={m}, shared={shared}, orthogonal={orthogonal}"
        )

    def gaussian(*shape):
        z = rng.normal(size=shape)
        return z + 1j * rng.normal(size=shape) if complex_ else z

    q, r = np.linalg.qr(gaussian(d, d))
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    # column blocks of q: [common | rest of B | A-only | outside]
    common = q[:, :shared]
    b_rest = q[:, shared:m]
    only_a = q[:, m : m + orthogonal]
    outside = q[:, m + orthogonal :]
    pool = np.hstack([b_rest, outside])
    generic = pool @ gaussian(pool.shape[1], k_a)
    a_cols, _ = np.linalg.qr(np.hstack([common, only_a, generic]))
    b_cols = np.hstack([common, b_rest])
    # mix B's basis so the common directions are not its first vectors
    mix, _ = np.linalg.qr(gaussian(m, m))
    b_cols = b_cols @ mix
    return OrthonormalSystem(a_cols.T, "A"), OrthonormalSystem(b_cols.T, "B")


def match_unit_multisets(x, y) -> float:
    """Max distance of the optimal one-to-one matching between two multisets
    of complex numbers (Hungarian assignment on |x_i - y_j|)."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape:
        raise DimensionMismatch(x.shape, y.shape)
    if x.size == 0:
        return 0.0
    cost = np.abs(x[:, None] - y[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())
