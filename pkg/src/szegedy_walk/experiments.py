"""Reproducible studies: the two-state Grover chain, hitting-time scaling, and
collision search on the Johnson graph.

Every study returns a report object with ``to_json()`` and ``csv_rows()`` and
can be written to ``<out>/<experiment>-seed<seed>/`` by :func:`write_report`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _io
from .errors import InputError, NoHitWithinCap
from .findmarked import (
    CostLedger,
    FindMarkedAnalysis,
    average_output_one,
    classical_failure_curve,
    decision_procedure,
)
from .markov import (
    MarkedSet,
    eigenvalue_gap,
    grover_chain,
    johnson_chain,
    johnson_eigenvalues,
    johnson_subsets,
    lazy_cycle_chain,
    uniform_chain,
)
from .spectral import match_unit_multisets, mu_eigenvalue, tau, walk_systems
from .walk import BipartiteWalk, QuantumState, WalkSpectrum, apply_power, stationary_state, walk_unitary

__all__ = [
    "GroverReport",
    "ScalingReport",
    "JohnsonReport",
    "grover_regression",
    "hitting_scaling",
    "quantum_hit",
    "classical_hit",
    "johnson_demo",
    "write_report",
    "DEFAULT_EPSILONS",
]

DEFAULT_EPSILONS = tuple(2.0**-t for t in range(2, 8))
DEFAULT_THRESHOLD = 9 / 16


# Grover chain --------------------------------------------------------------


@dataclass
class GroverReport:
    tol: float
    rows: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"tol": self.tol, "passed": self.passed, "failures": self.failures, "rows": self.rows}

    def csv_rows(self) -> list[dict]:
        return self.rows


def _grover_point(p: float) -> dict:
    lam = 1.0 - p
    walk = BipartiteWalk.from_chain(grover_chain(p))
    spec = WalkSpectrum(walk)
    op = walk_unitary(walk)
    a_sys, b_sys = walk_systems(walk.c.entries, walk.r.entries)
    e1 = np.array([1.0, 0.0])

    root = math.sqrt(2 * p - p * p)
    expected = np.array(
        [complex(1 - 4 * p + 2 * p * p, s * 2 * (1 - p) * root) for s in (+1, -1)] + [1.0]
    )
    busy = spec.lifted.eigenvalues(include_idle=False)
    d_eigs = np.sort(np.linalg.eigvalsh(walk.half_discriminant()))

    v = [tau(e1, e1, lam, a_sys, b_sys, sg) for sg in (+1, -1)]
    thetas = [mu_eigenvalue(lam, sg) for sg in (+1, -1)]
    residual = max(float(np.linalg.norm(x @ op.mu - t * x)) for x, t in zip(v, thetas))
    norms_sq = [float(np.vdot(x, x).real) for x in v]

    u = stationary_state([[1 - p, p], [1 - p, p]], pi=[1 - p, p])
    u_prime = b_sys.vectors[0]
    overlap = float(np.vdot(u_prime, u.amplitudes).real)
    combo = (-1j / (math.sqrt(2) * math.sqrt(norms_sq[0]))) * v[0] + (
        1j / (math.sqrt(2) * math.sqrt(norms_sq[1]))
    ) * v[1]

    k = 7
    evolved = apply_power(op, QuantumState((2, 2), u_prime), k).amplitudes
    formula = (-1j * thetas[0] ** k / (math.sqrt(2) * math.sqrt(norms_sq[0]))) * v[0] + (
        1j * thetas[1] ** k / (math.sqrt(2) * math.sqrt(norms_sq[1]))
    ) * v[1]

    theta = abs(float(np.angle(thetas[0])))
    return {
        "p": p,
        "d_eig_error": float(np.max(np.abs(d_eigs - np.array([lam, 1.0])))),
        "nu_eig_error": match_unit_multisets(busy, expected),
        "eigvec_residual": residual,
        "v_norm_sq": norms_sq[0],
        "v_norm_sq_error": max(abs(x - (4 * p - 2 * p * p)) for x in norms_sq),
        "overlap": overlap,
        "overlap_error": abs(overlap - math.sqrt(1 - p)),
        "u_prime_split_error": float(np.max(np.abs(combo - u_prime))),
        "power_error": float(np.max(np.abs(evolved - formula))),
        "theta": theta,
        "theta_over_sqrt_p": theta / math.sqrt(p),
    }


_GROVER_CHECKS = (
    "d_eig_error",
    "nu_eig_error",
    "eigvec_residual",
    "v_norm_sq_error",
    "overlap_error",
    "u_prime_split_error",
    "power_error",
)


def grover_regression(p_values: Sequence[float], tol: float = 1e-12) -> GroverReport:
    """Compare the quantized two-state absorbing chain with its closed forms."""
    report = GroverReport(tol)
    for p in p_values:
        p = float(p)
        if not 0.0 < p < 1.0:
            raise InputError(f"p must lie in (0, 1), got {p}")
        row = _grover_point(p)
        report.rows.append(row)
        for key in _GROVER_CHECKS:
            if row[key] > tol:
                report.failures.append(f"p={p!r}: {key} = {row[key]:.3e} > {tol:.0e}")
        if p <= 0.3 and not 1.0 <= row["theta_over_sqrt_p"] <= 3.0:
            report.failures.append(f"p={p!r}: theta/sqrt(p) = {row['theta_over_sqrt_p']!r} outside [1, 3]")
    return report


# hitting-time scaling ------------------------------------------------------


def quantum_hit(fa: FindMarkedAnalysis, threshold: float = DEFAULT_THRESHOLD, k_cap: int = 10**7) -> int:
    """Smallest K >= 1 with ``|(u + u nu^K)/2|^2 <= threshold``."""
    chunk = 4096
    for start in range(1, k_cap + 1, chunk):
        ks = np.arange(start, min(start + chunk, k_cap + 1))
        hit = np.flatnonzero(fa.stay_norm_sq(ks) <= threshold)
        if hit.size:
            return int(ks[hit[0]])
    raise NoHitWithinCap(k_cap)


def classical_hit(p, g, threshold: float = DEFAULT_THRESHOLD, k_cap: int = 10**7) -> int:
    """Smallest K >= 1 whose exact classical failure probability is <= threshold."""
    k_max = 64
    while True:
        curve = classical_failure_curve(p, g, min(k_max, k_cap))
        hit = np.flatnonzero(curve[1:] <= threshold)
        if hit.size:
            return int(hit[0] + 1)
        if k_max >= k_cap:
            raise NoHitWithinCap(k_cap)
        k_max *= 4


@dataclass
class ScalingReport:
    """Hitting times against ``1/(delta*eps)`` with log-log least-squares fits."""

    chain_family: str
    threshold: float
    points: list[dict]
    fitted_exponents: dict[str, float]
    residuals: dict[str, float]

    def to_json(self) -> dict:
        return {
            "chain_family": self.chain_family,
            "threshold": self.threshold,
            "points": self.points,
            "fitted_exponents": self.fitted_exponents,
            "residuals": self.residuals,
        }

    def csv_rows(self) -> list[dict]:
        return self.points


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Slope of ``log y`` on ``log x`` and the RMS residual of the fit."""
    lx, ly = np.log(x), np.log(y)
    coef, res, *_ = np.polyfit(lx, ly, 1, full=True)
    rms = float(np.sqrt(res[0] / len(lx))) if len(res) else 0.0
    return float(coef[0]), rms


def _family_instances(chain_family: str, epsilons, lazinesses, cycle_n: int):
    if chain_family == "uniform":
        for eps in epsilons:
            n = int(round(1 / eps))
            if n < 1 or abs(n * eps - 1) > 1e-12:
                raise InputError(f"uniform family needs eps = 1/n, got {eps}")
            yield uniform_chain(n), MarkedSet(n, (0,)), {"laziness": None}
    elif chain_family == "cycle":
        marks = tuple(range(0, cycle_n, 4))
        for lazy in lazinesses:
            p = lazy_cycle_chain(cycle_n, laziness=lazy, chords=2)
            yield p, MarkedSet(cycle_n, marks), {"laziness": lazy}
    else:
        raise InputError(f"unknown chain family {chain_family!r}")


def hitting_scaling(
    chain_family: str = "uniform",
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    threshold: float = DEFAULT_THRESHOLD,
    k_cap: int = 10**7,
    lazinesses: Sequence[float] = (0.5, 0.75, 0.875, 0.9375, 0.96875),
    cycle_n: int = 16,
) -> ScalingReport:
    """Quantum and classical hitting times over a chain family.

    ``uniform`` takes ``P = J/n`` with one marked state (delta = 1, eps = 1/n);
    ``cycle`` fixes a 16-cycle with chords and a quarter of the states marked,
    and varies the laziness to move delta. Exponents are fitted against
    ``1/(delta*eps)``.
    """
    points = []
    for p, g, extra in _family_instances(chain_family, epsilons, lazinesses, cycle_n):
        delta = eigenvalue_gap(p).gap
        fa = FindMarkedAnalysis(p, g)
        points.append(
            {
                "n": p.rows,
                "epsilon": g.epsilon,
                "delta": delta,
                **extra,
                "k_hit_quantum": quantum_hit(fa, threshold, k_cap),
                "k_hit_classical": classical_hit(p, g, threshold, k_cap),
            }
        )
    x = np.array([1.0 / (pt["delta"] * pt["epsilon"]) for pt in points])
    fits = {
        name: _fit(x, np.array([pt[f"k_hit_{name}"] for pt in points], dtype=float))
        for name in ("quantum", "classical")
    }
    return ScalingReport(
        chain_family,
        threshold,
        points,
        {k: v[0] for k, v in fits.items()},
        {k: v[1] for k, v in fits.items()},
    )


# Johnson chain -------------------------------------------------------------


@dataclass
class JohnsonReport:
    universe: int
    subset_size: int
    states: int
    delta: float
    delta_closed_form: float
    spectrum_error: float
    epsilon: float
    marked: list[int]
    average_output_one: float
    decision: dict

    def to_json(self) -> dict:
        return dict(self.__dict__)

    def csv_rows(self) -> list[dict]:
        return [
            {
                "universe": self.universe,
                "subset_size": self.subset_size,
                "states": self.states,
                "delta": self.delta,
                "delta_closed_form": self.delta_closed_form,
                "epsilon": self.epsilon,
                "marked": len(self.marked),
                "average_output_one": self.average_output_one,
                "verdict": self.decision["verdict"],
                "rounds_run": self.decision["rounds_run"],
            }
        ]


def johnson_demo(
    universe: int,
    subset_size: int,
    collision_pair: tuple[int, int] | None = None,
    f: Callable[[int], object] | None = None,
    rule_constant: float = 1000.0,
    rounds: int = 3000,
    seed: int = 0,
) -> JohnsonReport:
    """Collision detection on k-subsets of an N-set.

    A subset is marked when ``f`` takes equal values on two of its members.
    ``f`` defaults to the identity, with ``collision_pair = (a, b)`` forcing
    ``f(b) = f(a)``. The values ``f(H)`` are bookkeeping only: querying a new
    element costs 2 per diffusion and testing a subset costs nothing.
    """
    N, k = universe, subset_size
    if f is None:
        mapping = list(range(N))
        if collision_pair is not None:
            a, b = collision_pair
            if a == b or not (0 <= a < N and 0 <= b < N):
                raise InputError(f"bad collision pair {collision_pair}")
            mapping[b] = mapping[a]
        f = mapping.__getitem__
    p = johnson_chain(N, k)
    subsets = johnson_subsets(N, k)
    marked = [t for t, h in enumerate(subsets) if len({f(x) for x in h}) < len(h)]
    g = MarkedSet(len(subsets), tuple(marked))
    analysis = eigenvalue_gap(p)
    closed = sorted(
        (lam for lam, mult in johnson_eigenvalues(N, k) for _ in range(mult)), reverse=True
    )
    spectrum_error = float(np.max(np.abs(np.array(closed) - analysis.eigenvalues)))
    # the promise: at least the observed fraction, or one subset's worth when nothing collides
    epsilon = g.epsilon if len(g) else 1.0 / len(subsets)
    ledger = CostLedger(p0_price=float(k), p1_price=2.0, p2_price=0.0)
    decision = decision_procedure(p, g, epsilon, rule_constant, seed=seed, rounds=rounds, ledger=ledger)
    avg = average_output_one(p, g, epsilon, rule_constant)
    return JohnsonReport(
        N,
        k,
        len(subsets),
        analysis.gap,
        N / (k * (N - k)),
        spectrum_error,
        g.epsilon,
        marked,
        avg,
        decision.to_json(),
    )


# output --------------------------------------------------------------------


def write_report(out: Path, experiment: str, seed: int, report, config: dict | None = None) -> Path:
    """Write ``config.json``, ``report.json`` and ``report.csv`` under a run directory."""
    run_dir = Path(out) / f"{experiment}-seed{seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    if config is not None:
        _io.write_json(run_dir / "config.json", config)
    _io.write_json(run_dir / "report.json", report.to_json())
    rows = report.csv_rows()
    if rows:
        with open(run_dir / "report.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _csv_cell(v) for k, v in r.items()})
    return run_dir


def _csv_cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return v
