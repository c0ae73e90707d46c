"""Command-line entry point.

Every run writes ``config.json`` (the fully resolved configuration) first,
then its report, into ``<out>/<command>-seed<seed>/``. Values come from
built-in defaults, then an optional JSON ``--config`` file, then flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import _io
from .errors import InputError, NumericalError, SizeCapError
from .experiments import (
    DEFAULT_EPSILONS,
    DEFAULT_THRESHOLD,
    grover_regression,
    hitting_scaling,
    johnson_demo,
)
from .findmarked import (
    FindMarkedAnalysis,
    classical_failure_curve,
    decision_procedure,
    run_record,
)
from .markov import (
    MarkedSet,
    chain_from_csv,
    chain_from_json,
    grover_chain,
    johnson_chain,
    lazy_cycle_chain,
    uniform_chain,
)
from .walk import BipartiteWalk, WalkSpectrum, apply_power, stationary_state, walk_unitary

COMMANDS = ("spectrum", "walk", "findmarked", "grover", "johnson", "scaling")
GENERATORS = ("uniform", "johnson", "grover", "cycle")

EXIT_OK, EXIT_CONFIG, EXIT_SIZE, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(InputError):
    pass


@dataclass
class RunConfig:
    command: str = "spectrum"
    generator: str = "uniform"
    chain: str | None = None
    n: int = 4
    k: int = 2
    p: list[float] = field(default_factory=lambda: [0.5])
    marked: list[int] = field(default_factory=list)
    epsilon: list[float] | None = None
    rule_constant: float = 1000.0
    k_max: int = 16
    rounds: int = 3000
    threshold: float = DEFAULT_THRESHOLD
    exact: bool = False
    seed: int = 0
    out: str = "runs"
    format: str = "json"

    def to_json(self) -> dict:
        return asdict(self)


_FIELDS = {f.name for f in fields(RunConfig)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with config values; flags override it")
    common.add_argument("--generator", choices=GENERATORS)
    common.add_argument("--chain", help="chain file (.csv rows or .json {n, rows})")
    common.add_argument("--n", type=int, help="states, or universe size for johnson")
    common.add_argument("--k", type=int, help="walk steps K, or subset size for johnson")
    common.add_argument("--p", type=float, nargs="+", help="Grover marking probabilities")
    common.add_argument("--marked", type=int, nargs="*", help="marked states (johnson: colliding pair)")
    common.add_argument("--epsilon", type=float, nargs="+", help="promise fraction(s)")
    common.add_argument("--rule-constant", dest="rule_constant", type=float)
    common.add_argument("--k-max", dest="k_max", type=int)
    common.add_argument("--rounds", type=int)
    common.add_argument("--threshold", type=float)
    common.add_argument("--exact", action="store_true")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"))

    parser = _Parser(prog="szegedy-walk", description="Quantized Markov chain walks and FindMarked simulations")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "spectrum": "lifted eigenvalue table of the quantized chain",
        "walk": "apply K steps of the walk to the stationary state",
        "findmarked": "exact output probabilities or the sampled decision procedure",
        "grover": "two-state Grover chain regression",
        "johnson": "collision detection on the Johnson graph",
        "scaling": "hitting-time scaling fits",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], argument_default=argparse.SUPPRESS)
    return parser


def resolve_config(argv: list[str] | None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    values: dict = {}
    path = ns.pop("config", None)
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - _FIELDS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update({k.replace("-", "_"): v for k, v in loaded.items()})
    values.update(ns)
    cfg = RunConfig(**values)
    if cfg.generator not in GENERATORS:
        raise ConfigError(f"unknown generator {cfg.generator!r}")
    if cfg.format not in ("json", "csv"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    if cfg.epsilon is not None and not isinstance(cfg.epsilon, list):
        cfg.epsilon = [cfg.epsilon]
    if not isinstance(cfg.p, list):
        cfg.p = [cfg.p]
    return cfg


def _chain(cfg: RunConfig):
    if cfg.chain:
        text = Path(cfg.chain).read_text()
        return chain_from_json(text) if cfg.chain.endswith(".json") else chain_from_csv(text)
    if cfg.generator == "uniform":
        return uniform_chain(cfg.n)
    if cfg.generator == "johnson":
        return johnson_chain(cfg.n, cfg.k)
    if cfg.generator == "grover":
        return grover_chain(cfg.p[0])
    return lazy_cycle_chain(cfg.n)


def _write_table(run_dir: Path, name: str, rows: list[dict], obj, fmt: str) -> None:
    if fmt == "csv" and rows:
        with open(run_dir / f"{name}.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: format(v, ".17g") if isinstance(v, float) else v for k, v in r.items()})
    else:
        _io.write_json(run_dir / f"{name}.json", obj)


def _cmd_spectrum(cfg: RunConfig, run_dir: Path) -> dict:
    walk = BipartiteWalk.from_chain(_chain(cfg))
    spec = WalkSpectrum(walk).lifted
    if cfg.format == "csv":
        (run_dir / "spectrum.csv").write_text(spec.to_csv())
    else:
        _io.write_json(run_dir / "spectrum.json", spec.to_json())
    return {"busy_dim": spec.busy_dim, "idle_dim": spec.idle_dim}


def _cmd_walk(cfg: RunConfig, run_dir: Path) -> dict:
    p = _chain(cfg)
    op = walk_unitary(BipartiteWalk.from_chain(p))
    u = stationary_state(p)
    out = apply_power(op, u, cfg.k)
    mu = op.mu
    report = {
        "k": cfg.k,
        "unitarity_error": float(np.max(np.abs(mu @ mu.conj().T - np.eye(op.dim)))),
        "stationarity_error": float(np.linalg.norm(out.amplitudes - u.amplitudes)),
        "state": out.to_json(),
    }
    _io.write_json(run_dir / "walk.json", report)
    return {"unitarity_error": report["unitarity_error"], "stationarity_error": report["stationarity_error"]}


def _cmd_findmarked(cfg: RunConfig, run_dir: Path) -> dict:
    p = _chain(cfg)
    g = MarkedSet(p.rows, tuple(cfg.marked))
    eps = cfg.epsilon[0] if cfg.epsilon else (g.epsilon if len(g) else 1.0 / p.rows)
    if cfg.exact:
        fa = FindMarkedAnalysis(p, g)
        ks = np.arange(1, cfg.k_max + 1)
        probs = fa.output_one(ks)
        classical = 1.0 - classical_failure_curve(p, g, cfg.k_max)[1:]
        rows = [
            {"K": int(k), "p_output1": float(q), "classical_p_output1": float(c)}
            for k, q, c in zip(ks, probs, classical)
        ]
        _write_table(run_dir, "findmarked", rows, {"epsilon": eps, "rows": rows}, cfg.format)
        chain_id = cfg.chain or f"{cfg.generator}-{p.rows}"
        records = [run_record(chain_id, p, g, eps, int(k), amp_k_max=int(k), analysis=fa) for k in ks]
        _io.write_jsonl(run_dir / "runs.jsonl", records)
        return {"max_p_output1": float(probs.max()) if probs.size else 0.0}
    decision = decision_procedure(p, g, eps, cfg.rule_constant, seed=cfg.seed, rounds=cfg.rounds)
    _io.write_json(run_dir / "decision.json", decision.to_json())
    return {"verdict": decision.verdict, "rounds_run": decision.rounds_run}


def _cmd_grover(cfg: RunConfig, run_dir: Path) -> dict:
    report = grover_regression(cfg.p)
    _write_table(run_dir, "grover", report.rows, report.to_json(), cfg.format)
    if not report.passed:
        raise NumericalError("; ".join(report.failures))
    return {"passed": True, "points": len(report.rows)}


def _cmd_johnson(cfg: RunConfig, run_dir: Path) -> dict:
    pair = None
    if cfg.marked:
        if len(cfg.marked) != 2:
            raise ConfigError("johnson takes --marked a b: the colliding pair")
        pair = (cfg.marked[0], cfg.marked[1])
    report = johnson_demo(cfg.n, cfg.k, pair, rule_constant=cfg.rule_constant, rounds=cfg.rounds, seed=cfg.seed)
    _write_table(run_dir, "johnson", report.csv_rows(), report.to_json(), cfg.format)
    return {"verdict": report.decision["verdict"], "epsilon": report.epsilon, "delta": report.delta}


def _cmd_scaling(cfg: RunConfig, run_dir: Path) -> dict:
    if cfg.generator not in ("uniform", "cycle"):
        raise ConfigError("scaling supports --generator uniform or cycle")
    eps = tuple(cfg.epsilon) if cfg.epsilon else DEFAULT_EPSILONS
    report = hitting_scaling(cfg.generator, eps, cfg.threshold)
    _write_table(run_dir, "scaling", report.points, report.to_json(), cfg.format)
    return {"fitted_exponents": report.fitted_exponents}


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "walk": _cmd_walk,
    "findmarked": _cmd_findmarked,
    "grover": _cmd_grover,
    "johnson": _cmd_johnson,
    "scaling": _cmd_scaling,
}


def run(cfg: RunConfig) -> dict:
    """Execute one resolved configuration; returns a short summary."""
    run_dir = Path(cfg.out) / f"{cfg.command}-seed{cfg.seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    _io.write_json(run_dir / "config.json", cfg.to_json())
    summary = _DISPATCH[cfg.command](cfg, run_dir)
    return {"command": cfg.command, "run_dir": str(run_dir), **summary}


def _fail(code: int, exc: Exception) -> int:
    sys.stderr.write(_io.dumps({"error": type(exc).__name__, "message": str(exc), "exit": code}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = resolve_config(argv)
        summary = run(cfg)
    except SizeCapError as exc:
        return _fail(EXIT_SIZE, exc)
    except NumericalError as exc:
        return _fail(EXIT_NUMERIC, exc)
    except (InputError, TypeError, OSError) as exc:
        return _fail(EXIT_CONFIG, exc)
    sys.stdout.write(_io.dumps(summary) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
