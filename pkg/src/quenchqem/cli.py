"""Command-line runner.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import SWEEP_LABELS, ConfigError, ExperimentConfig, load_config
from .entropy import estimate_renyi2, exact_renyi2
from .fixtures import (
    FixtureError,
    compare_fixture,
    load_mae_table,
    load_magnetization_tables,
    load_reference,
    load_results_series,
    table_cells,
)
from .mitigation import MitigationConfig, run_repetitions
from .observables import ResultRow, results_csv
from .rng import derive_seed
from .trotter import DENSE_ORACLE_MAX_QUBITS, build_trotter_circuit, neel_state, trotter_states

log = logging.getLogger("quenchqem")

WORKERS_ENV = "QUENCHQEM_WORKERS"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


class Writer:
    """Collects output files and writes the manifest at the end."""

    def __init__(self, out: Path, config: ExperimentConfig, command: str):
        self.out = out
        self.config = config
        self.command = command
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        _atomic_write(path, text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "config_hash": self.config.hash(),
            "config": self.config.canonical(),
            "seed": self.config.seed,
            "version": __version__,
            "files": dict(sorted(self.files.items())),
        }
        _atomic_write(self.out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        stamp = {"written_at": _dt.datetime.now(_dt.timezone.utc).isoformat()}
        _atomic_write(self.out / "manifest_times.json", json.dumps(stamp) + "\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _aggregate(reps, reference: Sequence[float]) -> list[ResultRow]:
    """Mean over repetitions; with several repetitions the error column is their spread."""
    rows = []
    for k, first in enumerate(reps[0]):
        raw = np.array([r[k].raw for r in reps])
        mit = np.array([r[k].mitigated for r in reps])
        err = float(np.std(mit, ddof=1)) if len(reps) > 1 else first.std_error
        rows.append(ResultRow(first.step, first.time, float(raw.mean()), float(mit.mean()),
                              err, reference[first.step - 1]))
    return rows


def _magnetization(config: ExperimentConfig, mitigation: MitigationConfig, writer: Writer,
                   prefix: str, workers: int) -> list[ResultRow]:
    reps = run_repetitions(
        config.params, config.noise, mitigation, config.shots, config.seed,
        config.repetitions, config.trajectories, config.order, workers,
    )
    reference = [e.method_breakdown["reference"] for e in reps[0]]
    header = f"config {config.hash()}"
    rows = _aggregate(reps, reference)
    writer.write(f"{prefix}.csv", results_csv(rows, header))
    report = []
    for r, rep in enumerate(reps):
        rep_rows = [ResultRow(e.step, e.time, e.raw, e.mitigated, e.std_error, reference[e.step - 1])
                    for e in rep]
        writer.write(f"repetitions/{prefix}_rep{r:02d}.csv", results_csv(rep_rows, header))
        for e in rep:
            b = e.method_breakdown
            report.append({
                "repetition": r, "step": e.step, "time": e.time, "raw": e.raw,
                "mitigated": e.mitigated, "std_error": e.std_error, "p": b.get("p"),
                "zne_points": b.get("zne_points"), "circuits_executed": e.circuits_executed,
                "methods": mitigation.label, "pt_shots": b.get("pt_shots"), "flags": e.flags,
            })
    writer.write(f"{prefix}_report.jsonl",
                 "".join(json.dumps(x, sort_keys=True, default=_json_default) + "\n" for x in report))
    return rows


def _entropy(config: ExperimentConfig, writer: Writer) -> list[dict]:
    p = config.params
    ec = config.entropy
    sub = list(ec.subsystem) if ec.subsystem else list(range(p.n_qubits // 2))
    steps = list(ec.steps) if ec.steps else list(range(1, p.n_steps + 1))
    if any(not 1 <= m <= p.n_steps for m in steps):
        raise ConfigError("entropy steps must lie in 1..model.steps")
    if ec.exact_oracle and p.n_qubits > DENSE_ORACLE_MAX_QUBITS:
        raise RuntimeError(
            f"exact oracle requested for {p.n_qubits} qubits (limit {DENSE_ORACLE_MAX_QUBITS})"
        )
    nm = config.noise
    noiseless = not (nm.is_stochastic or nm.eps2 or nm.idle_z or nm.has_readout)
    states = list(trotter_states(p, config.order)) if noiseless or ec.exact_oracle else []
    records = []
    for m in steps:
        seed = derive_seed(config.seed, m)
        if noiseless:
            est = estimate_renyi2(states[m - 1], sub, ec.instances, config.shots, seed,
                                  unbiased=ec.unbiased, packed=ec.packed)
        else:
            est = estimate_renyi2(build_trotter_circuit(p, config.order, m), sub, ec.instances,
                                  config.shots, seed, config.noise, config.mitigation,
                                  initial=neel_state(p.n_qubits), n_trajectories=config.trajectories,
                                  unbiased=ec.unbiased)
        records.append({
            "step": m,
            "time": m * p.dt,
            "S2_estimate": est.renyi2,
            "S2_std_error": est.std_error,
            "S2_exact": exact_renyi2(states[m - 1], sub) if ec.exact_oracle else None,
            "N_U": ec.instances,
            "shots": config.shots,
            "flags": est.flags,
        })
    header = f"# config {config.hash()}\nstep,time,S2_estimate,S2_std_error,S2_exact,N_U,shots\n"
    body = "".join(
        f"{r['step']},{r['time']!r},{r['S2_estimate']!r},{r['S2_std_error']!r},"
        f"{'' if r['S2_exact'] is None else repr(r['S2_exact'])},{r['N_U']},{r['shots']}\n"
        for r in records
    )
    writer.write("entropy.csv", header + body)
    writer.write("entropy.jsonl",
                 "".join(json.dumps(r, sort_keys=True, default=_json_default) + "\n" for r in records))
    return records


def _print_rows(rows: Sequence[ResultRow]) -> None:
    for r in rows:
        print(f"step {r.step:2d}  t={r.time:5.2f}  mitigated={r.mitigated:+.5f}  "
              f"ref={r.reference:+.5f}  |err|={r.abs_error:.5f}")
    mae = float(np.mean([r.abs_error for r in rows]))
    print(f"MAE {mae:.5f}")


def _workers(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return 1


def _load(args) -> tuple[ExperimentConfig, Path]:
    if not args.config:
        raise UsageError("--config is required for this command")
    config = load_config(args.config).with_seed(args.seed)
    out = Path(args.out) if args.out else Path(config.output_dir)
    return config, out


def cmd_simulate(args) -> int:
    config, out = _load(args)
    writer = Writer(out, config, "simulate")
    rows = _magnetization(config, MitigationConfig(), writer, "results", _workers(args.workers))
    writer.finish()
    _print_rows(rows)
    return EXIT_OK


def cmd_mitigate(args) -> int:
    config, out = _load(args)
    writer = Writer(out, config, "mitigate")
    rows = _magnetization(config, config.mitigation, writer, "results", _workers(args.workers))
    writer.finish()
    _print_rows(rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config, out = _load(args)
    writer = Writer(out, config, "sweep")
    workers = _workers(args.workers)
    for label in SWEEP_LABELS:
        base = MitigationConfig.from_label(label)
        mit = replace(base, trex=replace(config.mitigation.trex, enabled=base.trex.enabled),
                      pt=replace(config.mitigation.pt, enabled=base.pt.enabled),
                      dd=replace(config.mitigation.dd, enabled=base.dd.enabled))
        rows = _magnetization(config, mit, writer, f"results_{label.replace('+', '_')}", workers)
        print(f"{label:<12s} MAE {np.mean([r.abs_error for r in rows]):.5f}")
    writer.finish()
    return EXIT_OK


def cmd_entropy(args) -> int:
    config, out = _load(args)
    writer = Writer(out, config, "entropy")
    for r in _entropy(config, writer):
        exact = "" if r["S2_exact"] is None else f"  exact={r['S2_exact']:.5f}"
        print(f"step {r['step']:2d}  S2={r['S2_estimate']:.5f} +- {r['S2_std_error']:.5f}{exact}")
    writer.finish()
    return EXIT_OK


def cmd_compare(args) -> int:
    reference = load_reference()[args.reference]
    if args.results:
        series = load_results_series(args.results)
        print(compare_fixture(series, reference).detail())
        return EXIT_OK
    if args.series:
        print(compare_fixture(load_magnetization_tables()[args.series], reference).detail())
        return EXIT_OK
    published = load_mae_table()
    cells = table_cells(reference)
    print(f"{'cell':<30s} {'derived':>9s} {'published':>9s}")
    for (method, column), rep in cells.items():
        print(f"{method + ' ' + column:<30s} {rep.mae:9.5f} {published[method][column]:9.5f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quenchqem", description="XXZ quench simulation and error mitigation.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="INI experiment file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="output directory (default: [output] dir)")
        p.add_argument("--workers", type=int, help=f"worker processes (default: ${WORKERS_ENV} or 1)")

    for name, fn, text in (
        ("simulate", cmd_simulate, "noisy run without mitigation"),
        ("mitigate", cmd_mitigate, "run with the configured mitigation"),
        ("sweep", cmd_sweep, "run every mitigation combination of the sweep"),
        ("entropy", cmd_entropy, "randomized-measurement Renyi-2 entropy"),
    ):
        p = sub.add_parser(name, help=text)
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("compare", help="mean absolute error against the N=20 reference series")
    common(p)
    p.add_argument("--results", help="results CSV to compare")
    p.add_argument("--series", help="bundled hardware series name, e.g. OBC_N20_NOQEM")
    p.add_argument("--reference", choices=("OBC", "PBC"), default="PBC")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, FixtureError) as exc:
        print(f"quenchqem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"quenchqem: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
