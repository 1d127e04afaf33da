"""Bundled hardware-result tables and the noiseless N=20 reference series."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .observables import ResultRow, mean_absolute_error, read_results_csv, staggered_magnetization_exact
from .trotter import Boundary, TrotterOrder, XXZParams, trotter_states

REFERENCE_FILE = "reference_n20.csv"
# Reference chain used for the bundled series; the anisotropy is not given
# alongside the hardware tables and 0.5 reproduces their error figures.
REFERENCE_PARAMS = dict(n_qubits=20, j1=1.0, delta=0.5, dt=0.5, n_steps=10)


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class Series:
    name: str
    steps: tuple[int, ...]
    values: tuple[float, ...]
    std_dev: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.steps) != len(self.values):
            raise FixtureError(f"{self.name}: steps and values differ in length")
        if self.std_dev is not None:
            if len(self.std_dev) != len(self.steps):
                raise FixtureError(f"{self.name}: std_dev length mismatch")
            if any(s < 0 for s in self.std_dev):
                raise FixtureError(f"{self.name}: negative std_dev")


@dataclass(frozen=True)
class FixtureTable:
    series: dict[str, Series]

    def __getitem__(self, name: str) -> Series:
        try:
            return self.series[name]
        except KeyError:
            raise FixtureError(f"no series {name!r}; have {sorted(self.series)}") from None

    def names(self) -> list[str]:
        return list(self.series)

    def validate_steps(self, steps: Sequence[int] = tuple(range(1, 11))) -> None:
        for s in self.series.values():
            if tuple(s.steps) != tuple(steps):
                raise FixtureError(f"{s.name}: expected steps {tuple(steps)}, got {s.steps}")


def _data_text(name: str) -> str:
    return resources.files("quenchqem").joinpath("data", name).read_text()


def _rows(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(l for l in text.splitlines() if l and not l.startswith("#")))


def parse_series_table(text: str) -> FixtureTable:
    """Long-format ``series,step,value,std_dev`` text into a table."""
    grouped: dict[str, list[tuple[int, float, float]]] = {}
    for n, rec in enumerate(_rows(text), start=1):
        try:
            grouped.setdefault(rec["series"], []).append(
                (int(rec["step"]), float(rec["value"]), float(rec["std_dev"]))
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FixtureError(f"record {n}: {exc}") from exc
    out = {}
    for name, recs in grouped.items():
        recs.sort()
        out[name] = Series(name, *(tuple(c) for c in zip(*recs)))
    return FixtureTable(out)


def load_magnetization_tables() -> FixtureTable:
    """Hardware series for N=20 and for the large chains, merged."""
    small = parse_series_table(_data_text("hardware_magnetization_n20.csv"))
    large = parse_series_table(_data_text("hardware_magnetization_large.csv"))
    table = FixtureTable({**small.series, **large.series})
    table.validate_steps()
    return table


def load_mae_table() -> dict[str, dict[str, float | None]]:
    out: dict[str, dict[str, float | None]] = {}
    for rec in _rows(_data_text("hardware_mae.csv")):
        method = rec.pop("method")
        out[method] = {k: (float(v) if v else None) for k, v in rec.items()}
    return out


def load_circuit_resources() -> list[dict]:
    return [
        {"boundary": r["boundary"], "n_qubits": int(r["n_qubits"]), "step": int(r["step"]),
         "depth": int(r["depth"]), "cx": int(r["cx"])}
        for r in _rows(_data_text("circuit_resources.csv"))
    ]


# reference series ------------------------------------------------------------


def reference_series_values(boundary: Boundary, **overrides) -> list[float]:
    params = XXZParams(**{**REFERENCE_PARAMS, **overrides, "boundary": boundary})
    return [staggered_magnetization_exact(s) for s in trotter_states(params, TrotterOrder.SECOND)]


def reference_csv_text(obc: Sequence[float], pbc: Sequence[float]) -> str:
    p = REFERENCE_PARAMS
    lines = [
        "# DERIVED: noiseless optimized second-order Trotter statevector, Neel initial state,"
        f" N={p['n_qubits']} J1={p['j1']} Delta={p['delta']} dt={p['dt']}",
        "# regenerate with: python -m quenchqem.fixtures",
        "step,time,OBC,PBC",
    ]
    for m, (o, q) in enumerate(zip(obc, pbc), start=1):
        lines.append(f"{m},{m * p['dt']!r},{o!r},{q!r}")
    return "\n".join(lines) + "\n"


def regenerate_reference(path: str | Path | None = None) -> str:
    text = reference_csv_text(
        reference_series_values(Boundary.OBC), reference_series_values(Boundary.PBC)
    )
    if path is not None:
        Path(path).write_text(text)
    return text


def load_reference() -> FixtureTable:
    recs = _rows(_data_text(REFERENCE_FILE))
    steps = tuple(int(r["step"]) for r in recs)
    table = FixtureTable({
        b: Series(f"reference_{b}", steps, tuple(float(r[b]) for r in recs)) for b in ("OBC", "PBC")
    })
    table.validate_steps()
    return table


# comparison --------------------------------------------------------------------


@dataclass(frozen=True)
class MAEReport:
    label: str
    steps: tuple[int, ...]
    abs_errors: tuple[float, ...]
    mae: float

    def row(self) -> str:
        return f"{self.label:<22s} {self.mae:.5f}"

    def detail(self) -> str:
        cells = " ".join(f"{e:.5f}" for e in self.abs_errors)
        return f"{self.label}: {cells} | MAE {self.mae:.5f}"


def series_from_results(rows: Sequence[ResultRow], name: str = "results") -> Series:
    return Series(
        name,
        tuple(r.step for r in rows),
        tuple(r.mitigated for r in rows),
        tuple(r.std_error for r in rows),
    )


def load_results_series(path: str | Path) -> Series:
    return series_from_results(read_results_csv(Path(path).read_text()), Path(path).stem)


def compare_fixture(results: Series, reference: Series, label: str | None = None) -> MAEReport:
    """Per-step absolute errors and their mean, steps must align exactly."""
    if tuple(results.steps) != tuple(reference.steps):
        raise FixtureError(
            f"misaligned steps: {tuple(results.steps)} vs {tuple(reference.steps)}"
        )
    est = np.asarray(results.values, dtype=float)
    ref = np.asarray(reference.values, dtype=float)
    return MAEReport(
        label or results.name,
        tuple(results.steps),
        tuple(float(x) for x in np.abs(est - ref)),
        mean_absolute_error(est, ref),
    )


def table_cells(reference: Series | None = None) -> dict[tuple[str, str], MAEReport]:
    """Error cells reproducible from the bundled hardware series.

    Keys are ``(method, column)`` as in the bundled error table. All cells
    are measured against the PBC N=20 reference series.
    """
    ref = reference if reference is not None else load_reference()["PBC"]
    tables = load_magnetization_tables()
    out = {}
    for name in tables.names():
        column, _, method = name.rpartition("_")
        out[(method, column)] = compare_fixture(tables[name], ref, f"{method} {column}")
    return out


if __name__ == "__main__":
    target = Path(__file__).with_name("data") / REFERENCE_FILE
    regenerate_reference(target)
    print(f"wrote {target}")
