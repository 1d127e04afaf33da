"""INI experiment configuration."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .mitigation.config import (
    DDConfig,
    MitigationConfig,
    PTConfig,
    SMConfig,
    TrexConfig,
    ZNEConfig,
)
from .noise import NoiseError, NoiseModel
from .trotter import Boundary, TrotterOrder, XXZParams

WORKLOADS = ("magnetization", "entropy", "sweep")
REQUIRED = (("experiment", "workload"), ("model", "n_qubits"), ("model", "steps"))
SWEEP_LABELS = ("NOQEM", "TREX", "TREX+DD", "TREX+PT", "TREX+DD+PT")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EntropyConfig:
    subsystem: tuple[int, ...] | None = None
    instances: int = 60
    steps: tuple[int, ...] | None = None
    unbiased: bool = False
    exact_oracle: bool = True
    packed: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    workload: str
    params: XXZParams
    noise: NoiseModel = field(default_factory=NoiseModel)
    mitigation: MitigationConfig = field(default_factory=MitigationConfig)
    shots: int = 100_000
    repetitions: int = 10
    seed: int = 0
    trajectories: int = 20
    order: TrotterOrder = TrotterOrder.SECOND
    entropy: EntropyConfig = field(default_factory=EntropyConfig)
    output_dir: str = "results"

    def __post_init__(self) -> None:
        if self.workload not in WORKLOADS:
            raise ConfigError(f"workload must be one of {WORKLOADS}, got {self.workload!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.trajectories < 1:
            raise ConfigError("trajectories must be >= 1")

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        return self if seed is None else replace(self, seed=int(seed))

    def canonical(self) -> dict:
        """Plain-data view used for hashing and manifests."""
        d = {
            "workload": self.workload,
            "params": {**asdict(self.params), "boundary": self.params.boundary.value},
            "noise": self.noise.to_text(),
            "mitigation": asdict(self.mitigation),
            "shots": self.shots,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "trajectories": self.trajectories,
            "order": TrotterOrder(self.order).value,
            "entropy": asdict(self.entropy),
        }
        return json.loads(json.dumps(d, sort_keys=True, default=list))

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and "=" in line and line.split("=", 1)[0].strip() == key:
            return n
    return None


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, text: str, source: str):
        self.p = parser
        self.text = text
        self.source = source

    def where(self, section: str, key: str) -> str:
        n = _line_of(self.text, section, key)
        return f"{self.source}:{n}" if n else self.source

    def get(self, section: str, key: str, conv=str, default=None):
        if not self.p.has_option(section, key):
            return default
        raw = self.p.get(section, key).strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{self.where(section, key)}: bad value for {section}.{key}: {raw!r} ({exc})") from exc


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in raw.replace(" ", "").split(",") if x)


def _bool(raw: str) -> bool:
    v = raw.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    for section, key in REQUIRED:
        if not parser.has_option(section, key):
            raise ConfigError(f"{source}: missing required key {section}.{key}")
    r = _Reader(parser, text, source)

    workload = r.get("experiment", "workload").lower()
    if workload not in WORKLOADS:
        raise ConfigError(f"{r.where('experiment', 'workload')}: workload must be one of {WORKLOADS}")

    try:
        params = XXZParams(
            n_qubits=r.get("model", "n_qubits", int),
            j1=r.get("model", "j1", float, 1.0),
            delta=r.get("model", "delta", float, 1.0),
            dt=r.get("model", "dt", float, 0.5),
            n_steps=r.get("model", "steps", int),
            boundary=Boundary(r.get("model", "boundary", str.upper, "OBC")),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: [model] {exc}") from exc

    noise = NoiseModel()
    if parser.has_section("noise"):
        preset = r.get("noise", "preset", str.lower, "none")
        if preset not in ("none", "default"):
            raise ConfigError(f"{r.where('noise', 'preset')}: preset must be 'none' or 'default'")
        base = NoiseModel.default() if preset == "default" else NoiseModel()
        lines = [f"{k}={v}" for k, v in parser.items("noise") if k != "preset"]
        try:
            override = NoiseModel.from_text("\n".join(lines))
        except NoiseError as exc:
            raise ConfigError(f"{source}: [noise] {exc}") from exc
        keys = {k for k, _ in parser.items("noise")}
        noise = base.with_(
            p2=override.p2 if "p2" in keys else base.p2,
            eps2=override.eps2 if "eps2" in keys else base.eps2,
            idle_z=override.idle_z if "idle_z" in keys else base.idle_z,
            readout={**base.readout, **override.readout},
        )

    mitigation = MitigationConfig()
    if parser.has_section("mitigation"):
        label = r.get("mitigation", "methods", str, "NOQEM")
        try:
            mitigation = MitigationConfig.from_label(label)
            mitigation = replace(
                mitigation,
                trex=TrexConfig(mitigation.trex.enabled, r.get("mitigation", "trex_samples", int, 10)),
                pt=PTConfig(mitigation.pt.enabled, r.get("mitigation", "pt_copies", int, 10)),
                dd=DDConfig(mitigation.dd.enabled,
                            min_duration=r.get("mitigation", "dd_min_duration", float, 1.0)),
                zne=ZNEConfig(mitigation.zne.enabled,
                              r.get("mitigation", "zne_factors", _ints, (1, 3, 5)),
                              r.get("mitigation", "zne_fit", str.lower, "linear")),
                sm=SMConfig(mitigation.sm.enabled,
                            r.get("mitigation", "sm_dead_zone", float, 0.05),
                            r.get("mitigation", "sm_p_max", float, 0.95)),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{source}: [mitigation] {exc}") from exc

    entropy = EntropyConfig(
        subsystem=r.get("entropy", "subsystem", _ints, None),
        instances=r.get("entropy", "instances", int, 60),
        steps=r.get("entropy", "steps", _ints, None),
        unbiased=r.get("entropy", "unbiased", _bool, False),
        exact_oracle=r.get("entropy", "exact_oracle", _bool, True),
        packed=r.get("entropy", "packed", _bool, False),
    )
    try:
        return ExperimentConfig(
            workload=workload,
            params=params,
            noise=noise,
            mitigation=mitigation,
            shots=r.get("experiment", "shots", int, 100_000),
            repetitions=r.get("experiment", "repetitions", int, 10),
            seed=r.get("experiment", "seed", int, 0),
            trajectories=r.get("experiment", "trajectories", int, 20),
            order=TrotterOrder(r.get("experiment", "order", str.lower, "second")),
            entropy=entropy,
            output_dir=r.get("output", "dir", str, "results"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from exc
    return parse_config(text, str(p))
