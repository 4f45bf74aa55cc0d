"""Scenario and planner configuration, plus the unit-suffixed JSON file format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .core import BufferSpec, ChannelParams, Position3, SensingParams, TaskTarget, UavParams
from .errors import ConfigurationError
from .queueing import MODELS


@dataclass(frozen=True)
class PlannerConfig:
    enumeration_factor: float = 4.0
    position_resolution_m: float = 1.0
    max_outer_iterations: int = 50
    max_sensing_slots: int = 100_000
    queue_model: str = "auto"
    # extra sensing slots when Poisson arrivals cannot plausibly fill the buffer in time
    transient_guard: bool = True

    def __post_init__(self):
        if self.enumeration_factor <= 1:
            raise ConfigurationError("enumeration factor must exceed 1")
        if self.position_resolution_m <= 0:
            raise ConfigurationError("position resolution must be positive")
        if self.max_outer_iterations < 1 or self.max_sensing_slots < 1:
            raise ConfigurationError("iteration and sensing caps must be >= 1")
        if self.queue_model not in MODELS:
            raise ConfigurationError(f"queue model must be one of {MODELS}")


@dataclass(frozen=True)
class ScenarioConfig:
    tasks: tuple[TaskTarget, ...]
    channel: ChannelParams = field(default_factory=ChannelParams)
    sensing: SensingParams = field(default_factory=SensingParams)
    uav: UavParams = field(default_factory=UavParams)
    buffer: BufferSpec = field(default_factory=BufferSpec)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    seed: int = 0
    area_m: tuple[float, float] = (600.0, 600.0)

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "area_m", tuple(float(a) for a in self.area_m))
        if not self.tasks:
            raise ConfigurationError("need at least one task")
        if [t.id for t in self.tasks] != list(range(1, len(self.tasks) + 1)):
            raise ConfigurationError("task ids must be 1..N in execution order")
        if min(self.area_m) <= 0:
            raise ConfigurationError("area bounds must be positive")
        if self.buffer.packet_size_bits != self.sensing.packet_size_bits:
            raise ConfigurationError("buffer and sensing packet sizes differ")
        if self.buffer.capacity < 2:
            raise ConfigurationError("buffer capacity must be >= 2 packets")
        if self.uav.z_min == self.channel.bs_height:
            raise ConfigurationError("start point would coincide with the BS antenna")

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def start(self) -> Position3:
        return Position3(0.0, 0.0, self.uav.z_min)

    def with_packet_size(self, bits: float) -> "ScenarioConfig":
        return replace(self, sensing=replace(self.sensing, packet_size_bits=float(bits)),
                       buffer=replace(self.buffer, packet_size_bits=float(bits)))

    def with_capacity(self, k: int) -> "ScenarioConfig":
        return replace(self, buffer=replace(self.buffer, capacity=int(k)))


# python field name -> file key
_CHANNEL_KEYS = {
    "bs_height": "bs_height_m",
    "tx_power_dbm": "tx_power_dbm",
    "noise_dbm": "noise_power_dbm",
    "bandwidth_hz": "bandwidth_hz",
    "eta_los_db": "eta_los_db",
    "eta_nlos_db": "eta_nlos_db",
    "fs_const_db": "fs_const_db",
    "carrier_mhz": "carrier_freq_mhz",
    "alpha": "los_alpha",
    "beta": "los_beta_per_deg",
}
_SENSING_KEYS = {
    "nu": "nu_per_m",
    "base_packets": "base_packets",
    "arrival_rate": "arrival_rate_packets_per_slot",
    "packet_size_bits": "packet_size_bits",
    "p_min": "p_min",
}
_UAV_KEYS = {
    "v_max": "v_max_m_per_slot",
    "z_min": "z_min_m",
    "slot_duration_s": "slot_duration_s",
}
_BUFFER_KEYS = {"capacity": "capacity_packets"}
_PLANNER_KEYS = {
    "enumeration_factor": "enumeration_factor",
    "position_resolution_m": "position_resolution_m",
    "max_outer_iterations": "max_outer_iterations",
    "max_sensing_slots": "max_sensing_slots",
    "queue_model": "queue_model",
    "transient_guard": "transient_guard",
}


def _dump(obj, keys):
    return {keys[f.name]: getattr(obj, f.name) for f in fields(obj) if f.name in keys}


def _load(cls, data, keys, **extra):
    inverse = {v: k for k, v in keys.items()}
    unknown = set(data) - set(inverse)
    if unknown:
        raise ConfigurationError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    return cls(**{inverse[k]: v for k, v in data.items()}, **extra)


def scenario_to_dict(sc: ScenarioConfig) -> dict:
    return {
        "seed": sc.seed,
        "area_m": list(sc.area_m),
        "tasks": [{"id": t.id, "x_m": t.x, "y_m": t.y} for t in sc.tasks],
        "channel": _dump(sc.channel, _CHANNEL_KEYS),
        "sensing": _dump(sc.sensing, _SENSING_KEYS),
        "uav": _dump(sc.uav, _UAV_KEYS),
        "buffer": _dump(sc.buffer, _BUFFER_KEYS),
        "planner": _dump(sc.planner, _PLANNER_KEYS),
    }


def scenario_from_dict(data: dict) -> ScenarioConfig:
    try:
        sensing = _load(SensingParams, data["sensing"], _SENSING_KEYS)
        return ScenarioConfig(
            tasks=tuple(TaskTarget(int(t["id"]), float(t["x_m"]), float(t["y_m"])) for t in data["tasks"]),
            channel=_load(ChannelParams, data["channel"], _CHANNEL_KEYS),
            sensing=sensing,
            uav=_load(UavParams, data["uav"], _UAV_KEYS),
            buffer=_load(BufferSpec, data["buffer"], _BUFFER_KEYS, packet_size_bits=sensing.packet_size_bits),
            planner=_load(PlannerConfig, data.get("planner", {}), _PLANNER_KEYS),
            seed=int(data.get("seed", 0)),
            area_m=tuple(data.get("area_m", (600.0, 600.0))),
        )
    except KeyError as exc:
        raise ConfigurationError(f"missing config section or key: {exc}") from None


def dumps_scenario(sc: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


def loads_scenario(text: str) -> ScenarioConfig:
    return scenario_from_dict(json.loads(text))


def save_scenario(sc: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps_scenario(sc))


def load_scenario(path) -> ScenarioConfig:
    return loads_scenario(Path(path).read_text())
