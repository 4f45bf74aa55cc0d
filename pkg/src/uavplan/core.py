"""Physical layer and sensing model for a single buffer-aided UAV.

Geometry is in meters, the base station sits at ``(0, 0, H)`` and ground
targets at ``(x_n, y_n, 0)``.  Every rate returned here is in bits per slot.
The array helpers (``*_xyz``) accept numpy arrays so the planner can score
whole candidate grids in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateGeometryError, InfeasibleSensingError


@dataclass(frozen=True)
class Position3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ConfigurationError(f"non-finite position {self}")
        if self.z < 0:
            raise ConfigurationError(f"altitude must be >= 0, got {self.z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance(self, other: "Position3") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2)


@dataclass(frozen=True)
class TaskTarget:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class ChannelParams:
    bs_height: float = 20.0        # m
    tx_power_dbm: float = 23.0
    noise_dbm: float = -96.0
    bandwidth_hz: float = 1e6
    eta_los_db: float = 1.0
    eta_nlos_db: float = 20.0
    fs_const_db: float = 32.44     # free space constant, d in km and f in MHz
    carrier_mhz: float = 2000.0
    alpha: float = 12.0
    beta: float = 0.135            # per degree

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ConfigurationError("bandwidth must be positive")
        if not self.eta_nlos_db >= self.eta_los_db >= 0:
            raise ConfigurationError("need eta_nlos >= eta_los >= 0")
        if self.beta <= 0:
            raise ConfigurationError("beta must be positive")
        if self.carrier_mhz <= 0:
            raise ConfigurationError("carrier frequency must be positive")


@dataclass(frozen=True)
class SensingParams:
    nu: float = 0.1                # per meter
    base_packets: float = 1.0
    arrival_rate: float = 5.0      # packets per slot
    packet_size_bits: float = 200e6
    p_min: float = 0.9

    def __post_init__(self):
        if self.nu <= 0:
            raise ConfigurationError("nu must be positive")
        if self.base_packets < 1:
            raise ConfigurationError("base packet count C must be >= 1")
        if self.arrival_rate <= 0 or self.packet_size_bits <= 0:
            raise ConfigurationError("arrival rate and packet size must be positive")
        if not 0 < self.p_min < 1:
            raise ConfigurationError("p_min must lie in (0, 1)")


@dataclass(frozen=True)
class UavParams:
    v_max: float = 20.0            # m per slot
    z_min: float = 10.0            # m
    slot_duration_s: float = 1.0

    def __post_init__(self):
        if self.v_max <= 0:
            raise ConfigurationError("v_max must be positive")
        if self.z_min < 0:
            raise ConfigurationError("z_min must be >= 0")
        if self.slot_duration_s <= 0:
            raise ConfigurationError("slot duration must be positive")


@dataclass(frozen=True)
class BufferSpec:
    capacity: int = 10             # packets
    packet_size_bits: float = 200e6

    def __post_init__(self):
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise ConfigurationError("buffer capacity must be an integer >= 1")
        if self.packet_size_bits <= 0:
            raise ConfigurationError("packet size must be positive")

    @property
    def capacity_bits(self) -> float:
        return self.capacity * self.packet_size_bits


def distance_to_target(loc: Position3, target: TaskTarget) -> float:
    return math.sqrt((loc.x - target.x) ** 2 + (loc.y - target.y) ** 2 + loc.z ** 2)


def sensing_success_prob(d: float, nu: float) -> float:
    if d < 0:
        raise ValueError("distance must be non-negative")
    return math.exp(-nu * d)


def required_packets(pr: float, base_packets: float) -> float:
    """Packets needed for a task given its per-packet sensing success ``pr``."""
    if pr <= 0:
        raise InfeasibleSensingError("sensing success probability is zero")
    if pr > 1:
        raise ValueError("probability above one")
    return base_packets / pr


def _bs_distance_xyz(x, y, z, cp: ChannelParams):
    return np.sqrt(np.square(x) + np.square(y) + np.square(np.asarray(z) - cp.bs_height))


def elevation_deg_xyz(x, y, z, cp: ChannelParams):
    d = _bs_distance_xyz(x, y, z, cp)
    if np.any(d == 0):
        raise DegenerateGeometryError("UAV is at the base station")
    return np.degrees(np.arcsin(np.clip((np.asarray(z) - cp.bs_height) / d, -1.0, 1.0)))


def los_probability_xyz(x, y, z, cp: ChannelParams):
    phi = elevation_deg_xyz(x, y, z, cp)
    return 1.0 / (1.0 + cp.alpha * np.exp(-cp.beta * (phi - cp.alpha)))


def average_pathloss_xyz(x, y, z, cp: ChannelParams):
    d_km = _bs_distance_xyz(x, y, z, cp) / 1000.0
    p_los = los_probability_xyz(x, y, z, cp)
    free_space = cp.fs_const_db + 20.0 * math.log10(cp.carrier_mhz) + 20.0 * np.log10(d_km)
    pl_los = free_space + cp.eta_los_db
    pl_nlos = free_space + cp.eta_nlos_db
    return p_los * pl_los + (1.0 - p_los) * pl_nlos


def link_rate_xyz(x, y, z, cp: ChannelParams, slot_duration_s: float = 1.0):
    pl = average_pathloss_xyz(x, y, z, cp)
    # both powers to mW before taking the ratio
    p_rx_mw = 10.0 ** ((cp.tx_power_dbm - pl) / 10.0)
    noise_mw = 10.0 ** (cp.noise_dbm / 10.0)
    return cp.bandwidth_hz * slot_duration_s * np.log2(1.0 + p_rx_mw / noise_mw)


def elevation_angle(loc: Position3, cp: ChannelParams) -> float:
    return float(elevation_deg_xyz(loc.x, loc.y, loc.z, cp))


def los_probability(loc: Position3, cp: ChannelParams) -> float:
    """LoS probability from the sigmoid-in-elevation model, angle in degrees."""
    return float(los_probability_xyz(loc.x, loc.y, loc.z, cp))


def pathloss_components(loc: Position3, cp: ChannelParams) -> tuple[float, float]:
    """(PL_LoS, PL_NLoS) in dB at ``loc``."""
    d = float(_bs_distance_xyz(loc.x, loc.y, loc.z, cp))
    if d == 0:
        raise DegenerateGeometryError("UAV is at the base station")
    free_space = cp.fs_const_db + 20.0 * math.log10(cp.carrier_mhz) + 20.0 * math.log10(d / 1000.0)
    return free_space + cp.eta_los_db, free_space + cp.eta_nlos_db


def average_pathloss(loc: Position3, cp: ChannelParams) -> float:
    return float(average_pathloss_xyz(loc.x, loc.y, loc.z, cp))


def link_rate(loc: Position3, cp: ChannelParams, slot_duration_s: float = 1.0) -> float:
    """Achievable UAV-to-BS rate at ``loc`` in bits per slot."""
    return float(link_rate_xyz(loc.x, loc.y, loc.z, cp, slot_duration_s))


def buffer_drain_step(q: float, rate: float) -> float:
    """One non-sensing slot of buffer evolution."""
    if q < 0 or rate < 0:
        raise ValueError("buffer and rate must be non-negative")
    return max(q - rate, 0.0)
