"""Finite-buffer queue during a sensing phase.

While the UAV hovers and senses, packets arrive as a Poisson stream of rate
``lambda`` per slot and leave one at a time with a constant service time
``X = R_s / R``.  Two stationary models are offered:

``"eq8"``
    The closed-form M/G/1/K approximation with zero service variance.  It is
    exact-as-written: for loads between 4 and (K+1)^2 it returns negative
    "probabilities" (the vector still sums to one).
``"md1k"``
    The exact M/D/1/K time-average distribution from the embedded Markov chain
    at departure epochs.
``"auto"``
    The closed form wherever it yields a proper distribution, the exact chain
    elsewhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .errors import ConfigurationError, InfeasibleSensingError, NoLinkError

SINGULAR_LOADS = (1.0, 4.0)
SINGULAR_EPS = 1e-6
PROPER_TOL = 1e-12
MODELS = ("eq8", "md1k", "auto")
DEFAULT_DELTA_MAX = 100_000


@dataclass(frozen=True)
class QueueParams:
    arrival_rate: float   # packets per slot
    service_time: float   # slots per packet
    capacity: int         # K

    def __post_init__(self):
        if self.arrival_rate <= 0 or self.service_time <= 0:
            raise ConfigurationError("arrival rate and service time must be positive")
        if int(self.capacity) != self.capacity or self.capacity < 2:
            raise ConfigurationError("queue capacity K must be an integer >= 2")

    @property
    def rho(self) -> float:
        return self.arrival_rate * self.service_time


@dataclass(frozen=True)
class SteadyState:
    pi: np.ndarray
    rho: float
    model: str = "eq8"
    proper: bool = True
    tail: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        # tail[m] = sum_{i >= m} pi_i, with tail[K+1] = 0
        object.__setattr__(self, "tail", np.append(np.cumsum(self.pi[::-1])[::-1], 0.0))

    @property
    def capacity(self) -> int:
        return len(self.pi) - 1

    @property
    def pi0(self) -> float:
        return float(self.pi[0])

    @property
    def piK(self) -> float:
        return float(self.pi[-1])


@dataclass(frozen=True)
class CompletionQuery:
    required: float     # C_n, real valued
    q_start: float      # bits in the buffer when sensing starts
    rate: float         # bits per slot at the sensing location
    delta: int          # sensing slots
    packet_bits: float
    capacity: int


def service_time(packet_bits: float, rate: float) -> float:
    if rate <= 0:
        raise NoLinkError("link rate is zero")
    return packet_bits / rate


def _desingularize(rho: float) -> float:
    for s in SINGULAR_LOADS:
        if abs(rho - s) < SINGULAR_EPS:
            return s + SINGULAR_EPS if rho >= s else s - SINGULAR_EPS
    return rho


def eq8_probabilities(rho: float, K: int) -> np.ndarray:
    """Raw closed-form occupancy vector, no validation."""
    if rho <= 0:
        raise ConfigurationError("traffic load must be positive")
    if K < 2:
        raise ConfigurationError("closed form needs K >= 2")
    rho = _desingularize(rho)
    ln_rho = math.log(rho)
    sr = math.sqrt(rho)
    e_top = (2 * K - sr) / (2 - sr)         # exponent in the pi_K numerator
    a = (e_top + 1.0) * ln_rho              # log of rho^(2(K+1-sr)/(2-sr))
    if a > 0:
        pi0 = (rho - 1) * math.exp(-a) / -math.expm1(-a)
        piK = (rho - 1) / (rho * -math.expm1(-a))
    else:
        pi0 = (rho - 1) / math.expm1(a)
        piK = pi0 * math.exp(a) / rho
    i = np.arange(1, K)
    if rho > 1:
        band = (rho - 1) * np.exp((i - K) * ln_rho) / -math.expm1(-(K - 1) * ln_rho)
    else:
        band = (1 - rho) * np.exp((i - 1) * ln_rho) / -math.expm1((K - 1) * ln_rho)
    pi = np.empty(K + 1)
    pi[0] = pi0
    pi[K] = piK
    pi[1:K] = band * (1.0 - pi0 - piK)
    return pi


@lru_cache(maxsize=4096)
def _md1k_cached(rho: float, K: int) -> tuple:
    a = stats.poisson.pmf(np.arange(K), rho)
    sf = stats.poisson.sf(np.arange(-1, K), rho)   # sf[k+1] = P(N > k)
    P = np.zeros((K, K))
    for i in range(K):
        base = max(i - 1, 0)   # left behind before counting arrivals
        for j in range(base, K - 1):
            P[i, j] = a[j - base]
        # everything that would overflow lands on K-1 (blocked)
        P[i, K - 1] = sf[K - 1 - base]
    A = P.T - np.eye(K)
    A[-1, :] = 1.0
    b = np.zeros(K)
    b[-1] = 1.0
    pd = np.linalg.solve(A, b)
    pd = np.clip(pd, 0.0, None)
    pd /= pd.sum()
    denom = pd[0] + rho
    pi = np.empty(K + 1)
    pi[:K] = pd / denom
    pi[K] = max((pd[0] + rho - 1.0) / denom, 0.0)   # cancels at light load
    return tuple(pi)


def md1k_probabilities(rho: float, K: int) -> np.ndarray:
    """Exact time-average occupancy of M/D/1/K with offered load ``rho``."""
    if rho <= 0:
        raise ConfigurationError("traffic load must be positive")
    return np.array(_md1k_cached(float(rho), int(K)))


def _is_proper(pi: np.ndarray) -> bool:
    return bool(np.all(pi >= -PROPER_TOL) and np.all(pi <= 1 + PROPER_TOL))


def steady_state(qp: QueueParams, model: str = "eq8") -> SteadyState:
    if model not in MODELS:
        raise ConfigurationError(f"unknown queue model {model!r}")
    rho, K = qp.rho, int(qp.capacity)
    if model in ("eq8", "auto"):
        pi = eq8_probabilities(rho, K)
        if _is_proper(pi):
            return SteadyState(np.clip(pi, 0.0, 1.0), rho, "eq8", True)
        if model == "eq8":
            return SteadyState(pi, rho, "eq8", False)
    return SteadyState(md1k_probabilities(rho, K), rho, "md1k", True)


def completion_index(required: float, q_start: float, rate: float, delta: float, packet_bits: float) -> int:
    """Smallest buffer occupancy that certifies task completion after ``delta`` slots."""
    return math.ceil(required + (q_start - rate * delta) / packet_bits)


def completion_probability(cq: CompletionQuery, ss: SteadyState) -> float:
    m = completion_index(cq.required, cq.q_start, cq.rate, cq.delta, cq.packet_bits)
    if m <= 0:
        return 1.0
    if m > cq.capacity:
        return 0.0
    return float(ss.tail[m])


def rho_star(ss: SteadyState, p_min: float) -> float:
    rho, K = ss.rho, ss.capacity
    pi0, piK = ss.pi0, ss.piK
    rk = rho ** (K - 1)
    return (1 - rk) * (p_min - piK) / (1 - pi0 - piK) + rk


def admissible_index(ss: SteadyState, p_min: float) -> int:
    """Largest m in [0, K] whose tail mass reaches ``p_min`` (tail must be monotone)."""
    ok = np.nonzero(ss.tail[: ss.capacity + 1] >= p_min)[0]
    return int(ok[-1]) if len(ok) else 0


def closed_form_index(ss: SteadyState, p_min: float) -> int | None:
    """Threshold index from the log formula, or None outside its domain."""
    if ss.model != "eq8" or not ss.proper:
        return None
    rho = _desingularize(ss.rho)
    if abs(math.log(rho)) < 1e-12:
        return None
    band = 1 - ss.pi0 - ss.piK
    if band <= 0:
        return None
    try:
        rs = rho_star(SteadyState(ss.pi, rho, ss.model, ss.proper), p_min)
    except OverflowError:
        return None
    if not rs > 0 or not math.isfinite(rs):
        return None
    m = 1 + math.floor(math.log(rs) / math.log(rho))
    return min(max(m, 0), ss.capacity)


def _queue_for(rate: float, packet_bits: float, qp: QueueParams) -> QueueParams:
    return QueueParams(qp.arrival_rate, service_time(packet_bits, rate), qp.capacity)


def sensing_threshold(ss: SteadyState, p_min: float) -> int | None:
    """Largest admissible completion index, None when the tail is not monotone."""
    if not ss.proper:
        return None
    m = closed_form_index(ss, p_min)
    return admissible_index(ss, p_min) if m is None else m


def delta_for_threshold(required: float, q_start: float, rate: float, packet_bits: float, m: int) -> int:
    return max(math.ceil(packet_bits / rate * (required + q_start / packet_bits - m)), 1)


def min_sensing_time(required: float, q_start: float, rate: float, qp: QueueParams,
                     p_min: float, packet_bits: float, *, model: str = "eq8",
                     delta_max: int = DEFAULT_DELTA_MAX) -> int:
    """Fewest sensing slots giving completion probability >= ``p_min``.

    Uses the logarithmic closed form when the stationary vector is the proper
    closed-form one, the tabulated threshold for other proper vectors, and a
    linear scan otherwise.  ``qp.service_time`` is ignored in favour of
    ``packet_bits / rate`` so the two can never disagree.
    """
    if rate <= 0:
        raise NoLinkError("link rate is zero")
    qp = _queue_for(rate, packet_bits, qp)
    ss = steady_state(qp, model)
    m = sensing_threshold(ss, p_min)
    if m is None:
        return brute_force_min_sensing_time(required, q_start, rate, qp, p_min, packet_bits,
                                            model=model, delta_max=delta_max)
    delta = delta_for_threshold(required, q_start, rate, packet_bits, m)
    if delta > delta_max:
        raise InfeasibleSensingError(f"needs {delta} sensing slots, cap is {delta_max}")
    return delta


def brute_force_min_sensing_time(required: float, q_start: float, rate: float, qp: QueueParams,
                                 p_min: float, packet_bits: float, *, model: str = "eq8",
                                 delta_max: int = DEFAULT_DELTA_MAX) -> int:
    if rate <= 0:
        raise NoLinkError("link rate is zero")
    qp = _queue_for(rate, packet_bits, qp)
    ss = steady_state(qp, model)
    for delta in range(1, delta_max + 1):
        cq = CompletionQuery(required, q_start, rate, delta, packet_bits, qp.capacity)
        if completion_probability(cq, ss) >= p_min:
            return delta
    raise InfeasibleSensingError(f"p_min not reached within {delta_max} slots")


def theta(required: float, rho_star_value: float, rho: float) -> float:
    if rho_star_value <= 0 or rho <= 0 or rho == 1:
        raise ValueError("logarithm domain violated")
    return required - 1 - math.floor(math.log(rho_star_value) / math.log(rho))


def tradeoff_increments(theta_value: float, packet_bits: float, q0: float, rate_at_location: float,
                        rate_avg: float, d_packet_bits: float) -> tuple[float, float]:
    """Extra sensing slots vs extra flight slots needed when the packet size grows.

    Returns ``(d_delta, d_flight)``; the first is paid at the sensing location,
    the second at the mean rate of the incoming segment.
    """
    common = d_packet_bits * (theta_value * packet_bits + q0) / packet_bits
    return common / rate_at_location, common / rate_avg
