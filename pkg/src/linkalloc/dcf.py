"""Saturated DCF contention model and a slot-level event simulator.

The analytical side solves the classic two-equation fixed point for the
per-slot transmission probability tau of n saturated contenders with binary
exponential backoff, then evaluates normalized MAC throughput including a
per-link PHY error probability. The simulator replays the same backoff rules
slot by slot and serves as an independent cross-check.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import InvalidInputError, SolverError

__all__ = [
    "DcfParams",
    "ContentionState",
    "AirtimeDurations",
    "solve_bianchi_fixed_point",
    "airtime_durations",
    "normalized_throughput",
    "simulate_dcf_slots",
]


@dataclass(frozen=True)
class DcfParams:
    """MAC timing and backoff parameters (defaults: saturated 802.11 DCF)."""

    slot_time: float = 9e-6
    sifs: float = 16e-6
    difs: float = 34e-6
    eifs: float | None = None      # None -> SIFS + ACK airtime + DIFS
    phy_header: float = 20e-6      # PHY preamble + header airtime
    ack_bytes: int = 14
    payload_bytes: int = 1500
    ack_timeout: float = 300e-6
    cw_min: int = 16
    cw_max: int = 1024
    m_max_backoff_stages: int = 6
    prop_delay: float = 0.1e-6

    def __post_init__(self):
        for name in ("slot_time", "sifs", "difs", "phy_header", "ack_timeout"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be > 0")
        if self.eifs is not None and self.eifs <= 0:
            raise InvalidInputError("eifs must be > 0 when given")
        if self.prop_delay < 0:
            raise InvalidInputError("prop_delay must be >= 0")
        if self.ack_bytes <= 0 or self.payload_bytes < 0:
            raise InvalidInputError("ack_bytes must be > 0 and payload_bytes >= 0")
        if self.cw_min < 1 or self.cw_max < self.cw_min:
            raise InvalidInputError("need 1 <= cw_min <= cw_max")
        if self.m_max_backoff_stages < 0:
            raise InvalidInputError("m_max_backoff_stages must be >= 0")
        if self.cw_min * 2 ** self.m_max_backoff_stages != self.cw_max:
            raise InvalidInputError(
                "cw_max must equal cw_min * 2**m_max_backoff_stages "
                f"({self.cw_min} * 2**{self.m_max_backoff_stages} != {self.cw_max})"
            )


@dataclass(frozen=True)
class ContentionState:
    """Solved per-slot behaviour of one saturated channel."""

    n_contenders: int
    tau: float                 # per-slot transmission probability of one node
    p_cond_collision: float    # conditional collision probability seen by a node
    residual: float            # |tau - tau_formula(p(tau))| at the returned point


def _tau_of_p(p: float, w: int, m: int) -> float:
    # tau = 2(1-2p) / ((1-2p)(W+1) + pW(1-(2p)^m)), written with the geometric
    # sum expanded so p = 1/2 is not a 0/0 special case
    s = sum((2.0 * p) ** i for i in range(m))
    return 2.0 / ((w + 1) + p * w * s)


def solve_bianchi_fixed_point(params: DcfParams, n_contenders: int) -> ContentionState:
    """Solve tau = f(p(tau)) for n saturated contenders by bisection."""
    if n_contenders < 1:
        raise InvalidInputError("n_contenders must be >= 1")
    w = params.cw_min
    m = params.m_max_backoff_stages
    if n_contenders == 1:
        tau = 2.0 / (w + 1)
        return ContentionState(1, tau, 0.0, 0.0)

    def residual(tau: float) -> float:
        p = 1.0 - (1.0 - tau) ** (n_contenders - 1)
        return tau - _tau_of_p(p, w, m)

    lo, hi = 1e-12, 1.0 - 1e-12
    if residual(lo) > 0 or residual(hi) < 0:
        raise SolverError("backoff fixed point not bracketed in (0, 1)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    tau = 0.5 * (lo + hi)
    res = abs(residual(tau))
    if res >= 1e-10:
        raise SolverError(f"backoff fixed point residual {res:.3e} >= 1e-10")
    p = 1.0 - (1.0 - tau) ** (n_contenders - 1)
    return ContentionState(n_contenders, tau, p, res)


@dataclass(frozen=True)
class AirtimeDurations:
    """Channel occupancy of the three transmission outcomes, in seconds."""

    t_success: float
    t_collision: float
    t_phy_error: float
    payload_airtime: float   # E[Pkt]: payload bits at the MCS data rate
    ack_airtime: float

    def __post_init__(self):
        if min(self.t_success, self.t_collision, self.t_phy_error) <= 0:
            raise InvalidInputError("durations must be > 0")
        if self.payload_airtime < 0:
            raise InvalidInputError("payload_airtime must be >= 0")


def airtime_durations(params: DcfParams, mcs_rate: float) -> AirtimeDurations:
    """Slot durations for success / collision / PHY error at a PHY rate.

    ACK frames ride at the same MCS rate plus a PHY header; EIFS defaults to
    SIFS + ACK airtime + DIFS, which makes T_c = T_s - prop_delay.
    """
    if mcs_rate <= 0 or not math.isfinite(mcs_rate):
        raise InvalidInputError("mcs_rate must be finite and > 0")
    payload = params.payload_bytes * 8 / mcs_rate
    ack = params.ack_bytes * 8 / mcs_rate + params.phy_header
    h = params.phy_header
    delta = params.prop_delay
    t_s = h + payload + params.sifs + delta + ack + params.difs + delta
    eifs = params.eifs if params.eifs is not None else params.sifs + ack + params.difs
    t_c = h + payload + delta + eifs
    return AirtimeDurations(t_success=t_s, t_collision=t_c, t_phy_error=t_c,
                            payload_airtime=payload, ack_airtime=ack)


def normalized_throughput(state: ContentionState, durations: AirtimeDurations,
                          per: float, params: DcfParams) -> float:
    """Fraction of channel time carrying successfully delivered payload.

    Success requires winning the slot (single transmitter) and surviving the
    PHY with probability 1 - per; collided and errored transmissions burn
    t_collision / t_phy_error respectively.
    """
    if not 0.0 <= per <= 1.0:
        raise InvalidInputError(f"per must be in [0, 1], got {per!r}")
    n = state.n_contenders
    tau = state.tau
    p_tr = 1.0 - (1.0 - tau) ** n
    if p_tr <= 0.0:
        return 0.0
    p_s = n * tau * (1.0 - tau) ** (n - 1) / p_tr
    num = (1.0 - per) * p_s * p_tr * durations.payload_airtime
    den = ((1.0 - p_tr) * params.slot_time
           + p_tr * p_s * (1.0 - per) * durations.t_success
           + p_tr * (1.0 - p_s) * durations.t_collision
           + p_tr * p_s * per * durations.t_phy_error)
    return num / den


def simulate_dcf_slots(params: DcfParams, n_contenders: int, per: float,
                       n_slots: int, seed: int, durations: AirtimeDurations, *,
                       phy_error_doubles_backoff: bool = False) -> float:
    """Empirical normalized throughput from a slot-level backoff replay.

    Runs `n_slots` contention slots (idle slots and transmission events each
    count as one). Backoff counters freeze while the channel is busy, double
    on collision up to cw_max, and reset on success. PHY errors are drawn
    i.i.d. with probability `per` on single-transmitter slots; by default an
    errored attempt redraws its backoff from the current window without
    doubling it (set `phy_error_doubles_backoff` to treat it like a
    collision), keeping the simulator aligned with the analytical fixed point
    whose conditional failure probability counts collisions only.
    """
    if n_contenders < 1:
        raise InvalidInputError("n_contenders must be >= 1")
    if not 0.0 <= per <= 1.0:
        raise InvalidInputError(f"per must be in [0, 1], got {per!r}")
    if n_slots < 1:
        raise InvalidInputError("n_slots must be >= 1")
    rng = random.Random(seed)
    n = n_contenders
    windows = [params.cw_min] * n
    backoff = [rng.randrange(params.cw_min) for _ in range(n)]

    slots = 0
    busy_time = 0.0
    idle_slots = 0
    payload_time = 0.0

    while slots < n_slots:
        b_min = min(backoff)
        if b_min > 0:
            # jump over the idle run in one step
            idle_slots += b_min
            slots += b_min
            backoff = [b - b_min for b in backoff]
            continue
        tx = [i for i, b in enumerate(backoff) if b == 0]
        if len(tx) == 1:
            i = tx[0]
            if per > 0.0 and rng.random() < per:
                busy_time += durations.t_phy_error
                if phy_error_doubles_backoff:
                    windows[i] = min(2 * windows[i], params.cw_max)
            else:
                payload_time += durations.payload_airtime
                busy_time += durations.t_success
                windows[i] = params.cw_min
        else:
            busy_time += durations.t_collision
            for i in tx:
                windows[i] = min(2 * windows[i], params.cw_max)
        for i in tx:
            backoff[i] = rng.randrange(windows[i])
        slots += 1

    total_time = idle_slots * params.slot_time + busy_time
    if total_time <= 0.0:
        return 0.0
    return payload_time / total_time
