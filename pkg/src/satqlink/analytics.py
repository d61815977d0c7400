"""Closed-form rate model and memory-allocation optimizer.

The protocol distributes entangled pairs in rounds: the sender emits a
train of N photons (one per memory slot committed to the round, period
T_em), the receiver latches arrivals with Bell-state measurements, and a
classical confirmation returns after one round trip.  Slots recycle only on
confirmation, so with transmission eta and BSM success p the long-run pair
rate of one link is

    r = p * eta * N / t_rt.

Radial motion adds a per-photon arrival drift dt = v_r * T_em / c within a
train; photons whose accumulated drift exceeds the acceptance window w
cannot latch, which caps the useful train length at w * c / (|v_r| * T_em)
and gives the corrected rate

    r* = p * (eta / t_rt) * min(m_S, w * c / (|v_r| * T_em)).

A ground-satellite-ground link swaps onboard, so its rate is the minimum
of the two leg rates; splitting the m_S satellite slots to equalize the two
arguments of that minimum maximizes it.  With x = t_rt_A / eta_A and
y = t_rt_B / eta_B the real-valued optimum is m_A = m_S * x / (x + y), and
the integer-valued optimum is

    m_A = ceil((m_S - 1) * x / (x + y)),   m_B = m_S - m_A,

which exhaustive search confirms is the integer argmax.  All operations
here are pure and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .constants import (
    C_LIGHT,
    DEFAULT_COINCIDENCE_WINDOW,
    DEFAULT_EMISSION_PERIOD,
    DEFAULT_P_BSM,
)
from .errors import ConfigError, GridMismatchError, NoOverlapError, NoVisibilityError
from .passes import PassProfile

__all__ = [
    "LinkParams",
    "LinkState",
    "AllocationResult",
    "round_trip_time",
    "differential_shift",
    "max_train_length",
    "single_link_rate",
    "corrected_rate",
    "dual_rate",
    "allocate_real",
    "allocate_int",
    "best_static_split",
    "allocation_series",
    "rate_series",
    "link_state_at",
    "write_rate_csv",
]


@dataclass(frozen=True)
class LinkParams:
    """Protocol and hardware constants of one optical link.

    ``m_sat`` is the satellite memory available to the link as a whole; a
    dual link splits it between its legs per the allocation policy.
    ``m_ground`` defaults to ``m_sat``, the assumption being that ground
    stations are at least as well equipped as the satellite.
    """

    m_sat: int
    m_ground: int | None = None
    emission_period_s: float = DEFAULT_EMISSION_PERIOD
    acceptance_window_s: float = DEFAULT_COINCIDENCE_WINDOW
    p_bsm: float = DEFAULT_P_BSM
    processing_delay_s: float = 0.0
    light_speed_mps: float = C_LIGHT

    def __post_init__(self) -> None:
        if int(self.m_sat) != self.m_sat or self.m_sat < 1:
            raise ConfigError(f"m_sat must be a positive integer: {self.m_sat}")
        if self.m_ground is None:
            object.__setattr__(self, "m_ground", int(self.m_sat))
        if int(self.m_ground) != self.m_ground or self.m_ground < 1:
            raise ConfigError(f"m_ground must be a positive integer: {self.m_ground}")
        if self.m_sat > self.m_ground:
            raise ConfigError(
                f"m_sat ({self.m_sat}) must not exceed m_ground ({self.m_ground})"
            )
        if not 0.0 < self.p_bsm <= 1.0:
            raise ConfigError(f"p_bsm out of (0, 1]: {self.p_bsm}")
        if self.emission_period_s <= 0.0 or self.acceptance_window_s <= 0.0:
            raise ConfigError("emission_period_s and acceptance_window_s must be > 0")
        if self.processing_delay_s < 0.0:
            raise ConfigError("processing_delay_s must be >= 0")
        if self.light_speed_mps <= 0.0:
            raise ConfigError("light_speed_mps must be > 0")

    def with_m_sat(self, m_sat: int) -> "LinkParams":
        """Copy with a different satellite slot count (m_ground tracks it when defaulted)."""
        m_g = None if self.m_ground == self.m_sat else self.m_ground
        return LinkParams(
            m_sat=m_sat,
            m_ground=m_g if m_g is None or m_g >= m_sat else m_sat,
            emission_period_s=self.emission_period_s,
            acceptance_window_s=self.acceptance_window_s,
            p_bsm=self.p_bsm,
            processing_delay_s=self.processing_delay_s,
            light_speed_mps=self.light_speed_mps,
        )


@dataclass(frozen=True)
class LinkState:
    """Channel state of one leg at one instant: transmission, round trip, range rate."""

    eta: float
    t_rt_s: float
    v_r_mps: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta out of [0, 1]: {self.eta}")
        if self.t_rt_s <= 0.0:
            raise ConfigError(f"t_rt_s must be > 0: {self.t_rt_s}")


def round_trip_time(distance_m: float, params: LinkParams) -> float:
    """Classical confirmation delay: 2 * distance / c plus processing."""
    if distance_m <= 0.0:
        raise ConfigError(f"distance_m must be > 0: {distance_m}")
    return 2.0 * distance_m / params.light_speed_mps + params.processing_delay_s


def differential_shift(v_r_mps: float, params: LinkParams) -> float:
    """Per-photon arrival-time drift within a train, signed: v_r * T_em / c."""
    return v_r_mps * params.emission_period_s / params.light_speed_mps


def max_train_length(v_r_mps: float, params: LinkParams) -> float:
    """Largest useful photon train under drift: floor(w * c / (|v_r| * T_em)).

    Returns ``math.inf`` for v_r = 0 (no drift, unbounded train).
    """
    if v_r_mps == 0.0:
        return math.inf
    bound = params.acceptance_window_s * params.light_speed_mps / (
        abs(v_r_mps) * params.emission_period_s
    )
    return float(math.floor(bound))


def single_link_rate(state: LinkState, n_train: float, params: LinkParams) -> float:
    """Pair rate of one link running trains of ``n_train`` photons: p * eta * N / t_rt."""
    if n_train < 1:
        raise ConfigError(f"n_train must be >= 1: {n_train}")
    return params.p_bsm * state.eta * n_train / state.t_rt_s


def corrected_rate(state: LinkState, params: LinkParams) -> float:
    """Single-link rate with the drift cap applied to the train length.

    r* = p * eta * min(m_sat, w * c / (|v_r| * T_em)) / t_rt; the cap is
    used unfloored here, matching the closed-form envelope rather than the
    integer train the simulator runs.  Evaluation order matches
    :func:`single_link_rate` so the two agree bit-for-bit wherever the cap
    is inactive.
    """
    if state.v_r_mps == 0.0:
        cap = float(params.m_sat)
    else:
        cap = min(
            float(params.m_sat),
            params.acceptance_window_s
            * params.light_speed_mps
            / (abs(state.v_r_mps) * params.emission_period_s),
        )
    return params.p_bsm * state.eta * cap / state.t_rt_s


def dual_rate(
    state_a: LinkState,
    state_b: LinkState,
    m_a: float,
    m_b: float,
    params_a: LinkParams,
    params_b: LinkParams | None = None,
) -> float:
    """End-to-end rate of a swapped two-leg link: min of the leg rates.

    min(p_A * m_A * eta_A / t_A, p_B * m_B * eta_B / t_B).  A zero slot
    share yields rate zero for that leg and hence for the pair.
    """
    if params_b is None:
        params_b = params_a
    if m_a < 0 or m_b < 0:
        raise ConfigError(f"slot shares must be >= 0: ({m_a}, {m_b})")
    r_a = params_a.p_bsm * m_a * state_a.eta / state_a.t_rt_s
    r_b = params_b.p_bsm * m_b * state_b.eta / state_b.t_rt_s
    return min(r_a, r_b)


def _load_ratios(state_a: LinkState, state_b: LinkState) -> tuple[float, float]:
    if state_a.eta <= 0.0 or state_b.eta <= 0.0:
        raise NoVisibilityError(
            f"memory allocation needs both legs transmitting, got eta=({state_a.eta}, {state_b.eta})"
        )
    return state_a.t_rt_s / state_a.eta, state_b.t_rt_s / state_b.eta


def allocate_real(state_a: LinkState, state_b: LinkState, m_s: int) -> tuple[float, float]:
    """Real-valued slot split equalizing the two leg rates.

    With x = t_A/eta_A and y = t_B/eta_B: m_A = m_S * x / (x + y),
    m_B = m_S - m_A.  This maximizes the min-rate over all real splits
    summing to m_S.
    """
    x, y = _load_ratios(state_a, state_b)
    m_a = m_s * x / (x + y)
    return m_a, m_s - m_a


def allocate_int(state_a: LinkState, state_b: LinkState, m_s: int) -> tuple[int, int]:
    """Integer slot split maximizing the min-rate.

    m_A = ceil((m_S - 1) * x / (x + y)), m_B = floor((m_S - 1) * y / (x + y) + 1);
    the two always sum to m_S and exhaustive search over integer splits
    confirms optimality.  Both legs always receive at least one slot.
    """
    if m_s < 2:
        raise ConfigError(f"integer allocation needs m_s >= 2: {m_s}")
    x, y = _load_ratios(state_a, state_b)
    a = (m_s - 1) * x / (x + y)
    m_a = int(math.ceil(a))
    m_b = int(math.floor((m_s - 1) * y / (x + y) + 1.0))
    if m_a + m_b != m_s:
        # float tie fell on opposite sides of an integer; keep the identity
        m_b = m_s - m_a
    return m_a, m_b


# --------------------------------------------------------------------------
# profile-level series


def link_state_at(profile: PassProfile, i: int, params: LinkParams) -> LinkState:
    """Channel state of sample ``i``: eta from the profile, t_rt from its range."""
    return LinkState(
        eta=float(profile.eta[i]),
        t_rt_s=round_trip_time(float(profile.distance_m[i]), params),
        v_r_mps=float(profile.radial_velocity_mps[i]),
    )


def _check_aligned(profile_a: PassProfile, profile_b: PassProfile) -> None:
    if profile_a.n_samples != profile_b.n_samples:
        raise GridMismatchError(
            f"profiles differ in length: {profile_a.n_samples} vs {profile_b.n_samples}"
        )
    if abs(profile_a.step_s - profile_b.step_s) > PassProfile.GRID_TOL_S:
        raise GridMismatchError("profiles differ in sample step")
    if np.any(np.abs(profile_a.t_s - profile_b.t_s) > PassProfile.GRID_TOL_S):
        raise GridMismatchError("profiles are not on the same time grid")
    if profile_a.epoch != profile_b.epoch:
        raise GridMismatchError(
            f"profiles have different epochs: {profile_a.epoch} vs {profile_b.epoch}"
        )


def best_static_split(
    profile_a: PassProfile,
    profile_b: PassProfile,
    m_s: int,
    params_a: LinkParams,
    params_b: LinkParams | None = None,
) -> tuple[int, int]:
    """Fixed split with the largest integrated pair count over the pass pair.

    Exhaustive over integer splits: the dual rate is summed over all
    co-visible samples for every m_A and the best total wins (ties broken
    toward the smaller m_A).  A split picked at the single best instant can
    lose integrated pairs on pairs with asymmetric visibility, so the
    search integrates rather than sampling a peak.  Raises
    :class:`NoOverlapError` when the legs are never co-visible.
    """
    if params_b is None:
        params_b = params_a
    _check_aligned(profile_a, profile_b)
    both = np.flatnonzero(
        profile_a.visible & profile_b.visible & (profile_a.eta > 0) & (profile_b.eta > 0)
    )
    if both.size == 0:
        raise NoOverlapError(
            f"stations {profile_a.station} and {profile_b.station} are never co-visible"
        )
    states = [
        (link_state_at(profile_a, int(i), params_a), link_state_at(profile_b, int(i), params_b))
        for i in both
    ]
    best_total = -1.0
    best: tuple[int, int] = (0, 0)
    for m_a in range(m_s + 1):
        total = 0.0
        for sa, sb in states:
            total += dual_rate(sa, sb, m_a, m_s - m_a, params_a, params_b)
        if total > best_total:
            best_total = total
            best = (m_a, m_s - m_a)
    return best


@dataclass(frozen=True)
class AllocationResult:
    """Per-sample memory splits and the rates they achieve over a pass pair.

    Real and integer splits follow the equal-rate optimum at co-visible
    samples.  Where only one leg is visible all slots go to that leg (pairs
    can still be banked there); where neither is visible the split falls
    back to an even division.  Rates are zero outside co-visibility.
    ``static_split`` and ``static_rate`` describe the best fixed split of
    the same pass pair.
    """

    t_s: np.ndarray
    m_A_real: np.ndarray
    m_B_real: np.ndarray
    m_A_int: np.ndarray
    m_B_int: np.ndarray
    rate_real: np.ndarray
    rate_int: np.ndarray
    static_split: tuple[int, int]
    static_rate: np.ndarray

    def __post_init__(self) -> None:
        m_s = self.static_split[0] + self.static_split[1]
        if np.any(np.abs(self.m_A_real + self.m_B_real - m_s) > 1e-9):
            raise ConfigError("real splits must sum to m_s at every sample")
        if np.any(self.m_A_int + self.m_B_int != m_s):
            raise ConfigError("integer splits must sum to m_s at every sample")
        if np.any(self.rate_int > self.rate_real + 1e-9):
            raise ConfigError("integer-split rate exceeds real-split rate")

    @property
    def m_s(self) -> int:
        return int(self.static_split[0] + self.static_split[1])

    def to_json_dict(self) -> dict:
        """Summary with fields named exactly as the dataclass fields."""
        return {
            "t_s": self.t_s.tolist(),
            "m_A_real": self.m_A_real.tolist(),
            "m_B_real": self.m_B_real.tolist(),
            "m_A_int": self.m_A_int.tolist(),
            "m_B_int": self.m_B_int.tolist(),
            "rate_real": self.rate_real.tolist(),
            "rate_int": self.rate_int.tolist(),
            "static_split": list(self.static_split),
            "static_rate": self.static_rate.tolist(),
        }


def allocation_series(
    profile_a: PassProfile,
    profile_b: PassProfile,
    m_s: int,
    params_a: LinkParams,
    params_b: LinkParams | None = None,
) -> AllocationResult:
    """Evaluate real, integer, and static allocations at every sample.

    The integer series is what a dynamically re-allocating satellite would
    run (one re-evaluation per sample); the static series uses
    :func:`best_static_split`.  Single-visible samples put every slot on
    the visible leg; fully dark samples split evenly (integer series gives
    the extra slot to leg A).
    """
    if params_b is None:
        params_b = params_a
    if m_s < 2:
        raise ConfigError(f"allocation needs m_s >= 2: {m_s}")
    _check_aligned(profile_a, profile_b)
    n = profile_a.n_samples
    m_a_real = np.empty(n)
    m_a_int = np.empty(n, dtype=np.int64)
    rate_real = np.zeros(n)
    rate_int = np.zeros(n)
    static_rate = np.zeros(n)
    split = best_static_split(profile_a, profile_b, m_s, params_a, params_b)

    vis_a = profile_a.visible & (profile_a.eta > 0)
    vis_b = profile_b.visible & (profile_b.eta > 0)
    for i in range(n):
        if vis_a[i] and vis_b[i]:
            sa = link_state_at(profile_a, i, params_a)
            sb = link_state_at(profile_b, i, params_b)
            m_a_real[i] = allocate_real(sa, sb, m_s)[0]
            m_a_int[i] = allocate_int(sa, sb, m_s)[0]
            rate_real[i] = dual_rate(sa, sb, m_a_real[i], m_s - m_a_real[i], params_a, params_b)
            rate_int[i] = dual_rate(sa, sb, m_a_int[i], m_s - m_a_int[i], params_a, params_b)
            static_rate[i] = dual_rate(sa, sb, split[0], split[1], params_a, params_b)
        elif vis_a[i]:
            m_a_real[i] = float(m_s)
            m_a_int[i] = m_s
        elif vis_b[i]:
            m_a_real[i] = 0.0
            m_a_int[i] = 0
        else:
            m_a_real[i] = m_s / 2.0
            m_a_int[i] = m_s - m_s // 2
    return AllocationResult(
        t_s=profile_a.t_s.copy(),
        m_A_real=m_a_real,
        m_B_real=m_s - m_a_real,
        m_A_int=m_a_int,
        m_B_int=m_s - m_a_int,
        rate_real=rate_real,
        rate_int=rate_int,
        static_split=split,
        static_rate=static_rate,
    )


def rate_series(
    profile: PassProfile,
    params: LinkParams,
    use_drift_correction: bool = True,
) -> np.ndarray:
    """Analytic single-link rate at every sample; zero where not visible.

    With the drift correction the series is the corrected rate; without it
    the plain rate with N = m_sat.
    """
    out = np.zeros(profile.n_samples)
    for i in np.flatnonzero(profile.visible & (profile.eta > 0)):
        state = link_state_at(profile, int(i), params)
        if use_drift_correction:
            out[i] = corrected_rate(state, params)
        else:
            out[i] = single_link_rate(state, params.m_sat, params)
    return out


def write_rate_csv(
    destination,
    t_s: Iterable[float],
    rate: Iterable[float],
    m_a: Iterable[int] | None = None,
    m_b: Iterable[int] | None = None,
) -> None:
    """Write a rate series as ``t_s,rate_pairs_per_s[,m_A,m_B]`` CSV."""
    own = isinstance(destination, (str, bytes)) or hasattr(destination, "__fspath__")
    fh = open(destination, "w", encoding="utf-8", newline="\n") if own else destination
    try:
        with_m = m_a is not None and m_b is not None
        fh.write("t_s,rate_pairs_per_s,m_A,m_B\n" if with_m else "t_s,rate_pairs_per_s\n")
        if with_m:
            for t, r, a, b in zip(t_s, rate, m_a, m_b):
                fh.write(f"{t:.12g},{r:.12g},{int(a)},{int(b)}\n")
        else:
            for t, r in zip(t_s, rate):
                fh.write(f"{t:.12g},{r:.12g}\n")
    finally:
        if own:
            fh.close()
