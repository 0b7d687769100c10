"""Domain types and exact discrete-time plant dynamics.

Transformer hot-spot temperature, per-EV state of charge, and commercial
hub energy models.  Everything here is the *plant truth*: no relaxation,
no clamping of the temperature state.  Units follow the mixed convention
used throughout the package: transformer-side currents in kA, EV-side
charger currents in A (converted at the coupling constraint), SoC
dimensionless in [0, 1], hub energy in kWh, temperatures in degrees C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TransformerParams",
    "TransformerState",
    "AmbientProfile",
    "BackgroundDemand",
    "EvParams",
    "EvState",
    "HubVehicle",
    "HubSpec",
    "HubTrajectories",
    "HubState",
    "xfrm_step",
    "ev_step",
    "hub_trajectories",
    "hub_step",
]

_REL_TOL = 1e-9


def _require_finite(name, *values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name}: non-finite value {v!r}")


@dataclass(frozen=True)
class TransformerParams:
    """Thermal coefficients and ratings of the substation transformer.

    tau, rho are the exact-discretization decay/coupling factors
    (rho must equal 1 - tau), gamma the ohmic-losses-to-temperature gain
    in degC/kA^2, c_offset the constant radiation term already folded
    into ambient profiles, i_cap the upper bound on total secondary
    current (kA) defining the PWL domain, n_segments the PWL segment
    count, ratio_r the primary/secondary voltage ratio.
    """

    tau: float
    gamma: float
    rho: float
    c_offset: float
    t_max: float
    ratio_r: float
    i_cap: float
    n_segments: int

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must be in (0,1), got {self.tau}")
        if abs(self.rho - (1.0 - self.tau)) > 1e-12:
            raise ValueError(f"rho must equal 1 - tau, got rho={self.rho}, tau={self.tau}")
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.t_max <= 0.0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if not 0.0 < self.ratio_r <= 1.0:
            raise ValueError(f"ratio_r must be in (0,1], got {self.ratio_r}")
        if self.i_cap <= 0.0:
            raise ValueError(f"i_cap must be positive, got {self.i_cap}")
        if self.n_segments < 1:
            raise ValueError(f"n_segments must be >= 1, got {self.n_segments}")


@dataclass
class TransformerState:
    """Hot-spot temperature in degC.  Exceeding t_max is flagged, never clamped."""

    temp: float

    def __post_init__(self):
        _require_finite("TransformerState.temp", self.temp)


@dataclass(frozen=True)
class AmbientProfile:
    """Per-timestep ambient temperature T_a(k), degC, c_offset already included."""

    ta: np.ndarray

    def __post_init__(self):
        ta = np.asarray(self.ta, dtype=float)
        if not np.all(np.isfinite(ta)):
            raise ValueError("ambient profile has non-finite entries")
        object.__setattr__(self, "ta", ta)

    def __len__(self):
        return len(self.ta)


@dataclass(frozen=True)
class BackgroundDemand:
    """Per-timestep secondary background current i_d(k), kA, nonnegative."""

    i_d: np.ndarray

    def __post_init__(self):
        i_d = np.asarray(self.i_d, dtype=float)
        if not np.all(np.isfinite(i_d)):
            raise ValueError("background demand has non-finite entries")
        if np.any(i_d < 0.0):
            raise ValueError("background demand must be nonnegative")
        object.__setattr__(self, "i_d", i_d)

    def __len__(self):
        return len(self.i_d)


@dataclass(frozen=True)
class EvParams:
    """Per-EV charger limits, efficiency and owner QoS preferences.

    eta is the per-ampere per-step SoC gain alpha*V_sec*dt/beta; s_bar
    must be reached by timestep k_bar (absolute scenario time); q, r
    weight partial-SoC and charging-effort penalties.
    """

    i_max: float
    alpha: float
    beta: float
    eta: float
    s_bar: float
    k_bar: int
    q: float
    r: float
    ev_id: str = ""

    def __post_init__(self):
        if self.i_max <= 0.0:
            raise ValueError(f"i_max must be positive, got {self.i_max}")
        if self.eta <= 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.s_bar <= 1.0:
            raise ValueError(f"s_bar must be in [0,1], got {self.s_bar}")
        if self.k_bar < 0:
            raise ValueError(f"k_bar must be nonnegative, got {self.k_bar}")
        if self.q < 0.0 or self.r < 0.0:
            raise ValueError("objective weights q, r must be nonnegative")


@dataclass
class EvState:
    """State of charge, dimensionless in [0, 1]."""

    soc: float


@dataclass(frozen=True)
class HubVehicle:
    """One commercial vehicle's capacity, arrival/departure schedule and charger limit."""

    e_max: float
    s_arrive: float
    s_depart: float
    k_arrive: int
    k_depart: int
    i_max: float

    def __post_init__(self):
        if self.k_arrive >= self.k_depart:
            raise ValueError(
                f"vehicle window must satisfy k_arrive < k_depart, got "
                f"[{self.k_arrive}, {self.k_depart}]"
            )
        if not 0.0 <= self.s_arrive <= self.s_depart <= 1.0:
            raise ValueError(
                f"need 0 <= s_arrive <= s_depart <= 1, got "
                f"({self.s_arrive}, {self.s_depart})"
            )
        if self.e_max < 0.0 or self.i_max < 0.0:
            raise ValueError("e_max and i_max must be nonnegative")


@dataclass(frozen=True)
class HubSpec:
    """Vehicle roster plus hub-level efficiency and objective weights."""

    vehicles: tuple
    eta_h: float
    q_h: float
    r_h: float
    o_h: float
    hub_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        if self.eta_h <= 0.0:
            raise ValueError(f"eta_h must be positive, got {self.eta_h}")


@dataclass(frozen=True)
class HubTrajectories:
    """Time-varying hub envelopes built from vehicle arrivals/departures.

    e_arrive/e_depart are the energy injected/removed by arriving and
    departing vehicles; e_max and i_max are the parked-vehicle capacity
    and charger-limit sums; e_delta_max bounds the optional oversupply
    that departing vehicles can carry beyond their required SoC.
    """

    e_arrive: np.ndarray
    e_depart: np.ndarray
    e_max: np.ndarray
    e_delta_max: np.ndarray
    i_max: np.ndarray

    def __len__(self):
        return len(self.e_arrive)


@dataclass
class HubState:
    """Aggregate stored energy E_h(k), kWh."""

    energy: float


def xfrm_step(p: TransformerParams, temp: float, i_total: float, ta: float) -> float:
    """One step of the exact nonlinear hot-spot dynamics.

    T(k+1) = tau*T(k) + gamma*i_total^2 + rho*T_a(k), i_total in kA.
    This is the plant truth model; callers flag temp > t_max themselves.
    """
    _require_finite("xfrm_step", temp, i_total, ta)
    if i_total < 0.0:
        raise ValueError(f"i_total must be nonnegative, got {i_total}")
    return p.tau * temp + p.gamma * i_total * i_total + p.rho * ta


def ev_step(p: EvParams, soc: float, i: float, tol: float = 1e-6) -> float:
    """One step of the normalized charging dynamics: soc + eta*i.

    Does not clamp; feasibility is the optimizer's job.  Currents outside
    [0, i_max] beyond tol (relative to i_max) are rejected.
    """
    _require_finite("ev_step", soc, i)
    margin = tol * max(p.i_max, 1.0)
    if i < -margin or i > p.i_max + margin:
        raise ValueError(f"current {i} outside [0, {p.i_max}] beyond tolerance")
    return soc + p.eta * min(max(i, 0.0), p.i_max)


def hub_trajectories(spec: HubSpec, horizon: int) -> HubTrajectories:
    """Aggregate a hub's vehicle roster into per-timestep envelopes.

    Parked means k_arrive < k < k_depart (strict, per the set
    definitions); arrival energy lands at k = k_arrive, departure energy
    (required SoC) and the oversupply headroom leave at k = k_depart.
    """
    for v in spec.vehicles:
        if v.k_arrive < 0 or v.k_depart > horizon:
            raise ValueError(
                f"vehicle window [{v.k_arrive}, {v.k_depart}] outside horizon {horizon}"
            )
    e_arrive = np.zeros(horizon + 1)
    e_depart = np.zeros(horizon + 1)
    e_max = np.zeros(horizon + 1)
    e_delta_max = np.zeros(horizon + 1)
    i_max = np.zeros(horizon + 1)
    for v in spec.vehicles:
        e_arrive[v.k_arrive] += v.s_arrive * v.e_max
        e_depart[v.k_depart] += v.s_depart * v.e_max
        e_delta_max[v.k_depart] += (1.0 - v.s_depart) * v.e_max
        if v.k_depart > v.k_arrive + 1:
            e_max[v.k_arrive + 1 : v.k_depart] += v.e_max
            i_max[v.k_arrive + 1 : v.k_depart] += v.i_max
    return HubTrajectories(e_arrive, e_depart, e_max, e_delta_max, i_max)


def hub_step(
    eta_h: float,
    state: HubState,
    i: float,
    traj: HubTrajectories,
    e_delta: float,
    k: int,
    tol: float = 1e-6,
) -> HubState:
    """One step of the aggregate hub energy dynamics.

    E(k+1) = E(k) + eta_h*i + e_arrive(k) - (e_depart(k) + e_delta).
    Rejects currents/oversupply outside their envelopes and updates that
    would drive the stored energy negative (departure energy the hub
    never banked), all beyond tolerance.
    """
    _require_finite("hub_step", state.energy, i, e_delta)
    i_cap = traj.i_max[k]
    scale = max(i_cap, 1.0)
    if i < -tol * scale or i > i_cap + tol * scale:
        raise ValueError(f"hub current {i} outside [0, {i_cap}] at k={k}")
    ed_cap = traj.e_delta_max[k]
    e_scale = max(ed_cap, 1.0)
    if e_delta < -tol * e_scale or e_delta > ed_cap + tol * e_scale:
        raise ValueError(f"e_delta {e_delta} outside [0, {ed_cap}] at k={k}")
    nxt = (
        state.energy
        + eta_h * min(max(i, 0.0), i_cap)
        + traj.e_arrive[k]
        - (traj.e_depart[k] + min(max(e_delta, 0.0), ed_cap))
    )
    if nxt < -tol * max(abs(state.energy), 1.0):
        raise ValueError(
            f"hub energy would go negative ({nxt:.6g} kWh) at k={k}: "
            "departure energy exceeds stored energy"
        )
    return HubState(energy=max(nxt, 0.0))
