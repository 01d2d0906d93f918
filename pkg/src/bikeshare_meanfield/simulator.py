"""Exact event-driven simulation of the N-station bike sharing Markov chain.

The microscopic ground truth: N stations with integer bike counts, walking
customers with a remaining-walk budget, and riding bikes that bounce
persistently off full stations.  Event competition is exponential per event
class (outside arrivals at rate N*lambda, walk completions at rate
gamma * #walkers, ride completions at rate mu * #riding) with uniform
thinning to pick the individual, which is statistically exact for the
continuous-time chain.  Four independent, seeded random streams (event
timing, arrival routing, walk moves, ride moves) make runs bit-for-bit
reproducible, and trajectory sampling draws no randomness so enabling it
never perturbs the event sequence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .core import SystemParams
from .dynamics import OdeConfig, Trajectory, integrate
from .errors import ConfigError, EmptyMeasurementError, InvariantViolationError

_BLOCK = 1 << 14
_DEEP_CHECK_MASK = (1 << 16) - 1


class _Stream:
    """Buffered uniform/exponential draws from one independent PCG64 stream."""

    __slots__ = ("_gen", "_u", "_iu", "_e", "_ie")

    def __init__(self, seed_seq: np.random.SeedSequence):
        self._gen = np.random.Generator(np.random.PCG64(seed_seq))
        self._u = self._gen.random(_BLOCK).tolist()
        self._iu = 0
        self._e = self._gen.standard_exponential(_BLOCK).tolist()
        self._ie = 0

    def uniform(self) -> float:
        i = self._iu
        if i >= _BLOCK:
            self._u = self._gen.random(_BLOCK).tolist()
            i = 0
        self._iu = i + 1
        return self._u[i]

    def exponential(self) -> float:
        i = self._ie
        if i >= _BLOCK:
            self._e = self._gen.standard_exponential(_BLOCK).tolist()
            i = 0
        self._ie = i + 1
        return self._e[i]


class Walker(NamedTuple):
    """A customer walking between stations, with the walks they have left."""

    station: int
    walks_remaining: int


@dataclass(frozen=True)
class SimConfig:
    """One simulation run description.

    params           model constants (n_stations, capacities, rates)
    seed             64-bit seed; identical configs give identical reports
    t_warmup         time discarded before measurement starts
    t_measure        length of the measurement window (> 0)
    sample_interval  spacing of empirical-measure snapshots from t = 0;
                     None disables trajectory recording
    exclude_first_ride_origin
                     if set, a freshly rented bike never targets the station
                     it was rented from (default allows it; the difference
                     is O(1/N))
    """

    params: SystemParams
    seed: int
    t_measure: float
    t_warmup: float = 0.0
    sample_interval: float | None = None
    exclude_first_ride_origin: bool = False

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        if not self.t_measure > 0:
            raise ConfigError(f"t_measure must be positive, got {self.t_measure}")
        if self.t_warmup < 0:
            raise ConfigError(f"t_warmup must be nonnegative, got {self.t_warmup}")
        if self.sample_interval is not None and not self.sample_interval > 0:
            raise ConfigError(f"sample_interval must be positive, got {self.sample_interval}")

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        params = SystemParams.from_dict(data)
        if "seed" not in data or "t_measure" not in data:
            raise ConfigError("simulation config needs keys 'seed' and 't_measure'")
        return cls(
            params=params,
            seed=int(data["seed"]),
            t_measure=float(data["t_measure"]),
            t_warmup=float(data.get("t_warmup", 0.0)),
            sample_interval=(float(data["sample_interval"])
                             if data.get("sample_interval") is not None else None),
            exclude_first_ride_origin=bool(data.get("exclude_first_ride_origin", False)),
        )


@dataclass(frozen=True)
class SimState:
    """Full microscopic state at one instant."""

    station_bikes: list[int]
    walkers: list[Walker]
    riding: int
    clock: float

    def validate(self, params: SystemParams) -> None:
        """Check conservation, capacity and walker-budget invariants."""
        if len(self.station_bikes) != params.n_stations:
            raise InvariantViolationError("station count changed")
        if any(k < 0 or k > params.capacity_k for k in self.station_bikes):
            raise InvariantViolationError("station bike count out of [0, K]")
        total = sum(self.station_bikes) + self.riding
        expected = params.n_stations * params.capacity_c
        if total != expected:
            raise InvariantViolationError(
                f"bike conservation broken: {total} != {expected}"
            )
        if any(not 1 <= w.walks_remaining <= params.omega for w in self.walkers):
            raise InvariantViolationError("walker budget out of [1, omega]")


@dataclass(frozen=True)
class SimReport:
    """Measurement results of one run.

    time_avg_measure  time-averaged occupancy fractions over the window
    trajectory        empirical-measure snapshots from t = 0 (or None)
    joint_counts      time-weighted joint occupancy of stations 0 and 1
    event_counts      event totals (arrivals, rentals, abandonments,
                      walk_starts, re_rides, returns, ...)
    measured_time     length of the measurement window
    final_state       microscopic state at the end of the run
    config            the run description that produced this report
    """

    time_avg_measure: np.ndarray
    trajectory: Trajectory | None
    joint_counts: np.ndarray
    event_counts: dict
    measured_time: float
    final_state: SimState
    config: SimConfig

    def to_dict(self) -> dict:
        return {
            "params": self.config.params.to_dict(),
            "seed": self.config.seed,
            "t_warmup": self.config.t_warmup,
            "t_measure": self.config.t_measure,
            "measured_time": self.measured_time,
            "event_counts": dict(self.event_counts),
            "time_avg_measure": [float(v) for v in self.time_avg_measure],
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def simulate(config: SimConfig) -> SimReport:
    """Run the event-driven chain and return its measurement report.

    Rentals and returns are instantaneous state changes at arrival instants:
    an arriving customer rents immediately where a bike is available, starts
    walking (budget omega) where none is, or abandons if omega = 0; a walk
    completing at an empty station spends one unit of budget; a ride
    completing at a full station turns into another ride toward one of the
    other stations.  Bike conservation is asserted at every event.
    """
    p = config.params
    n = p.n_stations
    cap_k = p.capacity_k
    cap_c = p.capacity_c
    omega = p.omega
    gamma = p.gamma
    mu = p.mu
    arrival_rate = n * p.lam
    exclude_first = config.exclude_first_ride_origin

    root = np.random.SeedSequence(config.seed)
    s_time, s_arr, s_walk, s_ride = (_Stream(ss) for ss in root.spawn(4))
    time_exp = s_time.exponential
    time_uni = s_time.uniform
    arr_uni = s_arr.uniform
    walk_uni = s_walk.uniform
    ride_uni = s_ride.uniform

    bikes = [cap_c] * n
    counts = [0] * (cap_k + 1)
    counts[cap_c] = n
    parked = n * cap_c
    total_bikes = n * cap_c

    walker_station: list[int] = []
    walker_left: list[int] = []
    ride_excl: list[int] = []

    w0 = config.t_warmup
    horizon = config.t_warmup + config.t_measure
    acc = [0.0] * (cap_k + 1)
    mark = [0.0] * (cap_k + 1)
    joint = np.zeros((cap_k + 1, cap_k + 1))
    j0 = cap_c
    j1 = cap_c
    jmark = 0.0

    sampling = config.sample_interval is not None
    dt_s = config.sample_interval if sampling else 0.0
    sample_index = 0
    traj_times: list[float] = []
    traj_states: list[list[float]] = []

    arrivals = rentals = abandonments = walk_starts = 0
    re_rides = returns = walks_completed = walk_rentals = 0

    def flush_level(k: int, tn: float) -> None:
        m = mark[k]
        lo = m if m > w0 else w0
        if tn > lo:
            acc[k] += counts[k] * (tn - lo)
        mark[k] = tn

    def move_station(st: int, k_old: int, k_new: int, tn: float) -> None:
        nonlocal j0, j1, jmark
        flush_level(k_old, tn)
        flush_level(k_new, tn)
        counts[k_old] -= 1
        counts[k_new] += 1
        if st < 2:
            m = jmark
            lo = m if m > w0 else w0
            if tn > lo:
                joint[j0, j1] += tn - lo
            jmark = tn
            if st == 0:
                j0 = k_new
            else:
                j1 = k_new

    t = 0.0
    event_index = 0
    while True:
        n_walk = len(walker_left)
        n_ride = len(ride_excl)
        rate_walk = gamma * n_walk
        rate_ride = mu * n_ride
        total_rate = arrival_rate + rate_walk + rate_ride
        t_next = t + time_exp() / total_rate
        if sampling:
            # the state is constant on [t, t_next); on the final segment the
            # sample at exactly the horizon belongs to the current state too
            stop = t_next if t_next < horizon else horizon * (1.0 + 1e-15)
            s = sample_index * dt_s
            while s < stop:
                traj_times.append(s)
                traj_states.append([c / n for c in counts])
                sample_index += 1
                s = sample_index * dt_s
        if t_next >= horizon:
            break

        u = time_uni() * total_rate
        if u < arrival_rate:
            # outside arrival at a uniformly random station
            arrivals += 1
            i = int(arr_uni() * n)
            k = bikes[i]
            if k > 0:
                bikes[i] = k - 1
                parked -= 1
                move_station(i, k, k - 1, t_next)
                ride_excl.append(i if exclude_first else -1)
                rentals += 1
            elif omega > 0:
                walker_station.append(i)
                walker_left.append(omega)
                walk_starts += 1
            else:
                abandonments += 1
        elif u < arrival_rate + rate_walk:
            # one walker finishes a walk toward a uniformly random other station
            walks_completed += 1
            j = int(walk_uni() * n_walk)
            origin = walker_station[j]
            m = int(walk_uni() * (n - 1))
            d = m + 1 if m >= origin else m
            k = bikes[d]
            if k > 0:
                bikes[d] = k - 1
                parked -= 1
                move_station(d, k, k - 1, t_next)
                ride_excl.append(d if exclude_first else -1)
                rentals += 1
                walk_rentals += 1
                last = n_walk - 1
                if j != last:
                    walker_station[j] = walker_station[last]
                    walker_left[j] = walker_left[last]
                walker_station.pop()
                walker_left.pop()
            else:
                left = walker_left[j] - 1
                if left == 0:
                    abandonments += 1
                    last = n_walk - 1
                    if j != last:
                        walker_station[j] = walker_station[last]
                        walker_left[j] = walker_left[last]
                    walker_station.pop()
                    walker_left.pop()
                else:
                    walker_left[j] = left
                    walker_station[j] = d
        else:
            # one riding bike reaches its destination
            j = int(ride_uni() * n_ride)
            avoid = ride_excl[j]
            if avoid < 0:
                d = int(ride_uni() * n)
            else:
                m = int(ride_uni() * (n - 1))
                d = m + 1 if m >= avoid else m
            k = bikes[d]
            if k < cap_k:
                bikes[d] = k + 1
                parked += 1
                move_station(d, k, k + 1, t_next)
                last = n_ride - 1
                if j != last:
                    ride_excl[j] = ride_excl[last]
                ride_excl.pop()
                returns += 1
            else:
                # full station: persistent customer rides on, avoiding it
                re_rides += 1
                ride_excl[j] = d

        if parked + len(ride_excl) != total_bikes:
            raise InvariantViolationError(
                f"bike conservation broken at t={t_next:.6g}: "
                f"{parked} parked + {len(ride_excl)} riding != {total_bikes}"
            )
        event_index += 1
        if event_index & _DEEP_CHECK_MASK == 0:
            _deep_check(bikes, counts, parked, walker_left, omega, cap_k, n)
        t = t_next

    for k in range(cap_k + 1):
        flush_level(k, horizon)
    lo = jmark if jmark > w0 else w0
    if horizon > lo:
        joint[j0, j1] += horizon - lo

    _deep_check(bikes, counts, parked, walker_left, omega, cap_k, n)
    final_state = SimState(
        station_bikes=list(bikes),
        walkers=[Walker(s, w) for s, w in zip(walker_station, walker_left)],
        riding=len(ride_excl),
        clock=horizon,
    )
    final_state.validate(p)

    trajectory = None
    if sampling:
        trajectory = Trajectory(np.array(traj_times), np.array(traj_states))
    event_counts = {
        "arrivals": arrivals,
        "rentals": rentals,
        "abandonments": abandonments,
        "walk_starts": walk_starts,
        "re_rides": re_rides,
        "returns": returns,
        "walks_completed": walks_completed,
        "walk_rentals": walk_rentals,
        "walkers_in_flight": len(walker_left),
        "events": event_index,
    }
    return SimReport(
        time_avg_measure=np.array(acc) / (config.t_measure * n),
        trajectory=trajectory,
        joint_counts=joint,
        event_counts=event_counts,
        measured_time=config.t_measure,
        final_state=final_state,
        config=config,
    )


def _deep_check(bikes, counts, parked, walker_left, omega, cap_k, n) -> None:
    if sum(counts) != n:
        raise InvariantViolationError("occupancy histogram lost a station")
    if sum(k * c for k, c in enumerate(counts)) != parked:
        raise InvariantViolationError("occupancy histogram disagrees with parked total")
    if min(bikes) < 0 or max(bikes) > cap_k:
        raise InvariantViolationError("station bike count out of [0, K]")
    if sum(bikes) != parked:
        raise InvariantViolationError("per-station counts disagree with parked total")
    if walker_left and (min(walker_left) < 1 or max(walker_left) > omega):
        raise InvariantViolationError("walker budget out of [1, omega]")


def independence_statistic(report: SimReport) -> float:
    """Largest gap between the joint occupancy of two stations and the
    product of its marginals.

    Small values back the claim that distinct stations decouple as N grows.
    """
    total = float(report.joint_counts.sum())
    if total <= 0.0:
        raise EmptyMeasurementError("no joint occupancy was measured")
    joint = report.joint_counts / total
    m0 = joint.sum(axis=1)
    m1 = joint.sum(axis=0)
    return float(np.max(np.abs(joint - np.outer(m0, m1))))


def empirical_vs_ode(config: SimConfig) -> float:
    """Sup-over-time gap between the simulated empirical measure and the
    limiting ODE started from the same all-stations-at-C initial condition.

    Requires trajectory sampling; the gap is the max over sample times of
    the sup-norm distance, and is deterministic given the seed.
    """
    if config.sample_interval is None:
        raise ConfigError("empirical_vs_ode needs sample_interval set")
    report = simulate(config)
    params = config.params
    g = np.zeros(params.capacity_k + 1)
    g[params.capacity_c] = 1.0
    horizon = config.t_warmup + config.t_measure
    ode = integrate(OdeConfig(initial=g, t_end=horizon), params)
    sim_traj = report.trajectory
    ode_states = ode.at(sim_traj.times)
    return float(np.max(np.abs(sim_traj.states - ode_states)))


def replicate(config: SimConfig, seeds) -> list[SimReport]:
    """Independent replications of one configuration across several seeds."""
    return [simulate(replace(config, seed=int(s))) for s in seeds]
