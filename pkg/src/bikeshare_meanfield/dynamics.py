"""Deterministic dynamics of the occupancy-fraction vector.

The expected fraction of stations holding k bikes evolves by a first-order
ODE system dy/dt = y V_y, where V_y is the tridiagonal generator built from
the occupancy-dependent birth/death rates.  This module integrates both the
finite-N system (level-dependent birth rates) and its infinite-population
limit with a classical fixed-step fourth-order scheme, keeping the state on
the probability simplex, and provides the drift Jacobian and the analytic
bound on its norm used to certify Lipschitz continuity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    SystemParams,
    _rates_arrays,
    finite_arrival_rates,
    finite_service_rate,
    fraction_vector,
)
from .errors import ConfigError, DomainExitError, StepInstabilityError

#: per-step budget for the clamp-and-renormalize simplex repair
STEP_REPAIR_BUDGET = 1e-7


def default_step(params: SystemParams) -> float:
    """Fixed step size keeping the stage moves small against the total rate scale."""
    return min(0.01, 0.1 / (params.lam + params.mu + params.gamma))


@dataclass(frozen=True)
class OdeConfig:
    """Integration run description.

    initial          starting fraction vector (must sum to 1)
    t_end            requested horizon
    step             fixed step size; None picks ``default_step``
    stationarity_tol stop early once the sup-norm of the drift falls below this
    max_time         hard cap on the integration horizon
    """

    initial: np.ndarray
    t_end: float
    step: float | None = None
    stationarity_tol: float = 1e-10
    max_time: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "initial", fraction_vector(self.initial))
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.step is not None and not 0 < self.step <= self.t_end:
            raise ConfigError(f"step must lie in (0, t_end], got {self.step}")
        if not self.stationarity_tol > 0:
            raise ConfigError("stationarity_tol must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution path: times[i] maps to states[i]."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "states", np.asarray(self.states, dtype=float))
        if self.times.ndim != 1 or self.states.shape[0] != self.times.size:
            raise ConfigError("times and states must have matching lengths")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ConfigError("times must be strictly increasing")

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    def at(self, times) -> np.ndarray:
        """States linearly interpolated at the requested times."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        cols = [np.interp(times, self.times, self.states[:, j])
                for j in range(self.states.shape[1])]
        return np.column_stack(cols)

    def to_csv(self, path, params: SystemParams | None = None) -> None:
        """Write "t,y0,...,yK" rows at full double precision (17 digits)."""
        k = self.states.shape[1] - 1
        header = "t," + ",".join(f"y{i}" for i in range(k + 1))
        with open(path, "w", encoding="utf-8") as fh:
            if params is not None:
                import json

                fh.write(f"# params: {json.dumps(params.to_dict(), sort_keys=True)}\n")
            fh.write(header + "\n")
            for t, row in zip(self.times, self.states):
                fh.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def _drift_limiting_arrays(y, params: SystemParams) -> np.ndarray:
    """Vectorized limiting drift; ``y`` has shape (..., K+1)."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        a, b = _rates_arrays(y, params, check=True)
        a = float(a)
        b = float(b)
        f = np.empty_like(y)
        f[0] = -a * y[0] + b * y[1]
        np.multiply(y[:-2] - y[1:-1], a, out=f[1:-1])
        f[1:-1] += b * (y[2:] - y[1:-1])
        f[-1] = a * y[-2] - b * y[-1]
        return f
    a, b = _rates_arrays(y, params, check=True)
    a = np.asarray(a)[..., None]
    b = np.asarray(b)[..., None]
    f = np.empty_like(y)
    f[..., 0] = (-a * y[..., :1] + b * y[..., 1:2])[..., 0]
    f[..., 1:-1] = a * (y[..., :-2] - y[..., 1:-1]) + b * (y[..., 2:] - y[..., 1:-1])
    f[..., -1] = (a * y[..., -2:-1] - b * y[..., -1:])[..., 0]
    return f


def drift_limiting(y, params: SystemParams) -> np.ndarray:
    """Time derivative y V_y of the limiting occupancy fractions at y.

    Components sum to zero (the generator is conservative).
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ConfigError("drift_limiting expects a single fraction vector")
    return _drift_limiting_arrays(y, params)


def drift_finite_n(y, params: SystemParams) -> np.ndarray:
    """Time derivative of the N-station occupancy fractions at y.

    Uses the level-dependent birth rates (own-fleet term for levels below C)
    and the level-independent death rate; converges to ``drift_limiting`` as
    N grows.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ConfigError("drift_finite_n expects a single fraction vector")
    xi = finite_arrival_rates(y, params)
    eta = finite_service_rate(y, params)
    f = np.empty_like(y)
    f[0] = -xi[0] * y[0] + eta * y[1]
    f[1:-1] = xi[:-1] * y[:-2] - (xi[1:] + eta) * y[1:-1] + eta * y[2:]
    f[-1] = xi[-1] * y[-2] - eta * y[-1]
    return f


def integrate(config: OdeConfig, params: SystemParams, finite_n: bool = False) -> Trajectory:
    """Fixed-step classical RK4 integration of the chosen drift.

    After every step the state is clamped at zero and renormalized to sum
    one; a repair larger than ``STEP_REPAIR_BUDGET`` aborts with
    ``StepInstabilityError``.  Leaving the assumed domain (y0 or y_K above
    1 - delta) raises ``DomainExitError`` with the exit time.  Integration
    stops early once the drift sup-norm falls below the stationarity
    tolerance.
    """
    drift = drift_finite_n if finite_n else drift_limiting
    y = config.initial.copy()
    if y.size != params.capacity_k + 1:
        raise ConfigError(
            f"initial vector has length {y.size}, expected {params.capacity_k + 1}"
        )
    h = config.step if config.step is not None else default_step(params)
    horizon = min(config.t_end, config.max_time)
    bound = 1.0 - params.delta

    def check_domain(state, time):
        if state[0] > bound or state[-1] > bound:
            raise DomainExitError(
                f"trajectory left the assumed domain at t={time:.6g} "
                f"(y0={state[0]:.6g}, yK={state[-1]:.6g}, bound={bound:.6g})",
                time=time,
            )

    check_domain(y, 0.0)
    times = [0.0]
    states = [y.copy()]
    t = 0.0
    step_index = 0
    while t < horizon * (1.0 - 1e-15):
        t_next = min((step_index + 1) * h, horizon)
        hs = t_next - t
        k1 = drift(y, params)
        k2 = drift(y + 0.5 * hs * k1, params)
        k3 = drift(y + 0.5 * hs * k2, params)
        k4 = drift(y + hs * k3, params)
        raw = y + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        repaired = np.maximum(raw, 0.0)
        repaired /= repaired.sum()
        correction = float(np.max(np.abs(repaired - raw)))
        if correction > STEP_REPAIR_BUDGET:
            raise StepInstabilityError(
                f"simplex repair {correction:.3e} exceeded budget "
                f"{STEP_REPAIR_BUDGET:.1e} at t={t_next:.6g}; reduce the step",
                time=t_next,
                correction=correction,
            )
        y = repaired
        t = t_next
        step_index += 1
        check_domain(y, t)
        times.append(t)
        states.append(y.copy())
        if float(np.max(np.abs(drift(y, params)))) < config.stationarity_tol:
            break
    return Trajectory(np.array(times), np.array(states))


def jacobian_fd(y, params: SystemParams, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the limiting drift at y.

    Entry (i, j) is the derivative of drift component j with respect to
    y_i.  Meant for bound checks and tests, not for stepping.
    """
    if not 1e-8 <= h <= 1e-4:
        raise ConfigError(f"finite-difference step must lie in [1e-8, 1e-4], got {h}")
    y = np.asarray(y, dtype=float)
    n = y.size
    pts = np.vstack([np.tile(y, (n, 1)) + h * np.eye(n),
                     np.tile(y, (n, 1)) - h * np.eye(n)])
    f = _drift_limiting_arrays(pts, params)
    return (f[:n] - f[n:]) / (2.0 * h)


def column_sum_norm(matrix: np.ndarray) -> float:
    """Matrix norm max_j sum_i |m_ij| (largest column absolute sum)."""
    return float(np.max(np.abs(matrix).sum(axis=0)))


def lipschitz_bound(params: SystemParams) -> float:
    """Analytic bound on the column-sum norm of the drift Jacobian.

    Valid on the restricted domain where the empty and full fractions stay
    below 1 - delta:
    2*lambda + gamma*omega*(omega+5)/2 + (mu/delta)*((1 + 1/delta)*C + K*(K+1)/2).
    """
    c = params.capacity_c
    k = params.capacity_k
    return (
        2.0 * params.lam
        + params.gamma * params.omega * (params.omega + 5) / 2.0
        + (params.mu / params.delta)
        * ((1.0 + 1.0 / params.delta) * c + k * (k + 1) / 2.0)
    )


def weighted_sup_distance(x, y) -> float:
    """sup_k |x_k - y_k| / (k + 1); at most 1 for two points on the simplex."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ConfigError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.max(np.abs(x - y) / (np.arange(x.size) + 1.0)))


def sample_domain_points(
    params: SystemParams,
    n: int,
    rng: np.random.Generator,
    margin: float = 1e-3,
    max_batches: int = 2000,
) -> np.ndarray:
    """Random simplex points inside the model's valid domain.

    Rejection-samples Dirichlet(1, ..., 1) points until ``n`` satisfy
    y0, y_K <= 1 - delta - margin and mean parked bikes <= C - margin (so
    the drift and its finite differences are defined at every returned
    point).  Raises ``ConfigError`` if the acceptance rate is hopeless for
    these parameters.
    """
    k = params.capacity_k
    bound = 1.0 - params.delta - margin
    levels = np.arange(k + 1, dtype=float)
    out = []
    have = 0
    for _ in range(max_batches):
        batch = rng.dirichlet(np.ones(k + 1), size=max(4 * n, 256))
        ok = (
            (batch[:, 0] <= bound)
            & (batch[:, -1] <= bound)
            & (batch @ levels <= params.capacity_c - margin)
        )
        good = batch[ok]
        if good.size:
            out.append(good)
            have += good.shape[0]
        if have >= n:
            return np.vstack(out)[:n]
    raise ConfigError(
        "could not sample the valid domain for these parameters "
        f"(C={params.capacity_c}, K={params.capacity_k}); acceptance too low"
    )
