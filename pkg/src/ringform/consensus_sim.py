"""Double-integrator consensus over the weighted ring.

Each agent obeys ``p' = v``, ``v' = -alpha L p - beta L v`` applied per
spatial coordinate.  The left kernel vector of ``L`` makes the weighted
velocity average a conserved quantity, which fixes the common velocity the
swarm settles on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError
from .ring_graph import WeightedLaplacian, left_null_vector
from .spectral import coupling_bound, k_threshold

#: Any state component beyond this magnitude aborts a simulation.
DIVERGENCE_GUARD = 1e12


@dataclass(frozen=True)
class CouplingGains:
    """Position/velocity coupling strengths plus the ring edge gain."""

    alpha: float
    beta: float
    k: float

    def __post_init__(self):
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"position coupling must be positive, got {self.alpha!r}")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValueError(f"velocity coupling must be positive, got {self.beta!r}")
        if not math.isfinite(self.k):
            raise ValueError(f"edge gain must be finite, got {self.k!r}")


def is_certified(gains: CouplingGains, m: int) -> bool:
    """True when ``k`` clears the threshold and ``beta^2/alpha`` clears the
    spectral bound, i.e. consensus is guaranteed."""
    if not gains.k > k_threshold(m):
        return False
    return gains.beta**2 / gains.alpha > coupling_bound(m, gains.k)


@dataclass
class SwarmState:
    """Stacked agent states at one instant: ``(N, d)`` positions/velocities."""

    t: float
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        if self.positions.shape != self.velocities.shape:
            raise ValueError(
                f"position block {self.positions.shape} and velocity block "
                f"{self.velocities.shape} disagree"
            )
        if self.positions.shape[1] not in (1, 2, 3):
            raise ValueError(f"spatial dimension must be 1, 2 or 3, got {self.positions.shape[1]}")


def closed_loop_matrix(lap: WeightedLaplacian, alpha: float, beta: float) -> np.ndarray:
    """The ``2N x 2N`` matrix ``[[0, I], [-alpha L, -beta L]]`` driving the
    stacked state ``[p; v]`` (one spatial coordinate)."""
    n = lap.n_agents
    mat = np.zeros((2 * n, 2 * n))
    mat[:n, n:] = np.eye(n)
    mat[n:, :n] = -alpha * lap.matrix
    mat[n:, n:] = -beta * lap.matrix
    return mat


def control_input(state: SwarmState, lap: WeightedLaplacian, gains: CouplingGains) -> np.ndarray:
    """Consensus accelerations ``u = -alpha L p - beta L v``, columnwise."""
    if state.positions.shape[0] != lap.n_agents:
        raise ValueError(
            f"state holds {state.positions.shape[0]} agents, Laplacian expects {lap.n_agents}"
        )
    return -gains.alpha * (lap.matrix @ state.positions) - gains.beta * (
        lap.matrix @ state.velocities
    )


def _check_finite(p, v, t):
    bound = max(np.abs(p).max(initial=0.0), np.abs(v).max(initial=0.0))
    if not (np.isfinite(p).all() and np.isfinite(v).all()) or bound > DIVERGENCE_GUARD:
        raise DivergenceError(t)


def simulate(initial: SwarmState, lap: WeightedLaplacian, gains: CouplingGains,
             dt: float, t_end: float, record_every: int = 1):
    """Fixed-step RK4 integration of the closed loop; returns the trajectory.

    Deterministic in its inputs.  States are recorded every
    ``record_every`` steps (the initial and final states always included).
    Divergence past :data:`DIVERGENCE_GUARD` raises
    :class:`~ringform.errors.DivergenceError` carrying the blow-up time.
    """
    if dt <= 0.0:
        raise ValueError(f"time step must be positive, got {dt!r}")
    if t_end < 0.0:
        raise ValueError(f"horizon must be nonnegative, got {t_end!r}")
    if record_every < 1:
        raise ValueError(f"record cadence must be >= 1, got {record_every!r}")

    lmat = lap.matrix
    a, b = gains.alpha, gains.beta

    def deriv(p, v):
        return v, -a * (lmat @ p) - b * (lmat @ v)

    p = np.array(initial.positions, dtype=float)
    v = np.array(initial.velocities, dtype=float)
    n_steps = int(round(t_end / dt))
    trajectory = [SwarmState(initial.t, p.copy(), v.copy())]
    for step in range(1, n_steps + 1):
        k1p, k1v = deriv(p, v)
        k2p, k2v = deriv(p + 0.5 * dt * k1p, v + 0.5 * dt * k1v)
        k3p, k3v = deriv(p + 0.5 * dt * k2p, v + 0.5 * dt * k2v)
        k4p, k4v = deriv(p + dt * k3p, v + dt * k3v)
        p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        v = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        t = initial.t + step * dt
        _check_finite(p, v, t)
        if step % record_every == 0 or step == n_steps:
            trajectory.append(SwarmState(t, p.copy(), v.copy()))
    return trajectory


def predict_final_velocity(initial_velocities, m: int, k: float) -> np.ndarray:
    """Consensus velocity ``w2 . v(0) / (m (2 + k))`` per spatial coordinate.

    Degenerate at ``k = -2`` where the weight total vanishes (that gain is
    below the stability threshold for every ``m`` anyway).
    """
    v0 = np.atleast_2d(np.asarray(initial_velocities, dtype=float))
    if k == -2.0:
        raise ZeroDivisionError("k = -2 makes the weighted velocity total degenerate")
    w2 = left_null_vector(m, k)
    if v0.shape[0] != w2.size:
        raise ValueError(f"expected {w2.size} agents, got {v0.shape[0]}")
    return (w2 @ v0) / (m * (2.0 + k))


def velocity_spread(state) -> float:
    """Largest distance from any agent's velocity to the swarm mean.

    Accepts a :class:`SwarmState` or a bare ``(N, d)`` velocity array.
    """
    v = np.atleast_2d(np.asarray(getattr(state, "velocities", state), dtype=float))
    dev = v - v.mean(axis=0)
    return float(np.linalg.norm(dev, axis=1).max())
