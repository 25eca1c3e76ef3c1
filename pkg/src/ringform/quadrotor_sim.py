"""Nonlinear quadrotor swarm under the cascaded formation controller.

Outer loop: the ring-consensus law on horizontal position errors relative to
the formation offsets, plus a PD altitude channel.  The commanded
acceleration is turned into a total thrust and reference roll/pitch (yaw
reference zero), which an inner per-axis PID tracks through the Euler-angle
rigid-body dynamics

    p' = v,   v' = (T/m) R e3 - g e3,   Theta' = W omega,   J omega' = tau.

Commanded accelerations are saturated into the achievable thrust cone before
reference extraction: the vertical demand is floored just above free fall
and the horizontal demand scaled to the tilt limit.  Without this shaping a
large transient commands more tilt than the attitude loop can deliver while
the unbounded thrust magnitude feeds the vertical channel, which is a
numerically explosive combination.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .consensus_sim import CouplingGains, is_certified, velocity_spread
from .errors import DivergenceError, PitchRangeError
from .ring_graph import WeightedLaplacian
from .spectral import laplacian_spectrum, quadratic_roots

DIVERGENCE_GUARD = 1e12
#: Pitch magnitude beyond this aborts: the Euler kinematics turn singular.
PITCH_LIMIT = math.pi / 2 - 1e-3
#: Attitude-error integral is clamped to this magnitude (anti-windup).
INTEGRAL_CLAMP = 1.0
#: Default reference tilt limit.
TILT_LIMIT_DEFAULT = math.pi / 3
#: Vertical acceleration demand is floored at this fraction of g above -g.
_UZ_FLOOR_FRACTION = 0.05


@dataclass(frozen=True)
class QuadrotorParams:
    """Rigid-body constants: mass, inertia matrix, gravity."""

    mass: float = 1.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.02, 0.02, 0.04]))
    gravity: float = 9.81

    def __post_init__(self):
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be positive, got {self.mass!r}")
        if not (self.gravity > 0.0 and math.isfinite(self.gravity)):
            raise ValueError(f"gravity must be positive, got {self.gravity!r}")
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.shape != (3, 3) or not np.allclose(inertia, inertia.T):
            raise ValueError("inertia must be a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(inertia).min() <= 0.0:
            raise ValueError("inertia must be positive definite")
        inertia.setflags(write=False)
        object.__setattr__(self, "inertia", inertia)

    @property
    def inertia_inv(self) -> np.ndarray:
        return np.linalg.inv(self.inertia)


@dataclass
class QuadrotorState:
    """Single-vehicle state: position, velocity, Euler angles, body rates."""

    p: np.ndarray
    v: np.ndarray
    theta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("p", "v", "theta", "omega"):
            vec = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if vec.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
            setattr(self, name, vec)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.theta, self.omega])


def stack_states(states) -> np.ndarray:
    """``(N, 12)`` array from a list of :class:`QuadrotorState` (or pass an
    array through unchanged)."""
    if isinstance(states, np.ndarray):
        arr = np.array(states, dtype=float)
    else:
        arr = np.stack([s.as_array() for s in states])
    if arr.ndim != 2 or arr.shape[1] != 12:
        raise ValueError(f"expected an (N, 12) state block, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class FormationSpec:
    """Horizontal formation offsets per agent plus the common altitude."""

    offsets: np.ndarray
    z_com: float

    def __post_init__(self):
        offs = np.atleast_2d(np.asarray(self.offsets, dtype=float))
        if offs.shape[1] != 2:
            raise ValueError("formation offsets must be (N, 2) horizontal positions")
        offs.setflags(write=False)
        object.__setattr__(self, "offsets", offs)
        if not math.isfinite(self.z_com):
            raise ValueError(f"z_com must be finite, got {self.z_com!r}")

    @classmethod
    def regular_polygon(cls, n_agents: int, radius: float, z_com: float) -> "FormationSpec":
        """Vertices of a regular polygon at angles ``2 pi (i-1) / N``."""
        ang = 2.0 * np.pi * np.arange(n_agents) / n_agents
        return cls(radius * np.stack([np.cos(ang), np.sin(ang)], axis=1), z_com)

    def d_star(self, i: int, j: int) -> np.ndarray:
        """Desired pairwise offset ``p*_i - p*_j`` (1-based indices)."""
        return self.offsets[i - 1] - self.offsets[j - 1]


@dataclass(frozen=True)
class CascadeGains:
    """Everything the cascade needs: consensus coupling, altitude PD,
    per-axis attitude PID, and the reference tilt limit."""

    coupling: CouplingGains
    kpz: float = 1.0
    kvz: float = 4.0
    attitude_kp: np.ndarray = field(default_factory=lambda: np.full(3, 36.0))
    attitude_kd: np.ndarray = field(default_factory=lambda: np.full(3, 12.0))
    attitude_ki: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tilt_limit: float = TILT_LIMIT_DEFAULT

    def __post_init__(self):
        if not (self.kpz > 0.0 and self.kvz > 0.0):
            raise ValueError("altitude gains must be positive")
        for name in ("attitude_kp", "attitude_kd", "attitude_ki"):
            vec = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (3,)).copy()
            if not np.isfinite(vec).all():
                raise ValueError(f"{name} must be finite")
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)
        if not 0.0 < self.tilt_limit < math.pi / 2:
            raise ValueError(f"tilt limit must lie in (0, pi/2), got {self.tilt_limit!r}")


def attitude_settling_rate(gains: CascadeGains) -> float:
    """Slowest decay rate of the linearized per-axis attitude loop."""
    slowest = math.inf
    for axis in range(3):
        kp = gains.attitude_kp[axis]
        kd = gains.attitude_kd[axis]
        ki = gains.attitude_ki[axis]
        if kp == 0.0 and kd == 0.0 and ki == 0.0:
            continue
        poly = [1.0, kd, kp, ki] if ki != 0.0 else [1.0, kd, kp]
        roots = np.roots(poly)
        slowest = min(slowest, float(np.abs(roots.real).min()))
    return slowest


def outer_loop_rate(coupling: CouplingGains, m: int) -> float:
    """Slowest decay rate among the nonzero consensus closed-loop modes."""
    spec = laplacian_spectrum(m, coupling.k)
    spec = np.delete(spec, np.argmin(np.abs(spec)))
    slowest = math.inf
    for mu in spec:
        r1, r2 = quadratic_roots(coupling.beta * mu, coupling.alpha * mu)
        slowest = min(slowest, abs(r1.real), abs(r2.real))
    return slowest


def timescale_ratio(gains: CascadeGains, m: int) -> float:
    """Inner-loop settling rate over the slowest outer-loop rate."""
    outer = outer_loop_rate(gains.coupling, m)
    if outer == 0.0:
        return math.inf
    return attitude_settling_rate(gains) / outer


def formation_control(states, lap: WeightedLaplacian, spec: FormationSpec,
                      gains: CascadeGains) -> np.ndarray:
    """Commanded accelerations: consensus on horizontal formation errors,
    PD stabilization of altitude.

    ``states`` is an ``(N, >=6)`` block whose first six columns are position
    and velocity.  Subtracting the formation offsets before applying the
    Laplacian is identical to the pairwise form with offsets
    ``d*_ij = p*_i - p*_j``.
    """
    arr = np.atleast_2d(np.asarray(states, dtype=float))
    if arr.shape[0] != lap.n_agents or arr.shape[1] < 6:
        raise ValueError(
            f"expected an ({lap.n_agents}, >=6) state block, got {arr.shape}"
        )
    pos, vel = arr[:, 0:3], arr[:, 3:6]
    err_xy = pos[:, :2] - spec.offsets
    u = np.empty((lap.n_agents, 3))
    lmat = lap.matrix
    alpha, beta = gains.coupling.alpha, gains.coupling.beta
    u[:, 0] = -alpha * (lmat @ err_xy[:, 0]) - beta * (lmat @ vel[:, 0])
    u[:, 1] = -alpha * (lmat @ err_xy[:, 1]) - beta * (lmat @ vel[:, 1])
    u[:, 2] = -gains.kpz * (pos[:, 2] - spec.z_com) - gains.kvz * vel[:, 2]
    return u


def saturate_command(u, tilt_limit: float, gravity: float) -> np.ndarray:
    """Project commanded accelerations into the achievable thrust cone.

    The vertical demand is floored slightly above free fall (thrust cannot
    pull downward) and the horizontal demand is scaled, direction preserved,
    so the implied tilt stays within ``tilt_limit``.  Keeps the extracted
    references consistent with the thrust magnitude.
    """
    cmd = np.atleast_2d(np.asarray(u, dtype=float)).copy()
    floor = _UZ_FLOOR_FRACTION * gravity
    uzg = np.maximum(cmd[:, 2] + gravity, floor)
    horiz = np.hypot(cmd[:, 0], cmd[:, 1])
    scale = np.minimum(1.0, math.tan(tilt_limit) * uzg / np.maximum(horiz, 1e-12))
    cmd[:, 0] *= scale
    cmd[:, 1] *= scale
    cmd[:, 2] = uzg - gravity
    return cmd.reshape(np.shape(u))


def thrust_attitude_refs(u, params: QuadrotorParams, psi_d: float = 0.0,
                         tilt_limit: float = TILT_LIMIT_DEFAULT):
    """Thrust magnitude and reference attitude realizing acceleration ``u``.

    ``T = m sqrt(ux^2 + uy^2 + (uz + g)^2)``; the roll reference comes from
    ``arcsin`` of the lateral component (argument clipped to [-1, 1]) and
    the pitch reference from the longitudinal/vertical ratio.  Both angles
    are clamped to ``tilt_limit``.  A zero-thrust command (free fall) is
    degenerate and returns the hover attitude with ``T = 0``.

    Accepts a single 3-vector or an ``(N, 3)`` batch; returns
    ``(T, phi_d, theta_d, psi_d)`` with matching scalar/array shapes.
    """
    cmd = np.atleast_2d(np.asarray(u, dtype=float))
    single = np.ndim(u) == 1
    if cmd.shape[1] != 3 or not np.isfinite(cmd).all():
        raise ValueError("commanded acceleration must be finite 3-vectors")
    g = params.gravity
    ux, uy, uzg = cmd[:, 0], cmd[:, 1], cmd[:, 2] + g
    thrust = params.mass * np.sqrt(ux**2 + uy**2 + uzg**2)
    safe = np.where(thrust > 0.0, thrust, 1.0)
    sin_phi = params.mass * (ux * math.sin(psi_d) - uy * math.cos(psi_d)) / safe
    phi = np.arcsin(np.clip(sin_phi, -1.0, 1.0))
    theta = np.arctan2(ux * math.cos(psi_d) + uy * math.sin(psi_d), uzg)
    phi = np.where(thrust > 0.0, np.clip(phi, -tilt_limit, tilt_limit), 0.0)
    theta = np.where(thrust > 0.0, np.clip(theta, -tilt_limit, tilt_limit), 0.0)
    psi = np.full_like(phi, psi_d)
    if single:
        return float(thrust[0]), float(phi[0]), float(theta[0]), float(psi[0])
    return thrust, phi, theta, psi


def attitude_controller(theta, omega, refs, gains: CascadeGains,
                        params: QuadrotorParams, integral_error=None) -> np.ndarray:
    """Per-axis PID torque ``J (Kp e + Ki clamp(xi) - Kd omega)``.

    ``integral_error`` is the accumulated attitude error (clamped to
    +-1 rad s before use); omitted, the integral contribution is zero.
    """
    th = np.atleast_2d(np.asarray(theta, dtype=float))
    om = np.atleast_2d(np.asarray(omega, dtype=float))
    rf = np.atleast_2d(np.asarray(refs, dtype=float))
    err = rf - th
    acc = gains.attitude_kp * err - gains.attitude_kd * om
    if integral_error is not None:
        xi = np.clip(np.atleast_2d(np.asarray(integral_error, dtype=float)),
                     -INTEGRAL_CLAMP, INTEGRAL_CLAMP)
        acc = acc + gains.attitude_ki * xi
    torque = acc @ params.inertia.T
    return torque.reshape(np.shape(theta))


def rotation_matrix(phi, theta, psi) -> np.ndarray:
    """Body-to-inertial rotation ``Rz(psi) Ry(theta) Rx(phi)``; broadcasts."""
    phi, theta, psi = np.broadcast_arrays(phi, theta, psi)
    cph, sph = np.cos(phi), np.sin(phi)
    cth, sth = np.cos(theta), np.sin(theta)
    cps, sps = np.cos(psi), np.sin(psi)
    rot = np.empty(np.shape(phi) + (3, 3))
    rot[..., 0, 0] = cps * cth
    rot[..., 0, 1] = cps * sth * sph - sps * cph
    rot[..., 0, 2] = cps * sth * cph + sps * sph
    rot[..., 1, 0] = sps * cth
    rot[..., 1, 1] = sps * sth * sph + cps * cph
    rot[..., 1, 2] = sps * sth * cph - cps * sph
    rot[..., 2, 0] = -sth
    rot[..., 2, 1] = cth * sph
    rot[..., 2, 2] = cth * cph
    return rot


def euler_rate_matrix(phi, theta) -> np.ndarray:
    """Map from body rates to Euler-angle rates; singular at |theta| = pi/2."""
    phi, theta = np.broadcast_arrays(phi, theta)
    cph, sph = np.cos(phi), np.sin(phi)
    tth, cth = np.tan(theta), np.cos(theta)
    w = np.zeros(np.shape(phi) + (3, 3))
    w[..., 0, 0] = 1.0
    w[..., 0, 1] = tth * sph
    w[..., 0, 2] = tth * cph
    w[..., 1, 1] = cph
    w[..., 1, 2] = -sph
    w[..., 2, 1] = sph / cth
    w[..., 2, 2] = cph / cth
    return w


def dynamics_derivative(state, thrust, torque, params: QuadrotorParams) -> np.ndarray:
    """Rigid-body state derivative for packed ``[p, v, Theta, omega]`` rows."""
    arr = np.atleast_2d(np.asarray(state, dtype=float))
    thr = np.atleast_1d(np.asarray(thrust, dtype=float))
    tq = np.atleast_2d(np.asarray(torque, dtype=float))
    theta_pitch = arr[:, 7]
    if np.abs(theta_pitch).max() >= PITCH_LIMIT:
        worst = theta_pitch[np.abs(theta_pitch).argmax()]
        raise PitchRangeError(math.nan, worst)
    phi, pitch, psi = arr[:, 6], arr[:, 7], arr[:, 8]
    e3_dir = rotation_matrix(phi, pitch, psi)[..., :, 2]
    acc = (thr / params.mass)[:, None] * e3_dir
    acc[:, 2] -= params.gravity
    w = euler_rate_matrix(phi, pitch)
    dtheta = np.einsum("nij,nj->ni", w, arr[:, 9:12])
    domega = tq @ params.inertia_inv.T
    out = np.concatenate([arr[:, 3:6], acc, dtheta, domega], axis=1)
    return out.reshape(np.shape(state))


@dataclass
class QuadTrajectory:
    """Recorded swarm history: times, packed states, thrusts, attitude refs."""

    times: np.ndarray
    states: np.ndarray          # (T, N, 12)
    thrusts: np.ndarray         # (T, N)
    attitude_refs: np.ndarray   # (T, N, 3)


def simulate_swarm(initial_states, lap: WeightedLaplacian, spec: FormationSpec,
                   gains: CascadeGains, params: QuadrotorParams,
                   dt: float, t_end: float, record_every: int = 10,
                   trim_attitude: bool = False) -> QuadTrajectory:
    """Fixed-step RK4 run of the full cascade; deterministic.

    Control inputs are recomputed at every integrator stage.  With
    ``trim_attitude`` the vehicles start already oriented at their initial
    commanded attitude instead of level.  Warns when the coupling gains are
    not certified for the topology or the attitude loop is not at least ten
    times faster than the slowest outer mode.
    """
    if dt <= 0.0:
        raise ValueError(f"time step must be positive, got {dt!r}")
    if t_end < 0.0:
        raise ValueError(f"horizon must be nonnegative, got {t_end!r}")
    if record_every < 1:
        raise ValueError(f"record cadence must be >= 1, got {record_every!r}")
    arr12 = stack_states(initial_states)
    n = lap.n_agents
    if arr12.shape[0] != n:
        raise ValueError(f"expected {n} vehicles, got {arr12.shape[0]}")
    if spec.offsets.shape[0] != n:
        raise ValueError(f"formation spec covers {spec.offsets.shape[0]} agents, expected {n}")

    m = lap.topology.m
    if not is_certified(gains.coupling, m):
        warnings.warn(
            "coupling gains are not certified for this topology; "
            "consensus is not guaranteed", stacklevel=2)
    ratio = timescale_ratio(gains, m)
    if ratio < 10.0:
        warnings.warn(
            f"attitude loop is only {ratio:.2f}x faster than the slowest outer "
            "mode (want >= 10x); the double-integrator abstraction may be poor",
            stacklevel=2)

    def stage_controls(full):
        cmd = saturate_command(
            formation_control(full, lap, spec, gains), gains.tilt_limit, params.gravity)
        thrust, phi_d, theta_d, psi_d = thrust_attitude_refs(
            cmd, params, tilt_limit=gains.tilt_limit)
        refs = np.stack([phi_d, theta_d, psi_d], axis=1)
        torque = attitude_controller(full[:, 6:9], full[:, 9:12], refs, gains,
                                     params, integral_error=full[:, 12:15])
        return thrust, refs, torque

    def deriv(full):
        thrust, refs, torque = stage_controls(full)
        base = dynamics_derivative(full[:, :12], thrust, torque, params)
        return np.concatenate([base, refs - full[:, 6:9]], axis=1), thrust, refs

    state = np.concatenate([arr12, np.zeros((n, 3))], axis=1)
    if trim_attitude:
        _, refs0, _ = stage_controls(state)
        state[:, 6:8] = refs0[:, 0:2]

    times, states, thrusts, all_refs = [], [], [], []

    def record(t, full):
        thrust, refs, _ = stage_controls(full)
        times.append(t)
        states.append(full[:, :12].copy())
        thrusts.append(np.atleast_1d(thrust).copy())
        all_refs.append(refs.copy())

    record(0.0, state)
    n_steps = int(round(t_end / dt))
    for step in range(1, n_steps + 1):
        t = step * dt
        try:
            k1, _, _ = deriv(state)
            k2, _, _ = deriv(state + 0.5 * dt * k1)
            k3, _, _ = deriv(state + 0.5 * dt * k2)
            k4, _, _ = deriv(state + dt * k3)
        except PitchRangeError as exc:
            raise PitchRangeError(t, exc.theta) from None
        state = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        state[:, 12:15] = np.clip(state[:, 12:15], -INTEGRAL_CLAMP, INTEGRAL_CLAMP)
        if not np.isfinite(state).all() or np.abs(state).max() > DIVERGENCE_GUARD:
            raise DivergenceError(t)
        if np.abs(state[:, 7]).max() >= PITCH_LIMIT:
            worst = state[:, 7][np.abs(state[:, 7]).argmax()]
            raise PitchRangeError(t, worst)
        if step % record_every == 0 or step == n_steps:
            record(t, state)
    return QuadTrajectory(np.array(times), np.stack(states),
                          np.stack(thrusts), np.stack(all_refs))


@dataclass
class FormationMetrics:
    """Per-sample formation quality measures along a trajectory."""

    times: np.ndarray
    formation_error: np.ndarray
    altitude_error: np.ndarray
    velocity_spread: np.ndarray
    vz_max: np.ndarray
    attitude_error: np.ndarray


def formation_metrics(traj: QuadTrajectory, spec: FormationSpec) -> FormationMetrics:
    """Centroid-relative formation error, altitude error, velocity spread,
    peak vertical speed, and attitude tracking error at each sample."""
    nsamp = traj.times.size
    ferr = np.empty(nsamp)
    aerr = np.empty(nsamp)
    spread = np.empty(nsamp)
    vzmax = np.empty(nsamp)
    att = np.empty(nsamp)
    target = spec.offsets - spec.offsets.mean(axis=0)
    for i in range(nsamp):
        st = traj.states[i]
        horiz = st[:, 0:2]
        rel = horiz - horiz.mean(axis=0)
        ferr[i] = np.linalg.norm(rel - target, axis=1).max()
        aerr[i] = np.abs(st[:, 2] - spec.z_com).max()
        spread[i] = velocity_spread(st[:, 3:6])
        vzmax[i] = np.abs(st[:, 5]).max()
        att[i] = np.abs(traj.attitude_refs[i] - st[:, 6:9]).max()
    return FormationMetrics(traj.times.copy(), ferr, aerr, spread, vzmax, att)
