"""Line-oriented scenario configuration.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored.  Vector values are comma-separated reals.  Per-agent initial
conditions use ``agent.<i>.p0`` / ``agent.<i>.v0`` with 1-based ``i``;
either every agent is listed or none (randomized runs seed their draws from
the ``RINGFORM_SEED`` environment variable).  ``expect.<name>`` keys embed
regression assertions that the CLI checks after a run.

Parsing validates everything it can and reports all problems at once, each
tagged with its line number.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

ENV_SEED = "RINGFORM_SEED"

_SCALAR_KEYS = {
    "m", "k", "alpha", "beta", "kpz", "kvz", "tilt_max", "dt", "t_end",
    "record_every", "z_com", "formation.radius", "modified_agent", "delta",
    "init.position_scale", "init.velocity_scale",
}
_VECTOR_KEYS = {"attitude_kp", "attitude_kd", "attitude_ki", "target_vf",
                "delta_candidates"}
_BOOL_KEYS = {"init.random", "trim_attitude"}


@dataclass
class ScenarioConfig:
    """Validated scenario parameters with documented defaults applied."""

    m: int
    k: float
    alpha: float = 1.0
    beta: float = 6.0
    kpz: float = 1.0
    kvz: float = 4.0
    attitude_kp: np.ndarray = field(default_factory=lambda: np.full(3, 36.0))
    attitude_kd: np.ndarray = field(default_factory=lambda: np.full(3, 12.0))
    attitude_ki: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tilt_max: float = math.pi / 3
    dt: float | None = None          # resolved per subcommand: 0.01 DI, 0.001 quad
    t_end: float = 100.0
    record_every: int = 10
    z_com: float = 0.0
    formation_radius: float | None = None
    formation_offsets: np.ndarray | None = None
    positions: np.ndarray | None = None   # (N, 3)
    velocities: np.ndarray | None = None  # (N, 3)
    init_random: bool = False
    init_position_scale: float = 10.0
    init_velocity_scale: float = 5.0
    target_vf: np.ndarray | None = None
    modified_agent: int | None = None
    delta: float | None = None
    delta_candidates: np.ndarray | None = None
    trim_attitude: bool = False
    expectations: dict = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return 2 * self.m

    def resolved_dt(self, quadrotor: bool) -> float:
        if self.dt is not None:
            return self.dt
        return 0.001 if quadrotor else 0.01

    def initial_states(self, seed: int | None = None):
        """Initial ``(N, 3)`` positions and velocities.

        Explicit agent blocks win; otherwise random draws (uniform in
        ``+-scale``) when ``init.random`` is set, else zeros.  ``seed``
        defaults to the ``RINGFORM_SEED`` environment variable (0 when
        unset).
        """
        n = self.n_agents
        if self.positions is not None or self.velocities is not None:
            pos = self.positions.copy() if self.positions is not None else np.zeros((n, 3))
            vel = self.velocities.copy() if self.velocities is not None else np.zeros((n, 3))
            return pos, vel
        if self.init_random:
            if seed is None:
                seed = int(os.environ.get(ENV_SEED, "0"))
            rng = np.random.default_rng(seed)
            pos = rng.uniform(-self.init_position_scale, self.init_position_scale, (n, 3))
            vel = rng.uniform(-self.init_velocity_scale, self.init_velocity_scale, (n, 3))
            return pos, vel
        return np.zeros((n, 3)), np.zeros((n, 3))

    def formation(self):
        """Formation offsets: explicit table, else regular polygon of the
        configured radius, else all-zero offsets (pure consensus)."""
        from .quadrotor_sim import FormationSpec

        if self.formation_offsets is not None:
            return FormationSpec(self.formation_offsets, self.z_com)
        if self.formation_radius is not None:
            return FormationSpec.regular_polygon(self.n_agents, self.formation_radius,
                                                 self.z_com)
        return FormationSpec(np.zeros((self.n_agents, 2)), self.z_com)


def _parse_number(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("non-finite value")
    return value


def _parse_vector(text):
    parts = [p for p in text.split(",") if p.strip()]
    return np.array([_parse_number(p) for p in parts])


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate scenario text; raises :class:`ConfigError` listing
    every problem found."""
    raw: dict = {}
    agents_p: dict = {}
    agents_v: dict = {}
    offsets: dict = {}
    expectations: dict = {}
    problems: list[str] = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            problems.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        try:
            if key in _SCALAR_KEYS:
                raw[key] = _parse_number(value)
            elif key in _VECTOR_KEYS:
                raw[key] = _parse_vector(value)
            elif key in _BOOL_KEYS:
                raw[key] = _parse_bool(value)
            elif key.startswith("agent.") and key.endswith(".p0"):
                agents_p[int(key.split(".")[1])] = _parse_vector(value)
            elif key.startswith("agent.") and key.endswith(".v0"):
                agents_v[int(key.split(".")[1])] = _parse_vector(value)
            elif key.startswith("formation.offset."):
                offsets[int(key.split(".")[2])] = _parse_vector(value)
            elif key.startswith("expect."):
                name = key[len("expect."):]
                try:
                    expectations[name] = _parse_vector(value) if "," in value \
                        else _parse_number(value)
                except ValueError:
                    expectations[name] = _parse_bool(value)
            else:
                problems.append(f"line {lineno}: unknown key {key!r}")
        except (ValueError, IndexError) as exc:
            problems.append(f"line {lineno}: bad value for {key!r}: {exc}")

    if "m" not in raw:
        problems.append("missing required key 'm'")
    if "k" not in raw:
        problems.append("missing required key 'k'")
    if problems:
        raise ConfigError(problems)

    m = raw.pop("m")
    if m != int(m) or int(m) < 2:
        problems.append(f"'m' must be an integer >= 2, got {m!r}")
        raise ConfigError(problems)
    m = int(m)
    n = 2 * m

    cfg = ScenarioConfig(m=m, k=raw.pop("k"), expectations=expectations)

    simple = {
        "alpha": "alpha", "beta": "beta", "kpz": "kpz", "kvz": "kvz",
        "tilt_max": "tilt_max", "dt": "dt", "t_end": "t_end", "z_com": "z_com",
        "formation.radius": "formation_radius", "delta": "delta",
        "init.position_scale": "init_position_scale",
        "init.velocity_scale": "init_velocity_scale",
        "init.random": "init_random", "trim_attitude": "trim_attitude",
        "target_vf": "target_vf", "delta_candidates": "delta_candidates",
    }
    for key, attr in simple.items():
        if key in raw:
            setattr(cfg, attr, raw.pop(key))
    for key in ("attitude_kp", "attitude_kd", "attitude_ki"):
        if key in raw:
            vec = raw.pop(key)
            if vec.size == 1:
                vec = np.full(3, vec[0])
            if vec.size != 3:
                problems.append(f"'{key}' needs 1 or 3 components, got {vec.size}")
                continue
            setattr(cfg, key, vec)
    if "record_every" in raw:
        val = raw.pop("record_every")
        if val != int(val) or int(val) < 1:
            problems.append(f"'record_every' must be a positive integer, got {val!r}")
        else:
            cfg.record_every = int(val)
    if "modified_agent" in raw:
        val = raw.pop("modified_agent")
        if val != int(val) or not 1 <= int(val) <= n:
            problems.append(f"'modified_agent' must be an agent index in 1..{n}, got {val!r}")
        else:
            cfg.modified_agent = int(val)

    for label, table, attr in (("p0", agents_p, "positions"),
                               ("v0", agents_v, "velocities")):
        if not table:
            continue
        got = sorted(table)
        if got != list(range(1, n + 1)):
            problems.append(
                f"agent {label} blocks cover agents {got}, expected exactly 1..{n} "
                f"(agent count {len(got)} != 2m = {n})")
            continue
        if any(vec.size not in (1, 2, 3) for vec in table.values()):
            problems.append(f"agent {label} entries need 1-3 components")
            continue
        block = np.zeros((n, 3))
        for idx in range(1, n + 1):
            block[idx - 1, :table[idx].size] = table[idx]
        setattr(cfg, attr, block)

    if offsets:
        got = sorted(offsets)
        if got != list(range(1, n + 1)):
            problems.append(f"formation offsets cover agents {got}, expected exactly 1..{n}")
        elif any(v.size != 2 for v in offsets.values()):
            problems.append("formation offsets must be 2-component horizontal positions")
        else:
            cfg.formation_offsets = np.stack([offsets[i] for i in range(1, n + 1)])

    if cfg.dt is not None and cfg.dt <= 0.0:
        problems.append(f"'dt' must be positive, got {cfg.dt!r}")
    if cfg.t_end < 0.0:
        problems.append(f"'t_end' must be nonnegative, got {cfg.t_end!r}")
    if cfg.tilt_max <= 0.0 or cfg.tilt_max >= math.pi / 2:
        problems.append(f"'tilt_max' must lie in (0, pi/2), got {cfg.tilt_max!r}")
    if cfg.target_vf is not None and cfg.target_vf.size not in (1, 2, 3):
        problems.append("'target_vf' needs 1-3 components")

    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
