"""Reachable-velocity planning through the single edge gain.

Summing the consensus-velocity formula over the ring splits the agents into
two groups: with ``g = sum_i (v_target - v_even_i(0))`` and
``h = sum_i (v_odd_i(0) - v_target)``, a target is reachable by gain choice
alone iff ``delta g = h`` for some admissible ``delta = 1 + k``.  When the
vectors are not collinear, replacing one odd agent's initial velocity with
``delta g - h_hat`` (``h_hat`` being ``h`` with that agent's term swapped
for ``-v_target``) restores solvability for any admissible ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .consensus_sim import predict_final_velocity
from .errors import InfeasiblePlanError
from .spectral import k_threshold

#: Relative residual below which g and h count as collinear.
COLLINEARITY_TOL = 1e-9

#: Scaling factors tried when the caller leaves delta open.
DEFAULT_DELTA_CANDIDATES = (-0.5, 0.5, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class ReachabilityVectors:
    """Group sums ``g`` (even agents) and ``h`` (odd agents) for one target."""

    g: np.ndarray
    h: np.ndarray


@dataclass(frozen=True)
class GainSolution:
    """Outcome of the collinearity solve.

    ``status`` is one of ``solved``, ``unconstrained`` (every gain works,
    ``k`` echoes the caller's default), ``not_collinear``,
    ``below_threshold`` (scaling exists but the gain is unstable) or
    ``infeasible`` (``g = 0`` with ``h != 0``).
    """

    k: float | None
    delta: float | None
    status: str


@dataclass(frozen=True)
class VelocityPlan:
    """A gain (and optional single-agent velocity change) hitting a target."""

    target_vf: np.ndarray
    delta: float
    k: float
    modified_agent: int | None
    modified_velocity: np.ndarray | None
    feasible: bool


def _split_velocities(initial_velocities, m: int):
    v0 = np.atleast_2d(np.asarray(initial_velocities, dtype=float))
    if v0.shape[0] != 2 * m:
        raise ValueError(f"expected {2 * m} agents, got {v0.shape[0]}")
    return v0


def reachability_vectors(initial_velocities, target_vf, m: int) -> ReachabilityVectors:
    """Direct summation of the even-agent and odd-agent group vectors."""
    v0 = _split_velocities(initial_velocities, m)
    vf = np.asarray(target_vf, dtype=float)
    g = (vf - v0[1::2]).sum(axis=0)
    h = (v0[0::2] - vf).sum(axis=0)
    return ReachabilityVectors(g, h)


def modified_h(initial_velocities, target_vf, m: int, agent: int) -> np.ndarray:
    """``h`` with the chosen odd agent's term replaced by ``-v_target``."""
    v0 = _split_velocities(initial_velocities, m)
    vf = np.asarray(target_vf, dtype=float)
    if agent % 2 == 0 or not 1 <= agent <= 2 * m:
        raise ValueError(f"agent must be an odd index in 1..{2 * m - 1}, got {agent}")
    h = (v0[0::2] - vf).sum(axis=0)
    return h - v0[agent - 1]


def _collinear_residual(g: np.ndarray, h: np.ndarray, delta: float) -> float:
    return float(np.linalg.norm(delta * g - h))


def solve_gain(vectors: ReachabilityVectors, m: int, default_k: float = 0.0) -> GainSolution:
    """Try to express ``h`` as ``delta g`` with an admissible gain.

    ``delta`` comes from the least-squares projection ``(g.h)/(g.g)`` and is
    accepted only when the collinearity residual stays below
    :data:`COLLINEARITY_TOL` relative to ``|g| |h|`` and ``k = delta - 1``
    clears the stability threshold.
    """
    g, h = vectors.g, vectors.h
    gnorm, hnorm = np.linalg.norm(g), np.linalg.norm(h)
    if gnorm == 0.0 and hnorm == 0.0:
        return GainSolution(default_k, default_k + 1.0, "unconstrained")
    if gnorm == 0.0:
        return GainSolution(None, None, "infeasible")
    delta = float(g @ h) / float(g @ g)
    if _collinear_residual(g, h, delta) > COLLINEARITY_TOL * max(gnorm * hnorm, 1.0):
        return GainSolution(None, None, "not_collinear")
    k = delta - 1.0
    if not k > k_threshold(m):
        return GainSolution(None, delta, "below_threshold")
    return GainSolution(k, delta, "solved")


def plan_with_modified_agent(initial_velocities, target_vf, m: int,
                             agent: int, delta: float) -> VelocityPlan:
    """Plan that rewrites one odd agent's initial velocity for a chosen
    ``delta``; the replacement is ``delta g - h_hat``."""
    if delta == 0.0:
        raise InfeasiblePlanError("scaling delta must be nonzero")
    k = delta - 1.0
    if not k > k_threshold(m):
        raise InfeasiblePlanError(
            f"delta={delta:.9g} gives k={k:.9g}, below the threshold "
            f"{k_threshold(m):.9g} for m={m}"
        )
    vf = np.asarray(target_vf, dtype=float)
    vectors = reachability_vectors(initial_velocities, vf, m)
    h_hat = modified_h(initial_velocities, vf, m, agent)
    v_new = delta * vectors.g - h_hat
    plan = VelocityPlan(vf, delta, k, agent, v_new, True)
    achieved = predict_final_velocity(apply_plan(initial_velocities, plan), m, k)
    if np.abs(achieved - vf).max() > 1e-9 * max(1.0, float(np.abs(vf).max())):
        raise InfeasiblePlanError(
            f"planned velocity misses the target by {np.abs(achieved - vf).max():.3e}"
        )
    return plan


def apply_plan(initial_velocities, plan: VelocityPlan) -> np.ndarray:
    """Initial velocities with the plan's modification applied (a copy)."""
    v0 = np.array(np.atleast_2d(np.asarray(initial_velocities, dtype=float)))
    if plan.modified_agent is not None:
        v0[plan.modified_agent - 1] = plan.modified_velocity
    return v0


def plan_velocity(initial_velocities, target_vf, m: int, agent: int | None = None,
                  delta: float | None = None,
                  delta_candidates=DEFAULT_DELTA_CANDIDATES,
                  default_k: float = 0.0) -> VelocityPlan:
    """Full planning pass: gain-only solve first, then the modified-agent
    search.

    Candidate plans are ranked by smallest replacement-velocity magnitude,
    ties broken by search order (agents ascending, then the candidate delta
    list).  Returns an infeasible plan (``feasible=False``) when nothing
    admissible exists.
    """
    vf = np.asarray(target_vf, dtype=float)
    vectors = reachability_vectors(initial_velocities, vf, m)
    sol = solve_gain(vectors, m, default_k=default_k)
    if sol.status in ("solved", "unconstrained"):
        return VelocityPlan(vf, sol.delta, sol.k, None, None, True)

    agents = [agent] if agent is not None else list(range(1, 2 * m, 2))
    deltas = [delta] if delta is not None else list(delta_candidates)
    best = None
    best_size = math.inf
    for a in agents:
        for d in deltas:
            try:
                plan = plan_with_modified_agent(initial_velocities, vf, m, a, d)
            except InfeasiblePlanError:
                continue
            size = float(np.linalg.norm(plan.modified_velocity))
            if size < best_size:
                best, best_size = plan, size
    if best is None:
        return VelocityPlan(vf, math.nan, math.nan, None, None, False)
    return best
