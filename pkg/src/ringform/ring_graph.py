"""Weighted ring digraph with two-node macro-vertices.

The network chains ``m`` identical two-agent cells into a directed ring.
Inside cell ``i`` (agents ``2i-1`` and ``2i``, 1-based) the odd agent chases
its even partner through an edge of gain ``k`` and the even agent chases the
odd one with unit weight; a unit-weight link closes the ring from each odd
agent to the previous cell's even agent.  The resulting out-Laplacian is the
object every other module consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RingTopology:
    """Ring digraph parameters: ``m`` macro-vertices, edge gain ``k``.

    ``n_agents`` is always ``2 * m``.  The graph has ``3 * m`` edges: the
    ``m`` intra-cell edges of weight ``k`` plus ``2 * m`` edges of weight 1.
    """

    m: int
    k: float

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or isinstance(self.m, bool):
            raise ValueError(f"macro-vertex count must be an integer, got {self.m!r}")
        if self.m < 2:
            raise ValueError(f"need at least 2 macro-vertices, got m={self.m}")
        if not math.isfinite(self.k):
            raise ValueError(f"edge gain must be finite, got k={self.k!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "k", float(self.k))

    @property
    def n_agents(self) -> int:
        return 2 * self.m

    def edges(self):
        """All weighted edges as 1-based ``(source, target, weight)`` triples."""
        n = self.n_agents
        out = []
        for i in range(1, self.m + 1):
            odd, even = 2 * i - 1, 2 * i
            prev_even = odd - 1 if i > 1 else n
            out.append((odd, even, self.k))
            out.append((odd, prev_even, 1.0))
            out.append((even, odd, 1.0))
        return out


@dataclass(frozen=True)
class WeightedLaplacian:
    """Out-Laplacian of a :class:`RingTopology` with its source parameters."""

    matrix: np.ndarray = field(repr=False)
    topology: RingTopology

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def n_agents(self) -> int:
        return self.topology.n_agents


def build_laplacian(m: int, k: float) -> WeightedLaplacian:
    """Assemble the ``2m x 2m`` weighted ring Laplacian.

    Row pattern (1-based): odd row ``2i-1`` holds diagonal ``1+k``, ``-k``
    toward agent ``2i`` and ``-1`` toward agent ``2i-2`` (wrapping to agent
    ``N`` for ``i=1``); even row ``2i`` holds diagonal ``1`` and ``-1``
    toward agent ``2i-1``.  Rows sum to zero, so the all-ones vector spans
    the kernel.
    """
    topo = RingTopology(m, k)
    n = topo.n_agents
    lap = np.zeros((n, n))
    for i in range(topo.m):
        odd, even = 2 * i, 2 * i + 1
        lap[odd, odd] = 1.0 + topo.k
        lap[odd, even] = -topo.k
        lap[odd, (odd - 1) % n] = -1.0
        lap[even, even] = 1.0
        lap[even, odd] = -1.0
    return WeightedLaplacian(lap, topo)


def left_null_vector(m: int, k: float) -> np.ndarray:
    """Left kernel vector ``w2 = [1, 1+k, 1, 1+k, ...]`` of the Laplacian.

    Its entries sum to ``m * (2 + k)``; the ``w2``-weighted average of the
    initial velocities is conserved by the consensus dynamics and fixes the
    final common velocity.
    """
    topo = RingTopology(m, k)
    return np.tile([1.0, 1.0 + topo.k], topo.m)
