"""Spectral analysis of the ring Laplacian.

``-L`` is block circulant with 2x2 blocks, so a Kronecker product of Fourier
matrices block-diagonalizes it.  Each diagonal block has the closed form

    [[-a_l, -k + a_l], [-a_l, -k - 2 + a_l]],   a_l = (1 - w_l) / 2,

with ``w_l = exp(-i 2 pi (l-1) / m)``, and characteristic polynomial
``s^2 + (2 + k) s + 2 a_l``.  From those quadratics this module derives the
full spectrum, the stability threshold on ``k``, the coupling-strength bound
on ``beta^2 / alpha``, and numeric root-locus traces.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GainInfeasibleError
from .ring_graph import RingTopology, WeightedLaplacian, build_laplacian

#: Verdicts this close to a stability boundary are treated as unstable.
BOUNDARY_TOL = 1e-9


def fourier_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix with entries ``w^{(r-1)(c-1)} / sqrt(n)``.

    Uses ``w = exp(-i 2 pi / n)``, so ``F @ F.conj().T == I``.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValueError(f"Fourier order must be a positive integer, got {n!r}")
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / math.sqrt(n)


@dataclass(frozen=True)
class BlockDiagonalForm:
    """The m complex 2x2 diagonal blocks of the transformed ``-L``.

    ``alphas[l]`` is ``(1 - w_l)/2`` and ``thetas[l]`` the block angle
    ``2 pi l / m`` (0-based ``l``).  Block 1 is exactly
    ``[[0, -k], [0, -(k+2)]]`` and blocks ``l`` and ``m+2-l`` are entrywise
    conjugates.
    """

    blocks: np.ndarray = field(repr=False)  # (m, 2, 2) complex
    alphas: np.ndarray = field(repr=False)  # (m,) complex
    thetas: np.ndarray = field(repr=False)  # (m,) float
    topology: RingTopology

    @property
    def m(self) -> int:
        return self.topology.m


def _block_angles(m: int):
    ell = np.arange(m)
    thetas = 2.0 * np.pi * ell / m
    omegas = np.exp(-1j * thetas)
    alphas = (1.0 - omegas) / 2.0
    alphas[0] = 0.0  # exact: theta_1 = 0
    return thetas, alphas


def closed_form_blocks(m: int, k: float) -> BlockDiagonalForm:
    """Diagonal blocks straight from the closed form, no factorization."""
    topo = RingTopology(m, k)
    thetas, alphas = _block_angles(topo.m)
    blocks = np.empty((topo.m, 2, 2), dtype=complex)
    blocks[:, 0, 0] = -alphas
    blocks[:, 0, 1] = -topo.k + alphas
    blocks[:, 1, 0] = -alphas
    blocks[:, 1, 1] = -topo.k - 2.0 + alphas
    return BlockDiagonalForm(blocks, alphas, thetas, topo)


def block_diagonalize(lap: WeightedLaplacian, residual_tol: float = 1e-10) -> BlockDiagonalForm:
    """Block-diagonalize ``-L`` through the Fourier similarity ``F (-L) F*``.

    ``F = F_m (x) F_2``.  Raises if the off-block-diagonal residual exceeds
    ``residual_tol``; for Laplacians built by :func:`build_laplacian` the
    residual is at round-off level.
    """
    topo = lap.topology
    f = np.kron(fourier_matrix(topo.m), fourier_matrix(2))
    d = f @ (-lap.matrix) @ f.conj().T
    blocks = np.empty((topo.m, 2, 2), dtype=complex)
    residual = 0.0
    for ell in range(topo.m):
        sl = slice(2 * ell, 2 * ell + 2)
        blocks[ell] = d[sl, sl]
        d[sl, sl] = 0.0
    residual = np.abs(d).max()
    if residual > residual_tol:
        raise ValueError(
            f"off-block-diagonal residual {residual:.3e} exceeds {residual_tol:.1e}; "
            "input is not the expected block-circulant form"
        )
    thetas, alphas = _block_angles(topo.m)
    return BlockDiagonalForm(blocks, alphas, thetas, topo)


def quadratic_roots(b: complex, c: complex):
    """Roots of ``s^2 + b s + c`` over the complex numbers.

    Uses the sign choice that avoids catastrophic cancellation; returns the
    pair ordered by descending real part (ties by descending imaginary
    part).
    """
    disc = cmath.sqrt(b * b - 4.0 * c)
    if (b.conjugate() * disc).real > 0.0:
        disc = -disc
    q = -0.5 * (b - disc)
    r1 = q
    r2 = c / q if q != 0.0 else -b - q
    pair = sorted((r1, r2), key=lambda z: (z.real, z.imag), reverse=True)
    return pair[0], pair[1]


def block_eigenvalues(m: int, k: float, ell: int):
    """Eigenvalue pair of diagonal block ``ell`` (1-based) of ``-L``.

    Roots of ``s^2 + (2+k) s + 2 a_l``; block 1 always yields
    ``{0, -(k+2)}``.  The union over all blocks is the spectrum of ``-L``.
    """
    topo = RingTopology(m, k)
    if not 1 <= ell <= topo.m:
        raise IndexError(f"block index {ell} out of range 1..{topo.m}")
    _, alphas = _block_angles(topo.m)
    if ell == 1:
        roots = sorted((0.0 + 0.0j, complex(-(topo.k + 2.0))),
                       key=lambda z: (z.real, z.imag), reverse=True)
        return roots[0], roots[1]
    return quadratic_roots(complex(2.0 + topo.k), 2.0 * alphas[ell - 1])


def hurwitz_stable_quadratic(a1: float, a2: float, b2: float) -> bool:
    """Stability test for ``s^2 + a1 s + (a2 + i b2)`` with real ``a1``.

    Both roots lie strictly in the open left half plane iff
    ``a1 > 0`` and ``a1^2 a2 - b2^2 > 0``.
    """
    return a1 > 0.0 and a1 * a1 * a2 - b2 * b2 > 0.0


def k_threshold(m: int) -> float:
    """Edge-gain threshold: nonzero Laplacian eigenvalues sit in the open
    right half plane iff ``k > -2 + sqrt(2) cos(pi / m)``."""
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool) or m < 2:
        raise ValueError(f"need at least 2 macro-vertices, got m={m!r}")
    return -2.0 + math.sqrt(2.0) * math.cos(math.pi / m)


def laplacian_spectrum(m: int, k: float) -> np.ndarray:
    """All ``2m`` eigenvalues of ``L`` (negated block roots), block-ordered."""
    topo = RingTopology(m, k)
    out = np.empty(2 * topo.m, dtype=complex)
    for ell in range(1, topo.m + 1):
        r1, r2 = block_eigenvalues(topo.m, topo.k, ell)
        out[2 * (ell - 1)] = -r1
        out[2 * (ell - 1) + 1] = -r2
    return out


def _nonzero_spectrum(m: int, k: float) -> np.ndarray:
    spec = laplacian_spectrum(m, k)
    # block 1 contributes an exact zero; drop that single entry
    keep = np.ones(spec.size, dtype=bool)
    keep[np.argmin(np.abs(spec))] = False
    return spec[keep]


def coupling_bound(m: int, k: float) -> float:
    """Strict lower bound on ``beta^2 / alpha`` for second-order consensus.

    ``max over nonzero eigenvalues mu of L of Im(mu)^2 / (Re(mu) |mu|^2)``;
    zero when the whole nonzero spectrum is real.  Requires
    ``k > k_threshold(m)``.
    """
    thresh = k_threshold(m)
    if not k > thresh:
        raise GainInfeasibleError(
            f"k={k:.9g} is not above the stability threshold {thresh:.9g} for m={m}"
        )
    best = 0.0
    for mu in _nonzero_spectrum(m, k):
        if mu.imag == 0.0:
            continue
        best = max(best, mu.imag**2 / (mu.real * abs(mu) ** 2))
    return best


@dataclass(frozen=True)
class SpectralReport:
    """Stability summary for one ``(m, k)`` pair.

    ``coupling_bound`` is ``inf`` when ``k`` fails the threshold (no choice
    of coupling strengths stabilizes the swarm).
    """

    topology: RingTopology
    nonzero_eigenvalues: np.ndarray = field(repr=False)
    k_threshold: float
    coupling_bound: float
    stable: bool


def spectral_report(m: int, k: float) -> SpectralReport:
    """Assemble the :class:`SpectralReport` from the closed-form spectrum."""
    topo = RingTopology(m, k)
    nonzero = _nonzero_spectrum(topo.m, topo.k)
    thresh = k_threshold(topo.m)
    stable = bool(nonzero.real.min() > BOUNDARY_TOL)
    try:
        bound = coupling_bound(topo.m, topo.k)
    except GainInfeasibleError:
        bound = math.inf
    return SpectralReport(topo, nonzero, thresh, bound, stable)


def root_locus_sweep(m: int, ell: int, k_grid) -> np.ndarray:
    """Roots of block ``ell``'s polynomial for every gain in ``k_grid``.

    Returns a ``(len(k_grid), 2)`` complex array.  Consecutive rows are
    matched by nearest distance so each column traces a continuous branch;
    monotone grids therefore reproduce the numeric root-locus curves.
    """
    topo = RingTopology(m, 0.0)  # validates m; the gain varies over the grid
    if not 1 <= ell <= topo.m:
        raise IndexError(f"block index {ell} out of range 1..{topo.m}")
    grid = np.asarray(k_grid, dtype=float)
    if grid.ndim != 1:
        raise ValueError("k grid must be one-dimensional")
    if not np.isfinite(grid).all():
        raise ValueError("k grid contains non-finite values")
    _, alphas = _block_angles(topo.m)
    c = 2.0 * alphas[ell - 1]
    out = np.empty((grid.size, 2), dtype=complex)
    for i, kv in enumerate(grid):
        r1, r2 = quadratic_roots(complex(2.0 + kv), c)
        if i > 0:
            keep = abs(r1 - out[i - 1, 0]) + abs(r2 - out[i - 1, 1])
            swap = abs(r2 - out[i - 1, 0]) + abs(r1 - out[i - 1, 1])
            if swap < keep:
                r1, r2 = r2, r1
        out[i, 0] = r1
        out[i, 1] = r2
    return out
