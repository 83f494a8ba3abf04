"""Sampling sets on ``Omega = [-L, L]`` and on its complement.

Interior sets carry Voronoi cell lengths as quadrature weights:
``|I_1| = L + (g_2 + g_1)/2``, ``|I_N| = L - (g_N + g_{N-1})/2`` and
``|I_k| = (g_{k+1} - g_{k-1})/2`` otherwise, which telescope to ``2L``.
Exterior sets are the uniform grids ``±(L + (m + 1/2) gap)`` with weight ``gap``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .bounds import TheoryParams

DEFAULT_EXTERIOR_EXTENT = 10.0
_MAX_REDRAWS = 100_000


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class Domain1D:
    """``Omega = [-L, L]`` with the constants of Lebesgue measure on the line."""

    L: float
    corkscrew_c: float = 0.5
    dim: int = 1
    D1: float = 2.0
    D2: float = 2.0

    def __post_init__(self):
        if not self.L >= 1:
            raise ValueError(f"L must be at least 1, got {self.L}")

    @property
    def measure(self) -> float:
        return 2.0 * self.L


def voronoi_weights(points: np.ndarray, L: float) -> np.ndarray:
    """Cell lengths of the Voronoi partition of ``[-L, L]`` induced by sorted ``points``."""
    g = np.asarray(points, dtype=float)
    if g.size == 0:
        raise ValueError("empty sampling set")
    if g.size == 1:
        return np.array([2.0 * L])
    w = np.empty_like(g)
    w[0] = L + 0.5 * (g[1] + g[0])
    w[-1] = L - 0.5 * (g[-1] + g[-2])
    w[1:-1] = 0.5 * (g[2:] - g[:-2])
    return w


def hausdorff_distance(points: np.ndarray, L: float) -> float:
    """``sup_{x in [-L, L]} dist(x, points)`` for sorted points inside the interval."""
    g = np.asarray(points, dtype=float)
    if g.size == 0:
        raise ValueError("empty sampling set")
    inner = 0.5 * float(np.max(np.diff(g))) if g.size > 1 else 0.0
    return max(float(g[0] + L), float(L - g[-1]), inner)


@dataclass(frozen=True, eq=False)
class SamplingSet:
    L: float
    interior: np.ndarray
    interior_weights: np.ndarray
    exterior: np.ndarray = field(default_factory=lambda: np.empty(0))
    exterior_gap: float = 0.0

    @property
    def hausdorff(self) -> float:
        return hausdorff_distance(self.interior, self.L)

    @property
    def exterior_hausdorff(self) -> float:
        """Distance bound from the sampled part of the complement to the exterior grid."""
        return 0.5 * self.exterior_gap if self.exterior.size else math.inf

    @property
    def size(self) -> int:
        return self.interior.size

    @property
    def positions(self) -> np.ndarray:
        return np.concatenate([self.interior, self.exterior])

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([self.interior_weights, np.full(self.exterior.size, self.exterior_gap)])

    def with_exterior(self, gap: float, extent: float = DEFAULT_EXTERIOR_EXTENT) -> "SamplingSet":
        points, _ = exterior_grid(self.L, gap, extent)
        return replace(self, exterior=points, exterior_gap=float(gap))


def interior_set(L: float, points) -> SamplingSet:
    """Sampling set from explicit interior positions; coincident points are merged."""
    g = np.unique(np.asarray(points, dtype=float))
    if g.size == 0:
        raise ValueError("empty sampling set")
    if g[0] < -L or g[-1] > L:
        raise ValueError(f"interior points must lie in [-{L}, {L}]")
    return SamplingSet(L=float(L), interior=g, interior_weights=voronoi_weights(g, L))


def deterministic_interior(
    L: float,
    rng=None,
    scale: float = 1.0,
    gaps: Callable[[np.random.Generator], float] | None = None,
    literal_first_gap: bool = False,
) -> SamplingSet:
    """Positions with i.i.d. gaps uniform on ``[scale/4, 3 scale/4]``.

    Walking right from ``-L``, gaps are drawn until the last point is within ``scale/4``
    of ``L``; a gap that would step past ``L`` is re-drawn.  The first point sits half a
    drawn gap from ``-L`` so that the endpoint distance obeys the same ``3 scale/8`` bound
    as interior half-gaps, giving ``d_H <= 3 scale/8``.  ``literal_first_gap`` uses a full
    gap instead (``d_H`` up to ``3 scale/4``).  ``gaps`` overrides the gap distribution.
    """
    if not L >= 1:
        raise ValueError(f"L must be at least 1, got {L}")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    rng = as_rng(rng)
    lo, hi = 0.25 * scale, 0.75 * scale
    draw = gaps or (lambda r: r.uniform(lo, hi))

    first = draw(rng) if literal_first_gap else 0.5 * draw(rng)
    points = [-L + first]
    last = points[0]
    redraws = 0
    while L - last > lo:
        g = draw(rng)
        if last + g > L:
            redraws += 1
            if redraws > _MAX_REDRAWS:
                raise RuntimeError("gap sampler never lands inside the interval")
            continue
        last += g
        points.append(last)
    return interior_set(L, points)


def random_interior(L: float, N: int, rng=None) -> SamplingSet:
    """``N`` i.i.d. uniform positions on ``[-L, L]``, sorted."""
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    rng = as_rng(rng)
    return interior_set(L, rng.uniform(-L, L, N))


def exterior_grid(L: float, gap: float, extent: float = DEFAULT_EXTERIOR_EXTENT) -> tuple[np.ndarray, np.ndarray]:
    """Points ``±(L + (m + 1/2) gap)``, ``m < ceil(extent/gap)``, each weighted by ``gap``."""
    if not gap > 0:
        raise ValueError(f"gap must be positive, got {gap}")
    if not extent > 0:
        raise ValueError(f"extent must be positive, got {extent}")
    m = np.arange(math.ceil(extent / gap - 1e-9))
    right = L + (m + 0.5) * gap
    points = np.concatenate([-right[::-1], right])
    return points, np.full(points.size, float(gap))


def weighted_sample_norm(values, weights) -> float:
    """``(sum |h(gamma)|^2 |I_gamma|)^(1/2)``."""
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.shape != w.shape:
        raise ValueError(f"values {v.shape} and weights {w.shape} differ in shape")
    return math.sqrt(float(np.sum(v * v * w)))


@dataclass(frozen=True)
class CoverageBound:
    raw: float
    clamped: float


def coverage_bound(params: TheoryParams, delta1: float, N: int) -> CoverageBound:
    """Tail bound on ``P{d_H(Gamma, Omega) > delta1}`` for ``N`` i.i.d. uniform points.

    ``(10^d mu / (c^d D1 delta1^d)) (1 - c^d D1 delta1^d / (10^d mu))^N``; the raw value
    may exceed 1 and is reported next to its clamp to ``[0, 1]``.
    """
    if not 0 < delta1 <= 1:
        raise ValueError(f"delta1 must lie in (0, 1], got {delta1}")
    if N < 0:
        raise ValueError(f"N must be non-negative, got {N}")
    d = params.d
    q = params.c**d * params.D1 * delta1**d / (10.0**d * params.mu_omega)
    raw = (1.0 / q) * max(1.0 - q, 0.0) ** N
    return CoverageBound(raw=raw, clamped=min(max(raw, 0.0), 1.0))


def hausdorff_batch(points: np.ndarray, L: float) -> np.ndarray:
    """Row-wise Hausdorff distance of unsorted point sets (one set per row)."""
    g = np.sort(points, axis=1)
    d = np.maximum(g[:, 0] + L, L - g[:, -1])
    if g.shape[1] > 1:
        d = np.maximum(d, 0.5 * np.diff(g, axis=1).max(axis=1))
    return d


def empirical_coverage(L: float, N: int, delta1: float, trials: int, rng=None, chunk: int = 256) -> float:
    """Fraction of ``trials`` uniform ``N``-point draws with ``d_H > delta1``."""
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    rng = as_rng(rng)
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        hits += int(np.count_nonzero(hausdorff_batch(rng.uniform(-L, L, (m, N)), L) > delta1))
        done += m
    return hits / trials
