"""Truncated shift-invariant spaces and the reproducing kernels they induce.

A space is spanned by ``phi_i(x) = g(x - i - theta_i)`` for ``index_lo <= i <= index_hi``
where ``g`` is either the Gaussian ``exp(-x**2)`` or the hat ``max(1 - |x|, 0)``.
With ``A`` the Gram matrix of the basis and ``B = A^{-1}``, the orthogonal projection
onto the span has kernel

    K(x, y) = sum_{i,j} b_ji phi_i(x) phi_j(y),

and every element of the span is reproduced by it.  Signals are stored as coefficient
vectors over the basis; norms are composite-Simpson integrals evaluated through cached
quadrature Gram matrices, so a norm costs one quadratic form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import ConstructionError, UndefinedRatioError

GeneratorKind = Literal["gaussian", "hat"]
Region = Literal["whole_line", "inside", "outside"]

MAX_JITTER = 0.1
# Distance beyond which a basis element is treated as exactly zero (exp(-64) ~ 1.6e-28).
SUPPORT_RADIUS = {"gaussian": 8.0, "hat": 1.0}
_CHUNK = 4096


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite-Simpson panel width and the padding added around the basis centres."""

    step: float = 0.01
    window_pad: float = 10.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"quadrature step must be positive, got {self.step}")
        if not self.window_pad > 0:
            raise ValueError(f"window_pad must be positive, got {self.window_pad}")


def simpson_rule(a: float, b: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite Simpson rule on ``[a, b]``.

    The panel count is the smallest even number whose width does not exceed ``step``.
    """
    if b < a:
        raise ValueError(f"empty interval [{a}, {b}]")
    if b == a:
        return np.array([a]), np.array([0.0])
    n = max(2, math.ceil((b - a) / step - 1e-9))
    n += n % 2
    x = np.linspace(a, b, n + 1)
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * ((b - a) / n / 3.0)


@dataclass(frozen=True, eq=False)
class Generator:
    """Basis description: generator kind, index range and per-index jitter."""

    kind: GeneratorKind
    index_lo: int
    index_hi: int
    jitter: np.ndarray

    def __post_init__(self):
        if self.kind not in SUPPORT_RADIUS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.index_lo > self.index_hi:
            raise ValueError(f"index_lo={self.index_lo} exceeds index_hi={self.index_hi}")
        jitter = np.array(self.jitter, dtype=float).reshape(-1)
        if jitter.size != self.size:
            raise ValueError(f"expected {self.size} jitter values, got {jitter.size}")
        if np.any(np.abs(jitter) > MAX_JITTER + 1e-15):
            raise ValueError("jitter values must lie in [-1/10, 1/10]")
        if self.kind == "hat" and np.any(jitter != 0):
            raise ValueError("the hat generator is never jittered")
        jitter.setflags(write=False)
        object.__setattr__(self, "jitter", jitter)
        centers = np.arange(self.index_lo, self.index_hi + 1, dtype=float) + jitter
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)

    @property
    def size(self) -> int:
        return self.index_hi - self.index_lo + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.index_lo, self.index_hi + 1)

    @property
    def support_radius(self) -> float:
        return SUPPORT_RADIUS[self.kind]

    def evaluate(self, x, lo: int = 0, hi: int | None = None) -> np.ndarray:
        """Basis values ``phi_i(x)`` with a trailing axis over basis positions ``lo:hi``."""
        x = np.asarray(x, dtype=float)
        d = x[..., None] - self.centers[lo:hi]
        if self.kind == "gaussian":
            return np.exp(-d * d)
        return np.maximum(1.0 - np.abs(d), 0.0)

    def column_range(self, a: float, b: float) -> tuple[int, int]:
        """Positions of the basis elements that do not vanish somewhere on ``[a, b]``."""
        r = self.support_radius
        return (
            int(np.searchsorted(self.centers, a - r, side="left")),
            int(np.searchsorted(self.centers, b + r, side="right")),
        )


@dataclass(frozen=True, eq=False)
class Signal:
    """``f = sum_i coeffs[i - index_lo] * phi_i``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __add__(self, other: "Signal") -> "Signal":
        return Signal(self.coeffs + other.coeffs)

    def __sub__(self, other: "Signal") -> "Signal":
        return Signal(self.coeffs - other.coeffs)

    def __mul__(self, scale: float) -> "Signal":
        return Signal(self.coeffs * float(scale))

    __rmul__ = __mul__

    def __neg__(self) -> "Signal":
        return Signal(-self.coeffs)

    def __len__(self) -> int:
        return self.coeffs.size


@dataclass(frozen=True, eq=False)
class KernelSpace:
    generator: Generator
    gram: np.ndarray
    gram_inverse: np.ndarray
    quadrature: QuadratureSpec
    decay_rate: float
    _grams: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return self.generator.size

    @property
    def kind(self) -> GeneratorKind:
        return self.generator.kind

    @property
    def index_lo(self) -> int:
        return self.generator.index_lo

    @property
    def index_hi(self) -> int:
        return self.generator.index_hi

    @property
    def window(self) -> tuple[float, float]:
        """Integration window used for whole-line norms."""
        c = self.generator.centers
        pad = self.quadrature.window_pad
        return float(c[0] - pad), float(c[-1] + pad)

    def basis(self, x) -> np.ndarray:
        return self.generator.evaluate(x)

    def zero(self) -> Signal:
        return Signal(np.zeros(self.size))

    def unit(self, index: int) -> Signal:
        """The basis element ``phi_index`` as a Signal."""
        if not self.index_lo <= index <= self.index_hi:
            raise ValueError(f"index {index} outside [{self.index_lo}, {self.index_hi}]")
        c = np.zeros(self.size)
        c[index - self.index_lo] = 1.0
        return Signal(c)

    def check(self, f: Signal) -> np.ndarray:
        if f.coeffs.size != self.size:
            raise ValueError(f"signal has {f.coeffs.size} coefficients, space has {self.size}")
        return f.coeffs

    def quadrature_gram(self, a: float, b: float) -> np.ndarray:
        """Simpson approximation of ``(∫_a^b phi_i phi_j)_{ij}`` (cached, read-only)."""
        lo_w, hi_w = self.window
        a, b = max(a, lo_w), min(b, hi_w)
        key = (round(a, 12), round(b, 12))
        G = self._grams.get(key)
        if G is None:
            G = _assemble_quadrature_gram(self.generator, a, b, self.quadrature.step)
            G.setflags(write=False)
            self._grams[key] = G
        return G


def quadrature_nodes(gen: Generator, a: float, b: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Simpson nodes on ``[a, b]``; for hats the rule is split at the integer kinks.

    Products of hats are quadratic between kinks, so the split rule is exact for them.
    """
    if gen.kind != "hat":
        return simpson_rule(a, b, step)
    cuts = np.arange(math.floor(a) + 1, math.ceil(b))
    edges = np.concatenate([[a], cuts[(cuts > a) & (cuts < b)], [b]])
    parts = [simpson_rule(lo, hi, step) for lo, hi in zip(edges[:-1], edges[1:])]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _assemble_quadrature_gram(gen: Generator, a: float, b: float, step: float) -> np.ndarray:
    G = np.zeros((gen.size, gen.size))
    if b <= a:
        return G
    x, w = quadrature_nodes(gen, a, b, step)
    for start in range(0, x.size, _CHUNK):
        xs, ws = x[start:start + _CHUNK], w[start:start + _CHUNK]
        lo, hi = gen.column_range(xs[0], xs[-1])
        if lo >= hi:
            continue
        P = gen.evaluate(xs, lo, hi)
        G[lo:hi, lo:hi] += P.T @ (ws[:, None] * P)
    return G


def gaussian_gram(centers: np.ndarray) -> np.ndarray:
    """``<phi_a, phi_b> = sqrt(pi/2) exp(-(c_a - c_b)^2 / 2)`` for Gaussians centred at ``c``."""
    d = centers[:, None] - centers[None, :]
    return math.sqrt(math.pi / 2.0) * np.exp(-0.5 * d * d)


def hat_gram(n: int) -> np.ndarray:
    A = np.zeros((n, n))
    np.fill_diagonal(A, 2.0 / 3.0)
    i = np.arange(n - 1)
    A[i, i + 1] = A[i + 1, i] = 1.0 / 6.0
    return A


def _decay_rate(B: np.ndarray, floor: float = 1e-12) -> float:
    """Smallest r with |b_ij| <= max|b_ii| r^|i-j| over entries above ``floor`` (relative)."""
    n = B.shape[0]
    if n == 1:
        return 0.0
    scale = np.abs(np.diag(B)).max()
    i, j = np.triu_indices(n, 1)
    rel = np.abs(B[i, j]) / scale
    keep = rel > floor
    if not keep.any():
        return 0.0
    return float(np.max(rel[keep] ** (1.0 / (j - i)[keep])))


def make_space(
    kind: GeneratorKind,
    index_lo: int,
    index_hi: int,
    jitter_seed=None,
    quadrature: QuadratureSpec | None = None,
    jitter: Sequence[float] | None = None,
) -> KernelSpace:
    """Build the truncated space spanned by ``phi_i``, ``index_lo <= i <= index_hi``.

    ``jitter_seed`` (an int or a ``numpy.random.Generator``) draws ``theta_i`` uniformly
    from ``[-1/10, 1/10]``; only the Gaussian generator may be jittered.  ``jitter``
    supplies explicit offsets instead.
    """
    quadrature = quadrature or QuadratureSpec()
    n = index_hi - index_lo + 1
    if n < 1:
        raise ValueError(f"index_lo={index_lo} exceeds index_hi={index_hi}")
    if jitter_seed is not None and jitter is not None:
        raise ValueError("pass either jitter_seed or jitter, not both")
    if jitter_seed is not None:
        if kind != "gaussian":
            raise ValueError("only the gaussian generator can be jittered")
        rng = jitter_seed if isinstance(jitter_seed, np.random.Generator) else np.random.default_rng(jitter_seed)
        jitter = rng.uniform(-MAX_JITTER, MAX_JITTER, n)
    gen = Generator(kind, index_lo, index_hi, np.zeros(n) if jitter is None else jitter)

    A = gaussian_gram(gen.centers) if kind == "gaussian" else hat_gram(n)
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise ConstructionError(f"Gram matrix of the {kind} basis is not positive definite") from exc
    B = np.linalg.inv(A)
    B = 0.5 * (B + B.T)
    err = np.abs(A @ B - np.eye(n)).max()
    if not err <= 1e-10:
        raise ConstructionError(f"Gram inversion residual {err:.2e} exceeds 1e-10")
    A.setflags(write=False)
    B.setflags(write=False)
    return KernelSpace(gen, A, B, quadrature, _decay_rate(B))


def kernel_eval(space: KernelSpace, x, y):
    """``K(x, y)``; array arguments give an array of shape ``x.shape + y.shape``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    Px = space.basis(x.reshape(-1))
    Py = space.basis(y.reshape(-1))
    K = (Px @ space.gram_inverse.T) @ Py.T
    out = K.reshape(x.shape + y.shape)
    return float(out) if out.ndim == 0 else out


def signal_eval(space: KernelSpace, f: Signal, x):
    c = space.check(f)
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    out = np.empty(flat.size)
    for start in range(0, flat.size, _CHUNK):
        out[start:start + _CHUNK] = space.basis(flat[start:start + _CHUNK]) @ c
    out = out.reshape(x.shape)
    return float(out) if out.ndim == 0 else out


def region_gram(space: KernelSpace, region: Region = "whole_line", L: float | None = None) -> np.ndarray:
    if region == "whole_line":
        return space.quadrature_gram(*space.window)
    if L is None or not L > 0:
        raise ValueError(f"region {region!r} needs a positive L, got {L}")
    if region == "inside":
        return space.quadrature_gram(-L, L)
    if region == "outside":
        lo, hi = space.window
        return space.quadrature_gram(lo, -L) + space.quadrature_gram(L, hi)
    raise ValueError(f"unknown region {region!r}")


def l2_norm(space: KernelSpace, f: Signal, region: Region = "whole_line", L: float | None = None) -> float:
    """L2 norm of ``f`` over the line, over ``[-L, L]`` or over its complement."""
    c = space.check(f)
    G = region_gram(space, region, L)
    return math.sqrt(max(float(c @ G @ c), 0.0))


def concentration_ratio(space: KernelSpace, f: Signal, L: float) -> float:
    """``||f||_{2, outside [-L, L]} / ||f||_2``."""
    whole = l2_norm(space, f)
    if whole == 0.0:
        raise UndefinedRatioError("concentration ratio of the zero signal is undefined")
    return min(l2_norm(space, f, "outside", L) / whole, 1.0)


@dataclass(frozen=True)
class ProbeGrid:
    """Where the Schur-type suprema are sampled.

    ``points`` are the x-probes (default: 11 points across one unit around the centre of
    the index range); ``deltas`` are the moduli probed for the Hölder term; ``step`` is the
    y-quadrature panel width (default: the space's quadrature step).
    """

    points: tuple[float, ...] | None = None
    deltas: tuple[float, ...] = (1.0, 0.5, 0.25, 0.1, 0.05)
    step: float | None = None

    def probe_points(self, space: KernelSpace) -> np.ndarray:
        if self.points is not None:
            return np.asarray(self.points, dtype=float)
        mid = 0.5 * (space.index_lo + space.index_hi)
        return mid + np.linspace(-0.5, 0.5, 11)


@dataclass(frozen=True)
class SchurEstimate:
    schur_norm: float
    modulus_schur: float
    delta: float
    holder_theta: float
    combined: float


def _stencil(delta: float) -> np.ndarray:
    return np.array([-delta, -0.5 * delta, 0.0, 0.5 * delta, delta])


def estimate_schur(
    space: KernelSpace,
    delta: float = 0.25,
    probe: ProbeGrid | None = None,
    theta: float = 1.0,
) -> SchurEstimate:
    """Lower estimates of ``||K||_S``, ``||omega_delta(K)||_S`` and ``||K||_{S,theta}``.

    ``K`` is symmetric, so the row and column suprema of the Schur norm coincide and only
    rows ``K(x, .)`` at the probe points are integrated.  The inner supremum of the modulus
    of continuity runs over the stencil ``{0, ±delta/2, ±delta}`` in each argument.
    """
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    probe = probe or ProbeGrid()
    xs = probe.probe_points(space)
    deltas = sorted(set(float(d) for d in probe.deltas) | {float(delta)})
    if any(not 0 < d <= 1 for d in deltas):
        raise ValueError("probe deltas must lie in (0, 1]")
    step = probe.step or space.quadrature.step
    gen = space.generator
    B = space.gram_inverse
    dmax = max(deltas)

    # Only basis columns carrying non-negligible kernel weight for the probed rows.
    rows = B @ space.basis(np.concatenate([xs - dmax, xs, xs + dmax])).T
    mag = np.abs(rows).max(axis=1)
    active = np.flatnonzero(mag > 1e-14 * mag.max())
    lo, hi = int(active[0]), int(active[-1]) + 1
    r = gen.support_radius + dmax
    y, w = simpson_rule(gen.centers[lo] - r, gen.centers[hi - 1] + r, step)

    schur = 0.0
    moduli: dict[float, float] = {d: 0.0 for d in deltas}
    base_rows = space.basis(xs) @ B.T[:, lo:hi]  # K(x, .) coefficients per probe
    P0 = gen.evaluate(y, lo, hi)
    K0 = base_rows @ P0.T
    schur = float(np.max(np.abs(K0) @ w))
    for d in deltas:
        st = _stencil(d)
        Py = [gen.evaluate(y + s, lo, hi) for s in st]
        for k, x in enumerate(xs):
            V = space.basis(x + st) @ B.T[:, lo:hi]
            omega = np.zeros_like(y)
            for P in Py:
                np.maximum(omega, np.abs(V @ P.T - K0[k]).max(axis=0), out=omega)
            moduli[d] = max(moduli[d], float(omega @ w))
    holder = max(moduli[d] / d**theta for d in deltas)
    return SchurEstimate(
        schur_norm=schur,
        modulus_schur=moduli[float(delta)],
        delta=float(delta),
        holder_theta=float(theta),
        combined=schur + holder,
    )
