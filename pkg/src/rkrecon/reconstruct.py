"""Preconstruction and the iterative frame reconstruction in coefficient space.

With ``P`` the matrix of basis values at the sample positions and ``W`` the diagonal of
cell weights, the kernel section ``K(., gamma)`` has coefficients ``B^T phi(gamma)``, so

    preconstruct:  c_0 = B^T P_int^T W_int v
    S_Gamma:       c  ->  B^T P^T W P c       (interior and exterior positions)

and the recursion ``g_n = g_0 + g_{n-1} - S g_{n-1}`` is a matrix iteration of the
size of the basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .errors import DivergenceError, InfeasibleError, UndefinedRatioError
from .kernel_space import KernelSpace, Signal, estimate_schur, l2_norm, region_gram, signal_eval
from .sampling import SamplingSet, weighted_sample_norm

Mode = Literal["interior_only", "oracle_everywhere", "interior_noisy"]
DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class SampleRecord:
    position: float
    weight: float
    value: float

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"sample weight must be positive, got {self.weight}")


@dataclass(frozen=True, eq=False)
class Samples:
    """Columnar sample records: positions, Voronoi weights and (possibly noisy) values."""

    positions: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        arrays = [np.array(a, dtype=float).reshape(-1) for a in (self.positions, self.weights, self.values)]
        if len({a.size for a in arrays}) != 1:
            raise ValueError("positions, weights and values must have equal length")
        if np.any(arrays[1] <= 0):
            raise ValueError("sample weights must be positive")
        for name, a in zip(("positions", "weights", "values"), arrays):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.positions.size

    @classmethod
    def from_records(cls, records: Iterable[SampleRecord]) -> "Samples":
        rs = list(records)
        return cls([r.position for r in rs], [r.weight for r in rs], [r.value for r in rs])

    @classmethod
    def of_signal(cls, space: KernelSpace, sampling: SamplingSet, f: Signal, noise=None) -> "Samples":
        """Interior samples of ``f``, optionally with an additive noise vector."""
        values = signal_eval(space, f, sampling.interior)
        if noise is not None:
            values = values + np.asarray(noise, dtype=float)
        return cls(sampling.interior, sampling.interior_weights, values)

    def records(self) -> list[SampleRecord]:
        return [SampleRecord(float(p), float(w), float(v)) for p, w, v in zip(self.positions, self.weights, self.values)]


def _as_samples(samples) -> Samples:
    if isinstance(samples, Samples):
        return samples
    return Samples.from_records(samples)


def preconstruct(space: KernelSpace, samples) -> Signal:
    """``g_0 = sum_gamma |I_gamma| value(gamma) K(., gamma)``."""
    s = _as_samples(samples)
    if len(s) == 0:
        raise ValueError("preconstruction needs at least one sample")
    P = space.basis(s.positions)
    return Signal(space.gram_inverse.T @ (P.T @ (s.weights * s.values)))


class PreconstructionOperator:
    """``S_Gamma`` for a fixed space and sampling set, assembled once as a matrix."""

    def __init__(self, space: KernelSpace, sampling: SamplingSet):
        self.space = space
        self.sampling = sampling
        self.positions = sampling.positions
        self.weights = sampling.weights
        P = space.basis(self.positions)
        self.matrix = space.gram_inverse.T @ (P.T @ (self.weights[:, None] * P))

    def __call__(self, g: Signal) -> Signal:
        return Signal(self.matrix @ self.space.check(g))


def apply_S(space: KernelSpace, sampling: SamplingSet, g: Signal) -> Signal:
    """``S_Gamma g = sum_gamma |I_gamma| g(gamma) K(., gamma)`` over interior and exterior points."""
    values = signal_eval(space, g, sampling.positions)
    P = space.basis(sampling.positions)
    return Signal(space.gram_inverse.T @ (P.T @ (sampling.weights * values)))


@dataclass(frozen=True, eq=False)
class ReconstructionRun:
    iterates: list[Signal]
    residual_norms: list[float]
    mode: Mode
    metadata: dict = field(default_factory=dict)

    @property
    def final(self) -> Signal:
        return self.iterates[-1]


def iterate(
    space: KernelSpace,
    sampling: SamplingSet,
    samples=None,
    n_iters: int = 3,
    mode: Mode = "interior_only",
    truth: Signal | None = None,
    operator: PreconstructionOperator | None = None,
) -> ReconstructionRun:
    """Run ``g_n = g_0 + g_{n-1} - S_Gamma g_{n-1}`` for ``n = 1..n_iters``.

    ``interior_only``/``interior_noisy`` start from the preconstruction of ``samples``;
    ``oracle_everywhere`` starts from ``S_Gamma truth``.  Raises ``DivergenceError`` when a
    step exceeds ``1e6 ||g_0||``.
    """
    if n_iters < 0:
        raise ValueError(f"n_iters must be non-negative, got {n_iters}")
    S = operator or PreconstructionOperator(space, sampling)
    if mode == "oracle_everywhere":
        if truth is None:
            raise ValueError("oracle_everywhere needs the ground-truth signal")
        g0 = S(truth)
    elif mode in ("interior_only", "interior_noisy"):
        if samples is None:
            raise ValueError(f"{mode} needs interior samples")
        g0 = preconstruct(space, samples)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    G = region_gram(space)
    c0 = g0.coeffs
    threshold = DIVERGENCE_FACTOR * math.sqrt(max(float(c0 @ G @ c0), 0.0))
    iterates = [g0]
    residuals: list[float] = []
    c = c0
    for n in range(1, n_iters + 1):
        nxt = c0 + c - S.matrix @ c
        d = nxt - c
        r = math.sqrt(max(float(d @ G @ d), 0.0))
        if not r <= threshold:
            raise DivergenceError(n, r, threshold)
        residuals.append(r)
        iterates.append(Signal(nxt))
        c = nxt
    return ReconstructionRun(iterates, residuals, mode)


def required_iterations(
    eps: float,
    k_norm: float,
    theta: float = 1.0,
    d_h: float | None = None,
    rule: Literal["general", "simplified"] = "general",
) -> int:
    """Smallest ``n >= 0`` with ``n + 1 >= (ln(1/eps) - ln k) / denominator``.

    The denominator is ``theta ln(1/d_h) - 2 ln k`` (general) or ``ln 2`` (simplified).
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if rule == "general":
        if d_h is None or not d_h > 0:
            raise ValueError("the general rule needs a positive Hausdorff distance")
        denom = theta * math.log(1.0 / d_h) - 2.0 * math.log(k_norm)
        if not denom > 0:
            raise InfeasibleError(f"k^2 d_H^theta >= 1 (denominator {denom:.4g})")
    elif rule == "simplified":
        denom = math.log(2.0)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    ratio = (math.log(1.0 / eps) - math.log(k_norm)) / denom
    return max(0, math.ceil(ratio - 1e-12) - 1)


def rae(space: KernelSpace, g: Signal, f: Signal) -> float:
    """Relative approximation error ``||g - f||_2 / ||f||_2``."""
    ref = l2_norm(space, f)
    if ref == 0.0:
        raise UndefinedRatioError("relative error against the zero signal")
    return l2_norm(space, g - f) / ref


def rae_series(space: KernelSpace, run: ReconstructionRun, f: Signal) -> np.ndarray:
    """RAE of every iterate, sharing one quadrature Gram."""
    G = region_gram(space)
    c = space.check(f)
    ref = math.sqrt(max(float(c @ G @ c), 0.0))
    if ref == 0.0:
        raise UndefinedRatioError("relative error against the zero signal")
    D = np.stack([g.coeffs for g in run.iterates]) - c
    return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", D, G, D), 0.0)) / ref


@dataclass(frozen=True)
class StabilityMargins:
    lower: float
    middle: float
    upper: float
    hypothesis: bool
    lower_holds: bool
    upper_holds: bool

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds


def stability_margins(
    space: KernelSpace,
    L: float,
    sampling: SamplingSet,
    f: Signal,
    g: Signal,
    eps: float,
    k_norm: float | None = None,
    theta: float = 1.0,
) -> StabilityMargins:
    """Both sides of the weighted bi-Lipschitz sampling inequality for ``f`` and ``g``.

    ``k_norm`` defaults to the space's combined Schur estimate.  ``hypothesis`` reports
    whether ``d_H < ((1 - eps)/k)^(1/theta)``; only then is the lower side guaranteed.
    """
    if k_norm is None:
        k_norm = estimate_schur(space, theta=theta).combined
    d_h = sampling.hausdorff
    t = k_norm * d_h**theta
    diff = f - g
    nd = l2_norm(space, diff)
    m = min(l2_norm(space, f), l2_norm(space, g))
    lower = (1.0 - eps - t) * nd - 2.0 * eps * m
    middle = weighted_sample_norm(signal_eval(space, diff, sampling.interior), sampling.interior_weights)
    upper = (1.0 + t) * nd
    slack = 1e-12 * max(nd, 1.0)
    return StabilityMargins(
        lower=lower,
        middle=middle,
        upper=upper,
        hypothesis=d_h < ((1.0 - eps) / k_norm) ** (1.0 / theta),
        lower_holds=lower <= middle + slack,
        upper_holds=middle <= upper + slack,
    )
