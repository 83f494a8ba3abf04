"""Closed-form constants and thresholds for concentrated-signal sampling.

Symbols: ``k`` is ``||K||_{S,theta}``, ``d`` the dimension, ``c`` the corkscrew ratio,
``D1``/``D2`` the lower/upper ball-measure constants, ``mu`` the measure of the domain.
Thresholds are returned as real numbers; rounding up to an integer sample count or
iteration index is left to the caller.  Probabilities are reported raw (they may
exceed 1) and clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InfeasibleError


@dataclass(frozen=True)
class TheoryParams:
    """Inputs of the bound evaluators; defaults are the 1-D interval constants.

    ``k_norm`` has no natural default and must be supplied for every evaluator that
    uses it (``kernel_space.estimate_schur`` gives a lower estimate).
    """

    k_norm: float = 1.0
    eps: float = 0.1
    theta: float = 1.0
    d: int = 1
    c: float = 0.5
    D1: float = 2.0
    D2: float = 2.0
    mu_omega: float = 2.0
    N: int = 0
    tau: float = 0.1
    sigma2: float = 1.0
    p: float = 2.0
    f_norm: float = 1.0

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0 < self.tau < 1:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        for name in ("k_norm", "c", "D1", "D2", "mu_omega", "p", "f_norm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d < 1 or self.N < 0 or self.sigma2 < 0:
            raise ValueError("d must be >= 1, N and sigma2 non-negative")

    @classmethod
    def interval(cls, L: float, **kw) -> "TheoryParams":
        """Parameters for ``Omega = [-L, L]`` with Lebesgue measure."""
        return cls(mu_omega=2.0 * L, **kw)

    def with_(self, **kw) -> "TheoryParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class C0Bounds:
    c0: float
    det_error_factor: float
    noisy_noise_factor: float


def contraction_factor(k_norm: float, spacing: float, theta: float = 1.0) -> float:
    """``k^2 spacing^theta``; the iteration contracts when this is below 1."""
    return k_norm**2 * spacing**theta


def c0_and_error(params: TheoryParams, d_h: float) -> C0Bounds:
    """``C0 = k / (1 - k^2 d_h^theta)`` and the error factors ``4 C0 eps`` and ``C0``."""
    q = contraction_factor(params.k_norm, d_h, params.theta)
    if not q < 1:
        raise InfeasibleError(f"k^2 d_H^theta = {q:.4g} >= 1: reconstruction hypothesis violated")
    c0 = params.k_norm / (1.0 - q)
    return C0Bounds(c0=c0, det_error_factor=4.0 * c0 * params.eps, noisy_noise_factor=c0)


def reconstruction_error_bound(params: TheoryParams, d_h: float, noise_norm: float = 0.0) -> float:
    """Bound on ``||g_n - f||_p``: ``4 C0 eps ||f|| + C0 ||xi||_{p,mu}``."""
    b = c0_and_error(params, d_h)
    return b.det_error_factor * params.f_norm + b.noisy_noise_factor * noise_norm


def reconstruction_concentration_bound(params: TheoryParams, d_h: float) -> float:
    """The reconstructions are ``9 C0 eps``-concentrated."""
    return 9.0 * c0_and_error(params, d_h).c0 * params.eps


def sampling_difference_bound(params: TheoryParams, d_h: float) -> float:
    """Bound on the weighted sample norm of ``g_n - f`` on the interior set."""
    b = c0_and_error(params, d_h)
    return 4.0 * b.c0 * (1.0 + params.k_norm * d_h**params.theta) * params.eps * params.f_norm


def stability_hypothesis(params: TheoryParams, d_h: float) -> bool:
    """``d_H < ((1 - eps)/k)^(1/theta)``, under which the lower sampling inequality holds."""
    return d_h < ((1.0 - params.eps) / params.k_norm) ** (1.0 / params.theta)


def stability_constants(params: TheoryParams, d_h: float) -> tuple[float, float]:
    """Lower and upper multipliers ``1 - eps - k d_h^theta`` and ``1 + k d_h^theta``."""
    t = params.k_norm * d_h**params.theta
    return 1.0 - params.eps - t, 1.0 + t


def unweighted_lower_constant(params: TheoryParams, d_h: float) -> float:
    """Lower constant of the unweighted sampling inequality (``p < inf``)."""
    lower, _ = stability_constants(params, d_h)
    return lower / (params.D2 ** (1.0 / params.p) * d_h ** (params.d / params.p))


def exterior_gap_limit(params: TheoryParams) -> float:
    """Largest admissible exterior Hausdorff distance ``min((eps/k)^(1/theta), (2k^2)^(-1/theta))``."""
    k, th = params.k_norm, params.theta
    return min((params.eps / k) ** (1.0 / th), (2.0 * k * k) ** (-1.0 / th))


def full_information_error_bound(k_norm: float, spacing: float, n: int, theta: float = 1.0) -> float:
    """Relative error bound ``(1+q)/(1-q) q^(n+1)`` of the full-information iteration."""
    q = contraction_factor(k_norm, spacing, theta)
    if not q < 1:
        raise InfeasibleError(f"k^2 delta^theta = {q:.4g} >= 1")
    return (1.0 + q) / (1.0 - q) * q ** (n + 1)


def norm_comparison_constant(params: TheoryParams, q: float = math.inf) -> float:
    """``D1^(-1/p + 1/q) k^(1 - p/q)`` bounding ``||f||_q / ||f||_p`` on the space."""
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    return params.D1 ** (-1.0 / params.p + inv_q) * params.k_norm ** (1.0 - params.p * inv_q)


def _tail(prefactor: float, N: int) -> float:
    return prefactor * max(1.0 - 1.0 / prefactor, 0.0) ** N


def random_stability_failure(params: TheoryParams, eps_tilde: float) -> float:
    """Raw failure probability of the random weighted stability inequalities."""
    d, th = params.d, params.theta
    s = (eps_tilde / params.k_norm) ** (d / th)
    return _tail(10.0**d * params.mu_omega / (params.c**d * params.D1 * s), params.N)


def random_sampling_inequality_failure(params: TheoryParams) -> float:
    """Raw failure probability of the unweighted random sampling inequality."""
    d, th = params.d, params.theta
    pref = 10.0**d * (2.0 * params.k_norm) ** (d / th) * params.mu_omega / (params.c**d * params.D1)
    return _tail(pref, params.N)


@dataclass(frozen=True)
class RandomThresholds:
    tau_of_N: float
    tau_of_N_clamped: float
    N0: float
    N1: float


def _reconstruction_prefactor(params: TheoryParams) -> float:
    d, th = params.d, params.theta
    return 10.0**d * (2.0 * params.k_norm**2) ** (d / th) * params.mu_omega / (params.c**d * params.D1)


def random_thresholds(params: TheoryParams) -> RandomThresholds:
    """``tau(mu, N)`` and the sample-size thresholds ``N0`` and ``N1``."""
    d, th, k = params.d, params.theta, params.k_norm
    pref = _reconstruction_prefactor(params)
    tau_n = _tail(pref, params.N)
    denom = params.c**d * params.D1
    n0 = (
        5.0**d * 2.0 ** (d + 1 + d / th) * k ** (d / th) * params.mu_omega / denom
        * math.log(10.0**d * (2.0 * k) ** (d / th) * params.mu_omega / (denom * params.tau))
    )
    n1 = pref * math.log(pref / params.tau)
    return RandomThresholds(tau_n, min(max(tau_n, 0.0), 1.0), n0, n1)


def random_sampling_lower_constant(params: TheoryParams) -> float:
    """Multiplier of ``N ||f||_p^p / mu`` in the high-probability sampling inequality."""
    N = params.N
    if N <= params.tau:
        raise InfeasibleError("N must exceed tau")
    d = params.d
    return (
        (0.5 - params.eps) ** params.p * params.c**d * params.D1
        / (10.0**d * params.D2) / math.log(N / params.tau)
    )


def random_error_bound(params: TheoryParams, q: float = math.inf) -> float:
    """``8 D1^(-1/p+1/q) k^(2-p/q) eps ||f||_p`` for random sampling with ``N >= N1``."""
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    return (
        8.0 * params.D1 ** (-1.0 / params.p + inv_q) * params.k_norm ** (2.0 - params.p * inv_q)
        * params.eps * params.f_norm
    )


def random_bounded_noise_bound(params: TheoryParams, noise_sup: float) -> float:
    """Sup-norm error bound under bounded noise for random sampling with ``N >= N1``."""
    return random_error_bound(params) + 2.0 * params.k_norm * noise_sup


def random_noise_sup_bound(params: TheoryParams) -> float:
    """``10 D1^(-1/p) k^2 eps ||f||_p`` under i.i.d. zero-mean noise."""
    return 10.0 * params.D1 ** (-1.0 / params.p) * params.k_norm**2 * params.eps * params.f_norm


@dataclass(frozen=True)
class NoiseThresholds:
    delta1_tilde: float
    N_min: float


def noise_thresholds(params: TheoryParams) -> NoiseThresholds:
    """Spacing ``delta1~`` and sample count under which i.i.d. noise is averaged out."""
    if not params.sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    d, th, k = params.d, params.theta, params.k_norm
    cap = (2.0 * k * k) ** (-1.0 / th)
    noise_term = (
        params.tau * params.eps**2 / params.sigma2 * params.f_norm**2
        / (params.D2 * params.D1 ** (2.0 / params.p - 1.0))
    ) ** (1.0 / d)
    delta1 = min(cap, noise_term)
    pref = 10.0**d * params.mu_omega / (params.c**d * params.D1 * delta1**d)
    return NoiseThresholds(delta1, pref * math.log(pref / params.tau))
