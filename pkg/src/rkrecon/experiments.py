"""Monte Carlo campaigns on the concentrated-signal family.

A trial draws, from its own seed ``master_seed + trial_index`` and in this order: the
basis jitter, the signal coefficients, the interior sampling set and the sample noise.
Trials are independent, so campaigns may run them on a thread pool without changing
any result.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import DivergenceError, UnsupportedAlphaError
from .kernel_space import (
    KernelSpace,
    QuadratureSpec,
    Signal,
    concentration_ratio,
    l2_norm,
    make_space,
)
from .reconstruct import PreconstructionOperator, ReconstructionRun, Samples, iterate, rae_series
from .sampling import (
    DEFAULT_EXTERIOR_EXTENT,
    SamplingSet,
    deterministic_interior,
    interior_set,
    random_interior,
)

# Concentration constants C_alpha of the target ratio C_alpha L^(-max(alpha, 1/2)).
C_ALPHA = {0.0: 1.15, 0.2: 1.0, 0.4: 0.75, 0.6: 0.80, 0.8: 1.45}
BASIS_PAD = {"gaussian": 20, "hat": 5}
SUCCESS_ITER = {"deterministic": 3, "random": 6, "random_noisy": 6}

SamplingMode = Literal["deterministic", "random", "random_noisy"]


def _c_alpha(alpha: float) -> float:
    for a, c in C_ALPHA.items():
        if math.isclose(alpha, a, abs_tol=1e-9):
            return c
    raise UnsupportedAlphaError(f"no tabulated concentration constant for alpha={alpha}; use one of {sorted(C_ALPHA)}")


def epsilon_target(L: float, alpha: float) -> float:
    """``C_alpha L^(-max(alpha, 1/2))``."""
    return _c_alpha(alpha) * L ** (-max(alpha, 0.5))


def exterior_gap(L: float, alpha: float) -> float:
    return 0.5 * epsilon_target(L, alpha)


def noise_amplitude(L: float, alpha: float) -> float:
    """Default half-width ``L^min(1/2 - alpha, 0) / 2`` of the uniform sample noise."""
    return 0.5 * L ** min(0.5 - alpha, 0.0)


def campaign_space(
    L: float,
    rng=None,
    kind: str = "gaussian",
    pad: int | None = None,
    quadrature: QuadratureSpec | None = None,
) -> KernelSpace:
    """Space on ``[-(L + pad), L + pad]``; jittered from ``rng`` when one is given."""
    pad = BASIS_PAD[kind] if pad is None else pad
    top = math.ceil(L) + pad
    return make_space(kind, -top, top, jitter_seed=rng if kind == "gaussian" else None, quadrature=quadrature)


def make_concentrated_signal(space: KernelSpace, L: float, alpha: float, rng) -> Signal:
    """``sum_{|i| <= L} r_i (1 + |i|)^(-alpha) phi_i`` with ``r_i`` uniform on ``[-1,-1/2] ∪ [1/2,1]``."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    top = math.floor(L)
    if space.index_lo > -top or space.index_hi < top:
        raise ValueError(f"space indices [{space.index_lo}, {space.index_hi}] do not cover [-{top}, {top}]")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    i = np.arange(-top, top + 1)
    s = rng.uniform(-1.0, 1.0, i.size)
    r = np.sign(s) * (0.5 + 0.5 * np.abs(s))
    c = np.zeros(space.size)
    c[i - space.index_lo] = r * (1.0 + np.abs(i)) ** (-alpha)
    return Signal(c)


@dataclass(frozen=True)
class ExperimentSpec:
    L: float
    alpha: float
    n_iters: int = 3
    trials: int = 50
    sampling: SamplingMode = "deterministic"
    N: int | None = None
    noise_amp: float | None = None
    master_seed: int = 0
    success_iter: int | None = None
    jitter: bool = True
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    exterior_extent: float = DEFAULT_EXTERIOR_EXTENT
    exterior_gap: float | None = None
    deterministic_scale: float = 1.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if not self.L >= 1:
            raise ValueError(f"L must be at least 1, got {self.L}")
        if self.n_iters < 0:
            raise ValueError("n_iters must be non-negative")
        if self.sampling not in SUCCESS_ITER:
            raise ValueError(f"unknown sampling mode {self.sampling!r}")
        if self.sampling != "deterministic" and (self.N is None or self.N < 2):
            raise ValueError(f"{self.sampling} sampling needs N >= 2")
        _c_alpha(self.alpha)

    @property
    def eps_target(self) -> float:
        return epsilon_target(self.L, self.alpha)

    @property
    def gap(self) -> float:
        return self.exterior_gap if self.exterior_gap is not None else exterior_gap(self.L, self.alpha)

    @property
    def noise(self) -> float:
        if self.sampling != "random_noisy":
            return 0.0
        return noise_amplitude(self.L, self.alpha) if self.noise_amp is None else self.noise_amp

    @property
    def success_index(self) -> int:
        n = SUCCESS_ITER[self.sampling] if self.success_iter is None else self.success_iter
        return min(n, self.n_iters)

    def trial_seed(self, trial_index: int) -> int:
        return self.master_seed + trial_index


@dataclass(frozen=True, eq=False)
class TrialSetup:
    """Everything one trial draws before reconstruction starts."""

    seed: int
    space: KernelSpace
    signal: Signal
    sampling: SamplingSet
    samples: Samples
    noise: np.ndarray


@dataclass(frozen=True)
class TrialResult:
    trial_index: int
    seed: int
    rae_by_iter: tuple[float, ...]
    concentration_measured: float
    eps_target: float
    success: bool
    success_iter: int
    n_samples: int
    hausdorff: float


def prepare_trial(spec: ExperimentSpec, trial_index: int) -> TrialSetup:
    seed = spec.trial_seed(trial_index)
    rng = np.random.default_rng(seed)
    space = campaign_space(spec.L, rng if spec.jitter else None, quadrature=spec.quadrature)
    f = make_concentrated_signal(space, spec.L, spec.alpha, rng)
    if spec.sampling == "deterministic":
        interior = deterministic_interior(spec.L, rng, scale=spec.deterministic_scale)
    else:
        interior = random_interior(spec.L, spec.N, rng)
    sampling = interior.with_exterior(spec.gap, spec.exterior_extent)
    noise = np.zeros(sampling.size)
    if spec.sampling == "random_noisy":
        amp = spec.noise
        noise = rng.uniform(-amp, amp, sampling.size)
    samples = Samples.of_signal(space, sampling, f, noise if spec.sampling == "random_noisy" else None)
    return TrialSetup(seed, space, f, sampling, samples, noise)


def reconstruct_trial(setup: TrialSetup, spec: ExperimentSpec) -> ReconstructionRun:
    mode = "interior_noisy" if spec.sampling == "random_noisy" else "interior_only"
    return iterate(setup.space, setup.sampling, setup.samples, spec.n_iters, mode)


def run_trial(spec: ExperimentSpec, trial_index: int) -> TrialResult:
    setup = prepare_trial(spec, trial_index)
    try:
        run = reconstruct_trial(setup, spec)
    except DivergenceError as exc:
        raise exc.with_trial(trial_index) from exc
    errors = rae_series(setup.space, run, setup.signal)
    k = spec.success_index
    return TrialResult(
        trial_index=trial_index,
        seed=setup.seed,
        rae_by_iter=tuple(float(e) for e in errors),
        concentration_measured=concentration_ratio(setup.space, setup.signal, spec.L),
        eps_target=spec.eps_target,
        success=bool(errors[k] <= spec.eps_target),
        success_iter=k,
        n_samples=setup.sampling.size,
        hausdorff=setup.sampling.hausdorff,
    )


def worker_count(workers: int | None = None) -> int:
    """Explicit ``workers``, else ``RKS_THREADS`` (0 or unset = one per CPU)."""
    if workers is None:
        raw = os.environ.get("RKS_THREADS", "0").strip() or "0"
        try:
            workers = int(raw)
        except ValueError as exc:
            raise ValueError(f"RKS_THREADS must be an integer, got {raw!r}") from exc
    if workers < 0:
        raise ValueError("worker count must be non-negative")
    return workers or (os.cpu_count() or 1)


def run_campaign(spec: ExperimentSpec, workers: int | None = None) -> list[TrialResult]:
    """One ``TrialResult`` per trial, ordered by trial index."""
    n = min(worker_count(workers), spec.trials)
    if n == 1:
        return [run_trial(spec, t) for t in range(spec.trials)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda t: run_trial(spec, t), range(spec.trials)))


def aggregate(results: Sequence[TrialResult], kind: str = "mean_rae", n: int | None = None) -> float:
    """Mean RAE at iteration ``n`` (default: last) or success percentage."""
    if not results:
        raise ValueError("cannot aggregate an empty result set")
    ordered = sorted(results, key=lambda r: r.trial_index)
    if kind == "mean_rae":
        idx = -1 if n is None else n
        return float(np.mean([r.rae_by_iter[idx] for r in ordered]))
    if kind == "success_rate":
        return 100.0 * sum(r.success for r in ordered) / len(ordered)
    raise ValueError(f"unknown aggregate kind {kind!r}")


@dataclass(frozen=True)
class Remark34Result:
    max_pair_error: float
    eps_measured: float
    identical: bool
    lower_bound: float
    signal_norm: float


def remark34_demo(
    space: KernelSpace,
    R: int,
    delta: float,
    sampling: SamplingSet | None = None,
    n_iters: int = 3,
    exterior_gap: float = 0.25,
) -> Remark34Result:
    """Two hat signals that agree on ``[-R, R]`` cannot both be recovered from samples there.

    ``f± = phi_0 ± delta phi_{R+1}``; the interior samples coincide, so the reconstructions
    coincide and one of them is at least ``||f+ - f-||/2 = delta ||h||_2`` away from its target.
    """
    if space.kind != "hat":
        raise ValueError("the demonstration uses the hat space")
    if R < 2:
        raise ValueError(f"R must be at least 2, got {R}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if space.index_lo > -R or space.index_hi < R + 2:
        raise ValueError(f"space indices must cover [-{R}, {R + 2}]")
    if sampling is None:
        sampling = interior_set(R, np.arange(-R + 0.25, R, 0.5))
    if sampling.exterior.size == 0:
        sampling = sampling.with_exterior(exterior_gap)
    if sampling.interior[0] < -R or sampling.interior[-1] > R:
        raise ValueError("interior samples must lie in [-R, R]")

    f_plus = space.unit(0) + delta * space.unit(R + 1)
    f_minus = space.unit(0) - delta * space.unit(R + 1)
    op = PreconstructionOperator(space, sampling)
    runs = [
        iterate(space, sampling, Samples.of_signal(space, sampling, f), n_iters, operator=op)
        for f in (f_plus, f_minus)
    ]
    g_plus, g_minus = runs[0].final, runs[1].final
    identical = bool(np.array_equal(g_plus.coeffs, g_minus.coeffs))
    err = max(l2_norm(space, g_plus - f_plus), l2_norm(space, g_minus - f_minus))
    return Remark34Result(
        max_pair_error=err,
        eps_measured=concentration_ratio(space, f_plus, R),
        identical=identical,
        lower_bound=0.5 * l2_norm(space, f_plus - f_minus),
        signal_norm=l2_norm(space, f_plus),
    )


@dataclass(frozen=True)
class SweepPoint:
    N: int
    mean_rae: float
    trials: int
    noise_amp: float


def noise_sweep(
    L: float,
    alpha: float,
    N_grid: Sequence[int],
    trials: int,
    master_seed: int,
    noise_amp: float | None = None,
    n: int = 6,
    workers: int | None = None,
) -> list[SweepPoint]:
    """Mean RAE at iteration ``n`` of noisy random campaigns across sample sizes."""
    grid = [int(N) for N in N_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("N_grid must be strictly increasing")
    amp = noise_amplitude(L, alpha) if noise_amp is None else noise_amp
    points = []
    for N in grid:
        spec = ExperimentSpec(
            L=L, alpha=alpha, n_iters=n, trials=trials, sampling="random_noisy",
            N=N, noise_amp=amp, master_seed=master_seed,
        )
        points.append(SweepPoint(N, aggregate(run_campaign(spec, workers), "mean_rae", n), trials, amp))
    return points

