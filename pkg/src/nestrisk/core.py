"""Two-layer sampling engine.

A :class:`ResponseModel` pairs a belief sampler over the input parameter
``theta`` with a conditional response sampler ``h(theta; xi)``.  The engine
draws ``N`` outer scenarios on stream 0 and, for scenario ``i``, ``M`` inner
responses on stream ``i + 1``; only per-scenario summaries (mean, unbiased
variance) are kept.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numba as nb
import numpy as np

from .rng import RngStream

__all__ = [
    "SimulationError",
    "NonFiniteSampleError",
    "SamplerError",
    "ModelTruth",
    "ResponseModel",
    "FunctionModel",
    "NestedSampleSet",
    "SimulationCost",
    "draw_outer",
    "simulate_nested",
    "total_cost",
    "mean_var",
    "batch_means_var",
]


class SimulationError(RuntimeError):
    """Raised when a sampler fails; carries the offending scenario index."""

    def __init__(self, message, scenario=None, draw=None):
        super().__init__(message)
        self.scenario = scenario
        self.draw = draw


class NonFiniteSampleError(SimulationError):
    pass


class SamplerError(SimulationError):
    pass


@dataclass(frozen=True)
class ModelTruth:
    """Closed-form facts about a model's mean-response distribution.

    ``density`` is the pdf ``f`` of ``H(theta)``; ``cond_var(y)`` is
    ``E[tau_theta^2 | H(theta) = y]``.  ``bias_fn`` is the function
    ``Lambda(t) = f(t) * cond_var(t) / 2`` and ``bias_fn_prime`` its
    derivative; when the latter is omitted a central difference is used.
    """

    var: Callable[[float], float]
    cvar: Callable[[float], float]
    density: Callable[[float], float]
    cond_var: Callable[[float], float]
    mean_response: Optional[Callable] = None
    support: tuple[float, float] = (-np.inf, np.inf)
    bias_fn: Optional[Callable[[float], float]] = None
    bias_fn_prime: Optional[Callable[[float], float]] = None

    def lam(self, t: float) -> float:
        if self.bias_fn is not None:
            return float(self.bias_fn(t))
        return 0.5 * float(self.density(t)) * float(self.cond_var(t))

    def lam_prime(self, t: float) -> float:
        if self.bias_fn_prime is not None:
            return float(self.bias_fn_prime(t))
        h = 1e-5 * max(1.0, abs(t))
        return (self.lam(t + h) - self.lam(t - h)) / (2 * h)


@nb.njit(cache=True)
def mean_var(x):
    """Sequential mean and unbiased variance; the single summation rule used
    by every inner-sample summary so that all paths agree bit for bit.

    The sum is shifted by the first draw, which makes a constant sample
    return its value and a zero variance exactly.
    """
    m = x.shape[0]
    x0 = x[0]
    s = 0.0
    for j in range(m):
        s += x[j] - x0
    mean = x0 + s / m
    if m < 2:
        return mean, 0.0
    ss = 0.0
    for j in range(m):
        d = x[j] - mean
        ss += d * d
    return mean, ss / (m - 1)


@nb.njit(cache=True)
def batch_means_var(x, batches):
    """Batch-means estimate of ``M * Var(mean(x))`` for a correlated series.

    The series is cut into ``batches`` contiguous, nearly equal batches;
    returns ``sum_k n_k (B_k - mean)^2 / (batches - 1)``.  Reduces to the
    unbiased sample variance when ``batches == len(x)``.
    """
    m = x.shape[0]
    mean = mean_var(x)[0]
    b = min(batches, m)
    if b < 2:
        return 0.0
    acc = 0.0
    lo = 0
    for k in range(b):
        hi = ((k + 1) * m) // b
        s = 0.0
        for j in range(lo, hi):
            s += x[j]
        d = s / (hi - lo) - mean
        acc += (hi - lo) * d * d
        lo = hi
    return acc / (b - 1)


class ResponseModel:
    """Base class for nested simulation models.

    Subclasses implement :meth:`sample_parameters` and
    :meth:`sample_responses`.  They may override :meth:`summarize` with a
    compiled kernel, provided it reproduces the per-scenario path exactly.
    """

    truth: Optional[ModelTruth] = None

    def sample_parameters(self, n: int, stream: RngStream) -> np.ndarray:
        raise NotImplementedError

    def sample_responses(self, theta, m: int, stream: RngStream) -> np.ndarray:
        raise NotImplementedError

    def summarize_draws(self, draws: np.ndarray):
        """Inner mean and variance estimate of one scenario's draws."""
        return mean_var(draws)

    def summarize(self, thetas: np.ndarray, m: int, seed: int, first_stream: int):
        """Inner means and variances for ``thetas``; scenario ``k`` of the
        block uses stream ``first_stream + k``."""
        n = thetas.shape[0]
        means = np.empty(n)
        variances = np.empty(n)
        for k in range(n):
            idx = first_stream + k - 1
            stream = RngStream(seed, first_stream + k)
            try:
                draws = np.asarray(self.sample_responses(thetas[k], m, stream), dtype=float)
            except SimulationError as exc:
                if exc.scenario is None:
                    exc.scenario = idx
                raise
            if draws.shape != (m,):
                raise SamplerError(
                    f"response sampler returned shape {draws.shape}, expected ({m},)",
                    scenario=idx)
            bad = np.flatnonzero(~np.isfinite(draws))
            if bad.size:
                raise NonFiniteSampleError(
                    f"non-finite response at scenario {idx}, draw {bad[0]}",
                    scenario=idx, draw=int(bad[0]))
            means[k], variances[k] = self.summarize_draws(draws)
        return means, variances


class FunctionModel(ResponseModel):
    """A :class:`ResponseModel` built from two plain callables.

    Parameters
    ----------
    belief_sampler : callable ``(n, stream) -> array``
        Draws ``n`` parameter scenarios.
    response_sampler : callable ``(theta, m, stream) -> array``
        Draws ``m`` responses for one scenario.
    truth : ModelTruth, optional
    """

    def __init__(self, belief_sampler, response_sampler, truth=None):
        self._belief = belief_sampler
        self._response = response_sampler
        self.truth = truth

    def sample_parameters(self, n, stream):
        return self._belief(n, stream)

    def sample_responses(self, theta, m, stream):
        return self._response(theta, m, stream)


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NestedSampleSet:
    """Outer scenarios with their inner-sample summaries.

    ``inner_var`` is the model's estimate of ``tau_theta^2``: for i.i.d.
    inner draws the unbiased (``M - 1`` denominator) variance.  It is zero
    when ``inner_count == 1`` and must not be used in that case.
    """

    scenarios: np.ndarray
    inner_mean: np.ndarray
    inner_var: np.ndarray
    inner_count: int

    def __post_init__(self):
        n = len(self.inner_mean)
        if n < 1:
            raise ValueError("a sample set needs at least one scenario")
        if len(self.scenarios) != n or len(self.inner_var) != n:
            raise ValueError("scenarios, inner_mean and inner_var must have equal length")
        if int(self.inner_count) < 1:
            raise ValueError("inner_count must be >= 1")
        object.__setattr__(self, "scenarios", _readonly(self.scenarios))
        object.__setattr__(self, "inner_mean", _readonly(np.asarray(self.inner_mean, dtype=float)))
        object.__setattr__(self, "inner_var", _readonly(np.asarray(self.inner_var, dtype=float)))
        object.__setattr__(self, "inner_count", int(self.inner_count))
        if np.any(self.inner_var < 0):
            raise ValueError("inner variances must be non-negative")

    @property
    def n(self) -> int:
        return len(self.inner_mean)

    @property
    def m(self) -> int:
        return self.inner_count

    def __eq__(self, other):
        if not isinstance(other, NestedSampleSet):
            return NotImplemented
        return (self.inner_count == other.inner_count
                and np.array_equal(self.scenarios, other.scenarios)
                and np.array_equal(self.inner_mean, other.inner_mean)
                and np.array_equal(self.inner_var, other.inner_var))

    __hash__ = None


@dataclass(frozen=True)
class SimulationCost:
    """Linear cost model ``c1 * N + c2 * N * M``."""

    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if not self.c1 >= 0:
            raise ValueError("c1 must be >= 0")
        if not self.c2 > 0:
            raise ValueError("c2 must be > 0")


_COST_LIMIT = 2**64


def total_cost(cost: SimulationCost, n: int, m: int):
    """``c1 * n + c2 * n * m``; exact for integer costs."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    value = cost.c1 * n + cost.c2 * n * m
    if isinstance(value, int):
        if value >= _COST_LIMIT:
            raise OverflowError(f"cost {value} exceeds the 64-bit accumulator")
    elif not math.isfinite(value):
        raise OverflowError("cost overflowed")
    return value


def _outer_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        if rng.stream_id != 0:
            raise ValueError("the experiment stream must be stream 0 (the outer lane)")
        return RngStream(rng.seed, 0)
    return RngStream(int(rng), 0)


def draw_outer(model: ResponseModel, n: int, rng) -> np.ndarray:
    """Draw ``n`` i.i.d. parameter scenarios on the outer lane of ``rng``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    stream = _outer_stream(rng)
    thetas = np.asarray(model.sample_parameters(int(n), stream))
    if thetas.shape[0] != n:
        raise SamplerError(f"belief sampler returned {thetas.shape[0]} scenarios, expected {n}")
    return thetas


def simulate_nested(model: ResponseModel, n: int, m: int, rng, threads: int = 1,
                    chunk: Optional[int] = None) -> NestedSampleSet:
    """Run the nested experiment.

    Parameters
    ----------
    model : ResponseModel
    n, m : int
        Outer and inner sample sizes.
    rng : RngStream or int
        Experiment seed (stream 0 of it is the outer lane).
    threads : int
        Worker threads; the result does not depend on it.
    chunk : int, optional
        Scenarios per work item.

    Returns
    -------
    NestedSampleSet
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    stream = _outer_stream(rng)
    thetas = draw_outer(model, n, stream)
    seed = stream.seed
    if threads <= 1 and chunk is None:
        means, variances = model.summarize(thetas, m, seed, 1)
    else:
        size = chunk or max(1, math.ceil(n / (4 * max(threads, 1))))
        starts = list(range(0, n, size))

        def work(lo):
            return model.summarize(thetas[lo:lo + size], m, seed, lo + 1)

        with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
            parts = list(pool.map(work, starts))
        means = np.concatenate([p[0] for p in parts])
        variances = np.concatenate([p[1] for p in parts])
    return NestedSampleSet(thetas, means, variances, m)
