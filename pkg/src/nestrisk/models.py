"""Benchmark response models.

``NormalNormalModel``
    ``theta ~ N(0, 1)`` and ``h(theta; xi) = theta + xi`` with
    ``xi ~ N(0, 1)``; every risk and variance quantity is known in closed form.

``MM1Model``
    Mean sojourn time of an M/M/1 queue whose arrival rate ``lambda`` and
    service rate ``mu`` carry Gamma posteriors from exponential data under
    the ``1/lambda``, ``1/mu`` reference priors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numba as nb
import numpy as np
from scipy import stats

from .core import (ModelTruth, NonFiniteSampleError, ResponseModel, SamplerError,
                   batch_means_var, mean_var)
from .rng import RngStream, _exponential_at, _gamma_at, _normal_at

__all__ = [
    "NormalNormalModel",
    "GammaPosterior",
    "PointMass",
    "DataSet",
    "posterior_from_data",
    "generate_data",
    "read_observations",
    "write_observations",
    "read_dataset",
    "lindley_sojourn_times",
    "simulate_sojourn_mean",
    "MM1Model",
    "mm1_model",
]


# --------------------------------------------------------------------------
# normal + normal


@nb.njit(cache=True, nogil=True)
def _nn_summaries(thetas, m, seed, first_stream, means, variances):
    buf = np.empty(m)
    for k in range(thetas.shape[0]):
        stream = np.uint64(first_stream + k)
        for j in range(m):
            buf[j] = thetas[k] + _normal_at(seed, stream, np.uint64(j))
        means[k], variances[k] = mean_var(buf)


@nb.njit(cache=True, nogil=True)
def _nn_exact_summaries(thetas, m, seed, first_stream, means, variances):
    root_m = math.sqrt(m)
    for k in range(thetas.shape[0]):
        stream = np.uint64(first_stream + k)
        means[k] = thetas[k] + _normal_at(seed, stream, np.uint64(0)) / root_m
        if m < 2:
            variances[k] = 0.0
        else:
            g, _ = _gamma_at(seed, stream, np.uint64(1), 0.5 * (m - 1))
            variances[k] = 2.0 * g / (m - 1)


def _normal_normal_truth() -> ModelTruth:
    phi = stats.norm.pdf
    return ModelTruth(
        var=lambda a: float(stats.norm.ppf(a)),
        cvar=lambda a: float(phi(stats.norm.ppf(a)) / (1.0 - a)),
        density=lambda t: float(phi(t)),
        cond_var=lambda t: 1.0,
        mean_response=lambda theta: theta,
        bias_fn=lambda t: 0.5 * float(phi(t)),
        bias_fn_prime=lambda t: -0.5 * t * float(phi(t)),
    )


class NormalNormalModel(ResponseModel):
    """Standard normal scenarios plus standard normal inner noise.

    Parameters
    ----------
    exact_summaries : bool
        Draw each scenario's inner mean and unbiased variance directly from
        their sampling distributions (``N(theta, 1/M)`` and
        ``chi2_{M-1} / (M-1)``) instead of from ``M`` individual draws.
        Same distribution at O(1) cost per scenario; the individual draws
        are then not materialised.
    """

    def __init__(self, exact_summaries: bool = False):
        self.exact_summaries = bool(exact_summaries)
        self.truth = _normal_normal_truth()

    def __repr__(self):
        return f"NormalNormalModel(exact_summaries={self.exact_summaries})"

    def sample_parameters(self, n, stream):
        return stream.standard_normal(n)

    def sample_responses(self, theta, m, stream):
        return theta + stream.standard_normal(m)

    def summarize(self, thetas, m, seed, first_stream):
        thetas = np.ascontiguousarray(thetas, dtype=float)
        means = np.empty(thetas.shape[0])
        variances = np.empty(thetas.shape[0])
        kernel = _nn_exact_summaries if self.exact_summaries else _nn_summaries
        kernel(thetas, int(m), np.uint64(seed), int(first_stream), means, variances)
        return means, variances


# --------------------------------------------------------------------------
# M/M/1 with Bayesian input uncertainty


@dataclass(frozen=True)
class GammaPosterior:
    """Gamma distribution in shape/rate form."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("gamma shape and rate must be positive")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def frozen(self):
        return stats.gamma(self.shape, scale=1.0 / self.rate)


@dataclass(frozen=True)
class PointMass:
    """Degenerate belief at a known rate."""

    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("rate must be positive")

    @property
    def mean(self) -> float:
        return self.value


Belief = Union[GammaPosterior, PointMass]


@dataclass(frozen=True)
class DataSet:
    """Observed inter-arrival times ``x`` and service times ``y``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        for name in ("x", "y"):
            v = np.asarray(getattr(self, name), dtype=float).ravel()
            if v.size < 1:
                raise ValueError(f"{name}: need at least one observation")
            bad = np.flatnonzero(~(np.isfinite(v) & (v > 0)))
            if bad.size:
                raise ValueError(f"{name}[{bad[0]}] = {v[bad[0]]} is not a positive number")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def n(self) -> int:
        return self.x.size


def posterior_from_data(data: DataSet) -> tuple[GammaPosterior, GammaPosterior]:
    """Gamma posteriors ``(shape n, rate sum(x))`` for lambda and mu."""
    return (GammaPosterior(float(data.x.size), float(data.x.sum())),
            GammaPosterior(float(data.y.size), float(data.y.sum())))


def generate_data(lambda0: float, mu0: float, n: int, rng: RngStream) -> DataSet:
    """Synthetic exponential data at true rates; ``x`` then ``y`` from ``rng``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = rng.exponential(lambda0, n)
    y = rng.exponential(mu0, n)
    return DataSet(x, y)


def read_observations(path) -> np.ndarray:
    """Read one positive decimal per line; blank lines are skipped."""
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        try:
            v = float(s)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: cannot parse {s!r}") from None
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{path}:{lineno}: observation must be positive, got {s}")
        values.append(v)
    if not values:
        raise ValueError(f"{path}: no observations")
    return np.array(values)


def write_observations(path, values) -> None:
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in values))


def read_dataset(x_path, y_path) -> DataSet:
    x = read_observations(x_path)
    y = read_observations(y_path)
    if x.size != y.size:
        raise ValueError(f"inter-arrival and service files differ in length ({x.size} vs {y.size})")
    return DataSet(x, y)


@nb.njit(cache=True)
def lindley_sojourn_times(services, interarrivals):
    """Sojourn times of customers from an empty queue.

    ``W_1 = 0``, ``W_{k+1} = max(0, W_k + S_k - A_{k+1})``, ``T_k = W_k + S_k``;
    ``interarrivals[k]`` is the gap between customers ``k`` and ``k + 1``.
    """
    n = services.shape[0]
    out = np.empty(n)
    w = 0.0
    for k in range(n):
        out[k] = w + services[k]
        if k + 1 < n:
            w = max(0.0, w + services[k] - interarrivals[k])
    return out


@nb.njit(cache=True, nogil=True)
def _sojourn_path(seed, stream, start, lam, mu, out):
    # customer k: service at position start + 2k, next gap at start + 2k + 1
    w = 0.0
    pos = start
    for k in range(out.shape[0]):
        s = _exponential_at(seed, stream, pos) / mu
        a = _exponential_at(seed, stream, pos + np.uint64(1)) / lam
        pos += np.uint64(2)
        out[k] = w + s
        w = max(0.0, w + s - a)
    return pos


def simulate_sojourn_mean(lam: float, mu: float, cycles: int, rng: RngStream) -> float:
    """Mean sojourn time of the first ``cycles`` customers of an empty M/M/1 queue.

    Consumes ``2 * cycles`` positions of ``rng``.
    """
    if not 0 < lam < mu:
        raise ValueError(f"unstable queue: need 0 < lambda < mu, got lambda={lam}, mu={mu}")
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    out = np.empty(int(cycles))
    end = _sojourn_path(np.uint64(rng.seed), np.uint64(rng.stream_id),
                        np.uint64(rng.position), float(lam), float(mu), out)
    rng.position = int(end)
    return mean_var(out)[0]


@nb.njit(cache=True)
def _draw_rate(seed, pos, shape, rate, fixed):
    if fixed > 0.0:
        return fixed, pos
    g, pos = _gamma_at(seed, np.uint64(0), pos, shape)
    return g / rate, pos


@nb.njit(cache=True, nogil=True)
def _mm1_beliefs(seed, start, n, lam_shape, lam_rate, lam_fixed,
                 mu_shape, mu_rate, mu_fixed, max_redraws, out):
    pos = start
    for i in range(n):
        tries = 0
        while True:
            lam, pos = _draw_rate(seed, pos, lam_shape, lam_rate, lam_fixed)
            mu, pos = _draw_rate(seed, pos, mu_shape, mu_rate, mu_fixed)
            if lam < mu:
                out[i, 0] = lam
                out[i, 1] = mu
                break
            tries += 1
            if tries >= max_redraws:
                return i, pos
    return -1, pos


@nb.njit(cache=True, nogil=True)
def _mm1_summaries(thetas, m, cycles, replicate, batches, seed, first_stream, means, variances):
    if replicate:
        buf = np.empty(m)
        path = np.empty(cycles)
    else:
        buf = np.empty(m)
        path = buf
    for k in range(thetas.shape[0]):
        stream = np.uint64(first_stream + k)
        lam = thetas[k, 0]
        mu = thetas[k, 1]
        if replicate:
            pos = np.uint64(0)
            for j in range(m):
                pos = _sojourn_path(seed, stream, pos, lam, mu, path)
                buf[j] = mean_var(path)[0]
        else:
            _sojourn_path(seed, stream, np.uint64(0), lam, mu, path)
        if replicate or batches <= 0:
            means[k], variances[k] = mean_var(buf)
        else:
            means[k] = mean_var(buf)[0]
            variances[k] = batch_means_var(buf, batches)


def _belief_args(b: Belief):
    if isinstance(b, PointMass):
        return 1.0, 1.0, float(b.value)
    return float(b.shape), float(b.rate), 0.0


class MM1Model(ResponseModel):
    """Bayesian M/M/1 mean-sojourn-time model.

    Parameters
    ----------
    lambda_posterior, mu_posterior : GammaPosterior or PointMass
        Beliefs on the arrival and service rates.
    cycles : int
        Customers per response in ``"replication"`` mode.
    inner : {"path", "replication"}
        ``"path"``: the ``M`` inner responses of a scenario are the sojourn
        times of customers ``1..M`` of one queue run started empty, so the
        inner mean is the mean sojourn time over the first ``M`` cycles.
        ``"replication"``: each inner response is an independent run's mean
        sojourn time over ``cycles`` customers.
    batches : int or None
        Path mode only.  The sojourn times of one run are autocorrelated, so
        the inner variance is estimated as ``M * Var(inner mean)`` by batch
        means over this many batches; ``None`` uses the plain sample
        variance of the ``M`` draws.
    max_redraws : int
        Cap on rejected ``(lambda, mu)`` pairs per scenario.
    """

    def __init__(self, lambda_posterior: Belief, mu_posterior: Belief, cycles: int = 200,
                 inner: str = "path", batches: int | None = 10, max_redraws: int = 10**6):
        if inner not in ("path", "replication"):
            raise ValueError("inner must be 'path' or 'replication'")
        if cycles < 1:
            raise ValueError("cycles must be >= 1")
        self.lambda_posterior = lambda_posterior
        self.mu_posterior = mu_posterior
        self.cycles = int(cycles)
        self.inner = inner
        self.batches = int(batches) if batches else 0
        self.max_redraws = int(max_redraws)
        self.truth = None

    def __repr__(self):
        return (f"MM1Model({self.lambda_posterior!r}, {self.mu_posterior!r}, "
                f"cycles={self.cycles}, inner={self.inner!r}, batches={self.batches})")

    def sample_parameters(self, n, stream):
        out = np.empty((int(n), 2))
        failed, end = _mm1_beliefs(
            np.uint64(stream.seed), np.uint64(stream.position), int(n),
            *_belief_args(self.lambda_posterior), *_belief_args(self.mu_posterior),
            self.max_redraws, out)
        if failed >= 0:
            raise SamplerError(
                f"scenario {failed}: no stable (lambda < mu) pair after "
                f"{self.max_redraws} redraws", scenario=int(failed))
        stream.position = int(end)
        return out

    def sample_responses(self, theta, m, stream):
        lam, mu = float(theta[0]), float(theta[1])
        if self.inner == "path":
            out = np.empty(int(m))
            end = _sojourn_path(np.uint64(stream.seed), np.uint64(stream.stream_id),
                                np.uint64(stream.position), lam, mu, out)
            stream.position = int(end)
            return out
        return np.array([simulate_sojourn_mean(lam, mu, self.cycles, stream) for _ in range(m)])

    def summarize_draws(self, draws):
        if self.inner == "replication" or self.batches <= 0:
            return mean_var(draws)
        return mean_var(draws)[0], batch_means_var(draws, self.batches)

    def summarize(self, thetas, m, seed, first_stream):
        thetas = np.ascontiguousarray(thetas, dtype=float)
        n = thetas.shape[0]
        means = np.empty(n)
        variances = np.empty(n)
        _mm1_summaries(thetas, int(m), self.cycles, self.inner == "replication",
                       self.batches, np.uint64(seed), int(first_stream), means, variances)
        bad = np.flatnonzero(~np.isfinite(means))
        if bad.size:
            idx = first_stream - 1 + int(bad[0])
            raise NonFiniteSampleError(f"non-finite sojourn mean at scenario {idx}", scenario=idx)
        return means, variances


def mm1_model(data: DataSet | None = None, *, lambda0: float | None = None,
              mu0: float = 500.0, n: int | None = None, rng: RngStream | None = None,
              cycles: int = 200, inner: str = "path", batches: int | None = 10,
              max_redraws: int = 10**6) -> MM1Model:
    """Build an :class:`MM1Model` from data, or from synthetic data at true rates."""
    if data is None:
        if lambda0 is None or n is None or rng is None:
            raise ValueError("give either data or (lambda0, n, rng)")
        data = generate_data(lambda0, mu0, n, rng)
    lam_post, mu_post = posterior_from_data(data)
    return MM1Model(lam_post, mu_post, cycles=cycles, inner=inner, batches=batches,
                    max_redraws=max_redraws)
