"""VaR / CVaR estimators and the statistical primitives behind them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .core import NestedSampleSet

__all__ = [
    "Kind",
    "Layer",
    "RiskEstimate",
    "TQuantileRequest",
    "quantile_index",
    "var_one_layer",
    "cvar_one_layer",
    "var_nested",
    "cvar_nested",
    "t_quantile",
    "silverman_bandwidth",
    "kde_density",
]


class Kind(str, Enum):
    VAR = "VaR"
    CVAR = "CVaR"


class Layer(str, Enum):
    ONE_LAYER = "one_layer"
    NESTED = "nested"


@dataclass(frozen=True)
class RiskEstimate:
    kind: Kind
    layer: Layer
    alpha: float
    value: float
    n_outer: int
    m_inner: int = 1

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not math.isfinite(self.value):
            raise ValueError("risk estimate must be finite")

    def __float__(self):
        return float(self.value)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "layer": self.layer.value, "alpha": self.alpha,
                "value": self.value, "n_outer": self.n_outer, "m_inner": self.m_inner}


@dataclass(frozen=True)
class TQuantileRequest:
    gamma: float
    dof: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not self.dof >= 1:
            raise ValueError("degrees of freedom must be >= 1")


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def quantile_index(alpha: float, n: int) -> int:
    """1-based order-statistic index ``ceil(alpha * n)`` clamped to ``[1, n]``."""
    _check_alpha(alpha)
    if n < 1:
        raise ValueError("n must be >= 1")
    # round away float noise such as 0.7 * 10 = 7.000000000000001
    k = math.ceil(round(alpha * n, 9))
    return min(max(k, 1), n)


def _values(values):
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("need at least one value")
    if not np.all(np.isfinite(x)):
        raise ValueError("values must be finite")
    return x


def _order_stat(x, alpha):
    k = quantile_index(alpha, x.size)
    # ties do not change the value of the k-th order statistic, so a
    # partition suffices
    return float(np.partition(x, k - 1)[k - 1])


def _tail_excess(x, v, alpha):
    return float(np.maximum(x - v, 0.0).sum() / ((1.0 - alpha) * x.size))


def var_one_layer(values, alpha: float) -> RiskEstimate:
    """Empirical VaR of exactly evaluated mean responses."""
    x = _values(values)
    return RiskEstimate(Kind.VAR, Layer.ONE_LAYER, alpha, _order_stat(x, alpha), x.size)


def cvar_one_layer(values, alpha: float) -> RiskEstimate:
    """Empirical CVaR ``v + sum((x - v)^+) / ((1 - alpha) N)``."""
    x = _values(values)
    v = _order_stat(x, alpha)
    return RiskEstimate(Kind.CVAR, Layer.ONE_LAYER, alpha, v + _tail_excess(x, v, alpha), x.size)


def var_nested(samples: NestedSampleSet, alpha: float) -> RiskEstimate:
    x = _values(samples.inner_mean)
    return RiskEstimate(Kind.VAR, Layer.NESTED, alpha, _order_stat(x, alpha), x.size, samples.m)


def cvar_nested(samples: NestedSampleSet, alpha: float) -> RiskEstimate:
    x = _values(samples.inner_mean)
    v = _order_stat(x, alpha)
    return RiskEstimate(Kind.CVAR, Layer.NESTED, alpha, v + _tail_excess(x, v, alpha),
                        x.size, samples.m)


def t_quantile(gamma, dof=None) -> float:
    """``gamma``-quantile of Student's t with ``dof`` degrees of freedom.

    Accepts a :class:`TQuantileRequest` or ``(gamma, dof)``.  Non-integer
    and infinite ``dof`` are allowed (the latter gives the normal quantile).
    """
    req = gamma if isinstance(gamma, TQuantileRequest) else TQuantileRequest(gamma, dof)
    if req.gamma == 0.5:
        return 0.0
    # evaluate the upper half and reflect, so t(g) = -t(1 - g) exactly
    g = max(req.gamma, 1.0 - req.gamma)
    if math.isinf(req.dof):
        q = float(special.ndtri(g))
    else:
        q = float(special.stdtrit(req.dof, g))
    return q if req.gamma > 0.5 else -q


def silverman_bandwidth(values) -> float:
    """``1.06 * min(sd, IQR / 1.349) * N^(-1/5)``."""
    x = np.asarray(values, dtype=float)
    sd = x.std(ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    iqr = (q75 - q25) / 1.349
    scale = min(sd, iqr) if iqr > 0 else sd
    return 1.06 * scale * x.size ** -0.2


def kde_density(values, at: float, bandwidth: float | None = None) -> float:
    """Gaussian kernel density estimate at a single point.

    Parameters
    ----------
    values : array_like
        Sample (at least two finite values unless ``bandwidth`` is forced).
    at : float
        Evaluation point.
    bandwidth : float, optional
        Kernel width; defaults to :func:`silverman_bandwidth`.
    """
    x = np.asarray(values, dtype=float).ravel()
    if bandwidth is None:
        if x.size < 2:
            raise ValueError("kernel density needs at least two values")
        if not np.all(np.isfinite(x)):
            raise ValueError("values must be finite")
        bandwidth = silverman_bandwidth(x)
        if not bandwidth > 0:
            raise ValueError("zero sample spread: KDE bandwidth undefined")
    elif not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    z = (at - x) / bandwidth
    dens = np.exp(-0.5 * z * z).sum() / (x.size * bandwidth * math.sqrt(2.0 * math.pi))
    return float(dens)
