"""Pilot experiments and CI-width budget allocation.

A small pilot run is summarised by

* a parametric density fitted to the pilot inner means (KL projection onto a
  family, which for i.i.d. samples is maximum likelihood), and
* a cubic least-squares fit of the inner variance against the inner mean.

From these the four variance terms are computed by quadrature and plugged
into the half-width objectives, which are then minimised over ``(N, M)``
subject to the cost budget and the ``Gamma0`` sample-size floors.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate, special, stats

from .ci import SampleSizeError, TermSource, VarianceTerms
from .core import NestedSampleSet, SimulationCost, total_cost
from .risk import Kind, _check_alpha, t_quantile

__all__ = [
    "Family",
    "FittedDensity",
    "Tau2Fit",
    "PilotSummary",
    "BudgetPlan",
    "InfeasibleBudgetError",
    "QuadratureError",
    "density_projection",
    "fit_tau2_regression",
    "pilot_terms",
    "derive_pilot_terms",
    "ci_width_var",
    "ci_width_cvar",
    "allocate_budget",
]


class Family(str, Enum):
    GAUSSIAN = "gaussian"
    LOGNORMAL = "lognormal"
    GAMMA = "gamma"


class InfeasibleBudgetError(ValueError):
    """No allocation satisfies the budget and sample-size floors."""

    def __init__(self, message, binding=None):
        super().__init__(message)
        self.binding = binding


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class FittedDensity:
    """Parameters of a projected density.

    gaussian: ``mean``, ``variance``; lognormal: ``mean`` and ``variance`` of
    ``log Y``; gamma: ``shape``, ``rate``.
    """

    family: Family
    params: dict

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))

    def frozen(self):
        p = self.params
        if self.family is Family.GAUSSIAN:
            return stats.norm(p["mean"], math.sqrt(p["variance"]))
        if self.family is Family.LOGNORMAL:
            return stats.lognorm(math.sqrt(p["variance"]), scale=math.exp(p["mean"]))
        return stats.gamma(p["shape"], scale=1.0 / p["rate"])

    def to_dict(self):
        return {"family": self.family.value, **self.params}


def density_projection(values, family="gaussian", tol: float = 1e-10) -> FittedDensity:
    """Minimum-KL (maximum-likelihood) fit of ``values`` within ``family``."""
    family = Family(family)
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("density projection needs at least two values")
    if not np.all(np.isfinite(x)):
        raise ValueError("values must be finite")
    if family is not Family.GAUSSIAN and np.any(x <= 0):
        raise ValueError(f"{family.value} projection needs strictly positive values")

    if family is Family.GAUSSIAN:
        mean = x.mean()
        var = np.mean((x - mean) ** 2)
        if not var > 0:
            raise ValueError("degenerate sample: zero variance")
        return FittedDensity(family, {"mean": float(mean), "variance": float(var)})

    logs = np.log(x)
    if family is Family.LOGNORMAL:
        mean = logs.mean()
        var = np.mean((logs - mean) ** 2)
        if not var > 0:
            raise ValueError("degenerate sample: zero variance of logs")
        return FittedDensity(family, {"mean": float(mean), "variance": float(var)})

    # gamma: solve log(k) - digamma(k) = log(mean) - mean(log x) by Newton on log k
    s = math.log(x.mean()) - logs.mean()
    if not s > 0:
        raise ValueError("degenerate sample: zero variance")
    k = (3 - s + math.sqrt((s - 3) ** 2 + 24 * s)) / (12 * s)
    for _ in range(100):
        g = math.log(k) - special.digamma(k) - s
        dg = 1.0 / k - special.polygamma(1, k)
        step = g / (dg * k)
        k *= math.exp(-step)
        if abs(step) < tol:
            break
    else:
        raise ValueError("gamma shape iteration did not converge")
    return FittedDensity(family, {"shape": float(k), "rate": float(k / x.mean())})


@dataclass(frozen=True)
class Tau2Fit:
    """Cubic fit of the conditional inner variance ``tau^2(y)``.

    Stored in the centred/scaled variable ``z = (y - center) / scale``;
    :attr:`coefficients` gives the raw-basis coefficients ``b0..b3``.
    """

    z_coefficients: tuple[float, ...]
    center: float
    scale: float
    degree: int

    def __call__(self, y):
        z = (np.asarray(y, dtype=float) - self.center) / self.scale
        out = np.polynomial.polynomial.polyval(z, self.z_coefficients)
        return np.maximum(out, 0.0)

    @property
    def fallback(self) -> bool:
        return self.degree == 0

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        raw = np.zeros(4)
        for j, a in enumerate(self.z_coefficients):
            # (y - c)^j / s^j expanded in powers of y
            for i in range(j + 1):
                raw[i] += a * math.comb(j, i) * (-self.center) ** (j - i) / self.scale ** j
        return tuple(float(b) for b in raw)

    def to_dict(self):
        return {"coefficients": list(self.coefficients), "degree": self.degree,
                "center": self.center, "scale": self.scale,
                "z_coefficients": list(self.z_coefficients)}


def fit_tau2_regression(samples: NestedSampleSet, degree: int = 3) -> Tau2Fit:
    """Least-squares fit of inner variances on powers of the inner means.

    Falls back to a constant (the mean inner variance) when the design is
    rank deficient.
    """
    if samples.n < 8:
        raise ValueError(f"tau^2 regression needs N >= 8, got {samples.n}")
    if samples.m < 2:
        raise ValueError("tau^2 regression needs M >= 2")
    y = samples.inner_mean
    v = samples.inner_var
    center = float(y.mean())
    scale = float(y.std())
    if scale > 0:
        z = (y - center) / scale
        design = np.vander(z, degree + 1, increasing=True)
        if np.linalg.matrix_rank(design) == degree + 1:
            coef, *_ = np.linalg.lstsq(design, v, rcond=None)
            return Tau2Fit(tuple(float(c) for c in coef), center, scale, degree)
    return Tau2Fit((float(v.mean()),), center, scale if scale > 0 else 1.0, 0)


@dataclass(frozen=True)
class PilotSummary:
    n_pilot: int
    m_pilot: int
    alpha: float
    density: FittedDensity
    tau2: Tau2Fit
    terms: VarianceTerms
    var_estimate: float

    def to_dict(self):
        return {"n_pilot": self.n_pilot, "m_pilot": self.m_pilot, "alpha": self.alpha,
                "projected_density": self.density.to_dict(),
                "tau2_regression": self.tau2.to_dict(),
                "terms": self.terms.to_dict(), "var_estimate": self.var_estimate}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _quad(func, a, b, name):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(func, a, b, epsabs=0.0, epsrel=1e-8, limit=200)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"{name}: quadrature did not converge ({exc})") from None
    return val


def pilot_terms(dist, tau2, alpha: float) -> tuple[VarianceTerms, float]:
    """Variance terms for a frozen density ``dist`` and a ``tau2`` callable.

    Returns the terms and the density's ``alpha``-quantile.  Tail integrals
    run from the quantile to the ``1 - 1e-12`` quantile.
    """
    _check_alpha(alpha)
    v = float(dist.ppf(alpha))
    top = float(dist.ppf(1.0 - 1e-12))
    f_v = float(dist.pdf(v))
    if not f_v > 0:
        raise ValueError("projected density vanishes at its quantile")
    sigma_v = math.sqrt(alpha * (1.0 - alpha)) / f_v
    tail_p = 1.0 - alpha
    e1 = _quad(lambda y: (y - v) * dist.pdf(y), v, top, "E[(Y-v)^+]")
    e2 = _quad(lambda y: (y - v) ** 2 * dist.pdf(y), v, top, "E[((Y-v)^+)^2]")
    sigma_c = math.sqrt(max(e2 - e1 * e1, 0.0)) / tail_p
    tau_v = math.sqrt(max(0.0, float(tau2(v))))
    tail = _quad(lambda y: float(tau2(y)) * dist.pdf(y), v, top, "E[tau^2(Y); Y >= v]")
    tau_c = math.sqrt(max(tail, 0.0) / tail_p)
    return VarianceTerms(sigma_v, sigma_c, tau_v, tau_c, TermSource.PILOT_PROJECTED), v


def derive_pilot_terms(pilot: NestedSampleSet, alpha: float, family="gaussian") -> PilotSummary:
    """Project the pilot inner means, regress ``tau^2`` and integrate the terms."""
    if pilot.n < 30:
        raise SampleSizeError(f"pilot needs N >= 30, got N={pilot.n}")
    if pilot.m < 2:
        raise SampleSizeError(f"pilot needs M >= 2, got M={pilot.m}")
    fitted = density_projection(pilot.inner_mean, family)
    tau2 = fit_tau2_regression(pilot)
    terms, v = pilot_terms(fitted.frozen(), tau2, alpha)
    return PilotSummary(pilot.n, pilot.m, alpha, fitted, tau2, terms, v)


def ci_width_var(n, m, beta_outer, beta_inner, sigma_v, tau_v) -> float:
    """Weak VaR half-width ``t(1-bO/2, N-1) sv/sqrt(N) + t(1-bI/2, M-1) tv/sqrt(M)``."""
    if n < 2 or m < 2:
        raise ValueError("n and m must be >= 2")
    return (t_quantile(1 - beta_outer / 2, n - 1) * sigma_v / math.sqrt(n)
            + t_quantile(1 - beta_inner / 2, m - 1) * tau_v / math.sqrt(m))


def ci_width_cvar(n, m, alpha, beta_outer, beta_inner, sigma_c, tau_c) -> float:
    """Weak CVaR half-width; the inner term uses ``L = (1 - alpha) N M``."""
    if n < 2 or m < 2:
        raise ValueError("n and m must be >= 2")
    inner = (1.0 - alpha) * n * m
    if inner < 2:
        raise ValueError("(1 - alpha) * n * m must be >= 2")
    return (t_quantile(1 - beta_outer / 2, n - 1) * sigma_c / math.sqrt(n)
            + t_quantile(1 - beta_inner / 2, inner - 1) * tau_c / math.sqrt(inner))


@dataclass(frozen=True)
class BudgetPlan:
    target: Kind
    n: int
    m: int
    predicted_half_width: float
    budget: float
    cost: SimulationCost
    gamma0: int
    feasible_grid_size: int
    alpha: float
    grid: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "target", Kind(self.target))

    def to_dict(self, include_grid: bool = False) -> dict:
        d = {"target": self.target.value, "n": self.n, "m": self.m,
             "predicted_half_width": self.predicted_half_width, "budget": self.budget,
             "cost": asdict(self.cost), "gamma0": self.gamma0,
             "feasible_grid_size": self.feasible_grid_size, "alpha": self.alpha}
        if include_grid and self.grid is not None:
            d["grid"] = [list(r) for r in self.grid]
        return d

    def to_json(self, include_grid: bool = False) -> str:
        return json.dumps(self.to_dict(include_grid))

    def grid_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "M", "predicted_width"])
        for n, m, width in self.grid or ():
            w.writerow([n, m, repr(float(width))])
        return buf.getvalue()


def _n_grid(lo: int, hi: int, ratio: float) -> np.ndarray:
    """Integers from ``lo`` to ``hi`` with consecutive ratio at most ``ratio``
    (unit steps where the ratio forces them)."""
    pts = []
    n = lo
    while n < hi:
        pts.append(n)
        n = max(n + 1, int(math.floor(n * ratio + 1e-9)))
    if hi >= lo:
        pts.append(hi)
    return np.array(pts, dtype=np.int64)


def allocate_budget(pilot, alpha: float, beta_outer: float, beta_inner: float,
                    cost: SimulationCost, budget: float, gamma0: int = 30,
                    target=Kind.VAR, ratio: float = 1.05) -> BudgetPlan:
    """Minimise the predicted weak half-width over a geometric grid in ``N``.

    For each ``N`` the inner size is the largest ``M`` the budget allows
    (the width decreases in ``M``).  Ties go to the smaller ``N``.

    Parameters
    ----------
    pilot : PilotSummary or VarianceTerms
    """
    _check_alpha(alpha)
    target = Kind(target)
    if not 1.0 < ratio <= 1.05:
        raise ValueError("grid ratio must lie in (1, 1.05]")
    terms = pilot.terms if isinstance(pilot, PilotSummary) else pilot
    c1, c2 = cost.c1, cost.c2
    n_max = int(math.floor(budget / (c1 + c2 * gamma0)))
    if n_max < gamma0:
        raise InfeasibleBudgetError(
            f"budget {budget:g} cannot afford N = M = {gamma0} "
            f"(needs {total_cost(cost, gamma0, gamma0):g})", binding="budget")

    rows = []
    for n in _n_grid(gamma0, n_max, ratio):
        n = int(n)
        m = int(math.floor((budget / n - c1) / c2))
        while m >= 1 and total_cost(cost, n, m) > budget:
            m -= 1
        if m < gamma0:
            continue
        if target is Kind.VAR:
            w = ci_width_var(n, m, beta_outer, beta_inner, terms.sigma_v, terms.tau_v)
        else:
            if (1.0 - alpha) * n * m < gamma0:
                continue
            w = ci_width_cvar(n, m, alpha, beta_outer, beta_inner, terms.sigma_c, terms.tau_c)
        rows.append((n, m, w))
    if not rows:
        binding = "(1-alpha)*N*M >= gamma0" if target is Kind.CVAR else "M >= gamma0"
        raise InfeasibleBudgetError(f"no feasible allocation: {binding} cannot be met",
                                    binding=binding)
    widths = np.array([r[2] for r in rows])
    best = int(np.argmin(widths))
    n, m, w = rows[best]
    plan = BudgetPlan(target, n, m, float(w), budget, cost, gamma0, len(rows), alpha,
                      tuple(rows))
    assert total_cost(cost, n, m) <= budget and n >= gamma0 and m >= gamma0
    return plan
