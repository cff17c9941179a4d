"""Confidence intervals for nested VaR / CVaR estimators.

Two procedures are provided.  The *weak* procedure adds an outer interval
(input uncertainty, level ``1 - beta_outer``) and an inner interval
(stochastic uncertainty, level ``1 - beta_inner``); by Boole's inequality
the sum has level at least ``1 - beta``.  The *strong* procedure uses the
outer term alone and is valid when ``N`` grows slower than ``M**2``.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate

from .core import NestedSampleSet, ResponseModel, SimulationError, simulate_nested
from .rng import RngStream, derive_seed
from .risk import Kind, cvar_nested, kde_density, t_quantile, var_nested

__all__ = [
    "Procedure",
    "TermSource",
    "VarianceTerms",
    "ConfidenceInterval",
    "BiasDiagnostic",
    "CIProcedure",
    "CoverageReport",
    "RegimeWarning",
    "SampleSizeError",
    "tau_window",
    "estimate_variance_terms",
    "analytic_variance_terms",
    "weak_ci",
    "strong_ci",
    "bias_diagnostic",
    "coverage_experiment",
]


class Procedure(str, Enum):
    WEAK = "weak"
    STRONG = "strong"


class TermSource(str, Enum):
    SAMPLE = "sample"
    PILOT_PROJECTED = "pilot_projected"
    ANALYTIC = "analytic"


class RegimeWarning(UserWarning):
    """Strong-procedure interval built outside its asymptotic regime."""


class SampleSizeError(ValueError):
    """A sample-size floor needed by a t-based interval is violated."""


@dataclass(frozen=True)
class VarianceTerms:
    sigma_v: float
    sigma_c: float
    tau_v: float
    tau_c: float
    source: TermSource = TermSource.SAMPLE

    def __post_init__(self):
        for name in ("sigma_v", "sigma_c", "tau_v", "tau_c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        object.__setattr__(self, "source", TermSource(self.source))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["source"] = self.source.value
        return d


@dataclass(frozen=True)
class ConfidenceInterval:
    target: Kind
    procedure: Procedure
    level: float
    beta_outer: float
    beta_inner: float
    lower: float
    upper: float
    center: float
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.lower <= self.center <= self.upper:
            raise ValueError("interval must satisfy lower <= center <= upper")

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    def covers(self, value: float) -> bool:
        """Closed-interval membership."""
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return {"target": Kind(self.target).value, "procedure": Procedure(self.procedure).value,
                "level": self.level, "beta_outer": self.beta_outer,
                "beta_inner": self.beta_inner, "lower": self.lower, "upper": self.upper,
                "center": self.center, "half_width": self.half_width,
                "warnings": list(self.warnings)}


@dataclass(frozen=True)
class BiasDiagnostic:
    alpha: float
    m: int
    predicted_var_bias: float
    predicted_cvar_bias: float


def tau_window(n: int) -> int:
    """Number of scenarios nearest the VaR estimate used to estimate ``tau_v``."""
    return min(n, max(30, math.ceil(0.05 * n)))


def estimate_variance_terms(samples: NestedSampleSet, alpha: float,
                            window: Optional[int] = None) -> VarianceTerms:
    """Plug-in estimates of the four asymptotic standard deviations.

    ``sigma_v`` uses a Gaussian KDE of the inner means at the nested VaR;
    ``tau_v`` averages inner variances over the ``window`` scenarios whose
    inner means are nearest the nested VaR (default :func:`tau_window`);
    ``tau_c`` averages inner variances over the tail at or above it.
    """
    n, m = samples.n, samples.m
    if n < 30:
        raise SampleSizeError(f"variance terms need N >= 30 scenarios, got N={n}")
    if m < 2:
        raise SampleSizeError(f"variance terms need M >= 2 inner samples, got M={m}")
    x = samples.inner_mean
    v = var_nested(samples, alpha).value
    try:
        dens = kde_density(x, v)
    except ValueError as exc:
        raise ValueError(f"sigma_v: {exc}") from None
    if not dens > 0:
        raise ValueError("sigma_v: density estimate at the VaR is zero")
    sigma_v = math.sqrt(alpha * (1.0 - alpha)) / dens
    sigma_c = float(np.maximum(x - v, 0.0).std(ddof=1)) / (1.0 - alpha)

    k = window if window is not None else tau_window(n)
    nearest = np.argsort(np.abs(x - v), kind="stable")[:k]
    tau_v = math.sqrt(float(samples.inner_var[nearest].mean()))
    tail = x >= v
    if not tail.any():
        raise ValueError("tau_c: empty tail set")
    tau_c = math.sqrt(float(samples.inner_var[tail].mean()))
    return VarianceTerms(sigma_v, sigma_c, tau_v, tau_c, TermSource.SAMPLE)


def analytic_variance_terms(truth, alpha: float) -> VarianceTerms:
    """Variance terms from a model's closed-form density and conditional variance."""
    if truth is None:
        raise ValueError("model has no analytic truth")
    v = truth.var(alpha)
    lo, hi = truth.support
    f, tau2 = truth.density, truth.cond_var
    sigma_v = math.sqrt(alpha * (1.0 - alpha)) / f(v)
    hi_q = hi if math.isfinite(hi) else np.inf
    e1 = integrate.quad(lambda y: (y - v) * f(y), v, hi_q, epsabs=0, epsrel=1e-11)[0]
    e2 = integrate.quad(lambda y: (y - v) ** 2 * f(y), v, hi_q, epsabs=0, epsrel=1e-11)[0]
    sigma_c = math.sqrt(max(e2 - e1 * e1, 0.0)) / (1.0 - alpha)
    tail = integrate.quad(lambda y: tau2(y) * f(y), v, hi_q, epsabs=0, epsrel=1e-11)[0]
    tau_c = math.sqrt(max(tail / (1.0 - alpha), 0.0))
    tau_v = math.sqrt(max(tau2(v), 0.0))
    return VarianceTerms(sigma_v, sigma_c, tau_v, tau_c, TermSource.ANALYTIC)


def _center(samples, alpha, target):
    target = Kind(target)
    est = var_nested(samples, alpha) if target is Kind.VAR else cvar_nested(samples, alpha)
    return target, est.value


def weak_ci(samples: NestedSampleSet, alpha: float, beta_outer: float, beta_inner: float,
            terms: VarianceTerms, target=Kind.VAR) -> ConfidenceInterval:
    """Interval with separate outer and inner error budgets.

    VaR::

        v~ + t(b_O/2, N-1) s_v / sqrt(N) + t(b_I/2, M-1) t_v / sqrt(M)

    (and the ``1 - b/2`` analogue for the upper end).  For CVaR the inner
    term uses ``(1 - alpha) N M`` in place of ``M``.
    """
    n, m = samples.n, samples.m
    for name, b in (("beta_outer", beta_outer), ("beta_inner", beta_inner)):
        if not 0.0 < b < 1.0:
            raise ValueError(f"{name} must lie in (0, 1)")
    if not beta_outer + beta_inner < 1.0:
        raise ValueError("beta_outer + beta_inner must be < 1")
    if n < 30:
        raise SampleSizeError(f"weak interval needs N >= 30, got N={n}")
    if m < 30:
        raise SampleSizeError(f"weak interval needs M >= 30, got M={m}")
    target, center = _center(samples, alpha, target)
    if target is Kind.VAR:
        sigma, tau, inner_n = terms.sigma_v, terms.tau_v, float(m)
    else:
        inner_n = (1.0 - alpha) * n * m
        if inner_n < 30:
            raise SampleSizeError(
                f"weak CVaR interval needs (1-alpha)*N*M >= 30, got {inner_n:g}")
        sigma, tau = terms.sigma_c, terms.tau_c
    out_lo = t_quantile(beta_outer / 2, n - 1) * sigma / math.sqrt(n)
    out_hi = t_quantile(1 - beta_outer / 2, n - 1) * sigma / math.sqrt(n)
    in_lo = t_quantile(beta_inner / 2, inner_n - 1) * tau / math.sqrt(inner_n)
    in_hi = t_quantile(1 - beta_inner / 2, inner_n - 1) * tau / math.sqrt(inner_n)
    beta = beta_outer + beta_inner
    return ConfidenceInterval(target, Procedure.WEAK, 1.0 - beta, beta_outer, beta_inner,
                              center + out_lo + in_lo, center + out_hi + in_hi, center)


def strong_ci(samples: NestedSampleSet, alpha: float, beta: float, terms: VarianceTerms,
              target=Kind.VAR, warn: bool = True) -> ConfidenceInterval:
    """Outer-only interval ``center + t(b/2, N-1) sigma / sqrt(N)`` .. ``t(1-b/2, N-1)``.

    When ``N >= M**2`` the interval carries a regime note in ``warnings``
    and, if ``warn``, a :class:`RegimeWarning` is also issued.
    """
    n, m = samples.n, samples.m
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if n < 30:
        raise SampleSizeError(f"strong interval needs N >= 30, got N={n}")
    target, center = _center(samples, alpha, target)
    sigma = terms.sigma_v if target is Kind.VAR else terms.sigma_c
    notes = ()
    if n >= m * m:
        msg = (f"N={n} >= M^2={m * m}: the inner-sampling bias is not negligible "
               "and the strong interval is not asymptotically valid")
        if warn:
            warnings.warn(msg, RegimeWarning, stacklevel=2)
        notes = (msg,)
    lo = t_quantile(beta / 2, n - 1) * sigma / math.sqrt(n)
    hi = t_quantile(1 - beta / 2, n - 1) * sigma / math.sqrt(n)
    return ConfidenceInterval(target, Procedure.STRONG, 1.0 - beta, beta, 0.0,
                              center + lo, center + hi, center, notes)


def bias_diagnostic(model: ResponseModel, alpha: float, m: int) -> BiasDiagnostic:
    """Leading-order inner-sampling bias of the nested estimators.

    VaR: ``-Lambda'(v) / (m f(v))``; CVaR: ``Lambda(v) / ((1 - alpha) m)``,
    with ``Lambda(t) = f(t) E[tau^2 | H = t] / 2``.
    """
    truth = getattr(model, "truth", None)
    if truth is None:
        raise ValueError("bias diagnostic needs a model with analytic truth")
    if m < 1:
        raise ValueError("m must be >= 1")
    v = truth.var(alpha)
    var_bias = -truth.lam_prime(v) / (m * truth.density(v))
    cvar_bias = truth.lam(v) / ((1.0 - alpha) * m)
    return BiasDiagnostic(alpha, int(m), float(var_bias), float(cvar_bias))


@dataclass(frozen=True)
class CIProcedure:
    """Which interval to build in a coverage experiment.

    ``terms`` selects plug-in (``"sample"``) or closed-form (``"analytic"``)
    variance terms.  The weak split defaults to ``beta / 2`` each.
    """

    procedure: Procedure = Procedure.WEAK
    target: Kind = Kind.VAR
    beta: float = 0.05
    beta_outer: Optional[float] = None
    beta_inner: Optional[float] = None
    terms: TermSource = TermSource.SAMPLE

    def __post_init__(self):
        object.__setattr__(self, "procedure", Procedure(self.procedure))
        object.__setattr__(self, "target", Kind(self.target))
        object.__setattr__(self, "terms", TermSource(self.terms))
        if self.terms is TermSource.PILOT_PROJECTED:
            raise ValueError("coverage experiments use 'sample' or 'analytic' terms")
        if self.beta_outer is None:
            object.__setattr__(self, "beta_outer", self.beta / 2)
        if self.beta_inner is None:
            object.__setattr__(self, "beta_inner", self.beta / 2)

    def build(self, samples, alpha, terms, warn: bool = True) -> ConfidenceInterval:
        if self.procedure is Procedure.WEAK:
            return weak_ci(samples, alpha, self.beta_outer, self.beta_inner, terms, self.target)
        return strong_ci(samples, alpha, self.beta, terms, self.target, warn=warn)


@dataclass(frozen=True)
class CoverageReport:
    procedure: str
    target: str
    alpha: float
    n: int
    m: int
    replications: int
    coverage: float
    mean_half_width: float
    seed: int
    terms: str = "sample"

    CSV_FIELDS = ("procedure", "target", "alpha", "N", "M", "R", "coverage",
                  "mean_half_width", "seed")

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> dict:
        return {"procedure": self.procedure, "target": self.target, "alpha": self.alpha,
                "N": self.n, "M": self.m, "R": self.replications, "coverage": self.coverage,
                "mean_half_width": self.mean_half_width, "seed": self.seed}


def coverage_experiment(model: ResponseModel, alpha: float, procedure: CIProcedure,
                        n: int, m: int, replications: int, rng, threads: int = 1
                        ) -> CoverageReport:
    """Empirical coverage of an interval procedure against the model's truth.

    Replication ``r`` runs on seed ``derive_seed(seed, r)``.
    """
    truth = getattr(model, "truth", None)
    if truth is None:
        raise ValueError("coverage needs a model with analytic truth (e.g. normal-normal)")
    if replications < 1:
        raise ValueError("replications must be >= 1")
    seed = rng.seed if isinstance(rng, RngStream) else int(rng)
    target_value = truth.var(alpha) if procedure.target is Kind.VAR else truth.cvar(alpha)
    fixed_terms = (analytic_variance_terms(truth, alpha)
                   if procedure.terms is TermSource.ANALYTIC else None)

    def one(r):
        try:
            samples = simulate_nested(model, n, m, RngStream(derive_seed(seed, r)))
            terms = fixed_terms or estimate_variance_terms(samples, alpha)
            ci = procedure.build(samples, alpha, terms, warn=False)
        except (SimulationError, ValueError) as exc:
            raise type(exc)(f"replication {r}: {exc}") from exc
        return ci.covers(target_value), ci.half_width

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(replications)))
    else:
        results = [one(r) for r in range(replications)]
    covered = np.array([c for c, _ in results], dtype=bool)
    widths = np.array([w for _, w in results])
    return CoverageReport(procedure.procedure.value, procedure.target.value, alpha, n, m,
                          replications, float(covered.mean()), float(widths.mean()), seed,
                          procedure.terms.value)
