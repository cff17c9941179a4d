"""Nested simulation estimators of VaR and CVaR under input uncertainty.

Modules
-------
rng      counter-based random streams with per-scenario substreams
core     two-layer sampling engine
risk     VaR / CVaR estimators, t quantiles, kernel density
ci       weak and strong confidence intervals, coverage experiments
budget   pilot-based inner/outer budget allocation
models   normal-normal benchmark and the Bayesian M/M/1 queue
cli      command-line front end (``python -m nestrisk``)
"""
__version__ = "0.1.0"

from .rng import RngStream, derive_seed
from .core import (FunctionModel, ModelTruth, NestedSampleSet, NonFiniteSampleError,
                   ResponseModel, SamplerError, SimulationCost, SimulationError, draw_outer,
                   simulate_nested, total_cost)
from .risk import (Kind, Layer, RiskEstimate, TQuantileRequest, cvar_nested, cvar_one_layer,
                   kde_density, quantile_index, t_quantile, var_nested, var_one_layer)
from .ci import (BiasDiagnostic, CIProcedure, ConfidenceInterval, CoverageReport, Procedure,
                 RegimeWarning, SampleSizeError, TermSource, VarianceTerms,
                 analytic_variance_terms, bias_diagnostic, coverage_experiment,
                 estimate_variance_terms, strong_ci, weak_ci)
from .budget import (BudgetPlan, Family, FittedDensity, InfeasibleBudgetError, PilotSummary,
                     QuadratureError, Tau2Fit, allocate_budget, ci_width_cvar, ci_width_var,
                     density_projection, derive_pilot_terms, fit_tau2_regression)
from .models import (DataSet, GammaPosterior, MM1Model, NormalNormalModel, PointMass,
                     generate_data, mm1_model, posterior_from_data, read_dataset,
                     read_observations, simulate_sojourn_mean, write_observations)
