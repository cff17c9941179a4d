"""Command-line front end.

Every run is driven by one JSON config (``--config``); the flags ``--seed``,
``--out``, ``--format`` and ``--threads`` override the file.  The resolved
config, seed included, is echoed into the output record so that the record
alone reruns the experiment bit for bit.

Seed lanes
----------
All randomness flows from the top-level ``seed`` through
:func:`~nestrisk.rng.derive_seed`:

=====================  ==========================================
``derive_seed(s, 1)``  synthetic input data (gen-data, mm1 models)
``derive_seed(s, 2)``  pilot experiment (budget)
``derive_seed(s, 3)``  main nested experiment
``derive_seed(s, 4)``  coverage replications (replication ``r`` then
                       uses ``derive_seed(derive_seed(s, 4), r)``)
=====================  ==========================================

``mm1-tables`` appends the grid indices ``(i, j)`` of ``(lambda0, n)`` to
the data and main lanes.

Exit codes: 0 success, 2 config validation, 3 simulation failure,
4 infeasible budget.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import secrets
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .budget import (InfeasibleBudgetError, QuadratureError, allocate_budget,
                     derive_pilot_terms)
from .ci import (CIProcedure, CoverageReport, SampleSizeError, analytic_variance_terms,
                 coverage_experiment, estimate_variance_terms, weak_ci)
from .core import SimulationCost, SimulationError, simulate_nested, total_cost
from .models import (DataSet, GammaPosterior, MM1Model, NormalNormalModel, PointMass,
                     generate_data, posterior_from_data, read_dataset, write_observations)
from .risk import Kind, cvar_nested, t_quantile, var_nested
from .rng import RngStream, derive_seed

__all__ = ["ConfigError", "ResultRecord", "CONFIG_SCHEMA", "resolve_config", "run", "main",
           "LANE_DATA", "LANE_PILOT", "LANE_MAIN", "LANE_COVERAGE"]

LANE_DATA, LANE_PILOT, LANE_MAIN, LANE_COVERAGE = 1, 2, 3, 4

EXIT_OK, EXIT_CONFIG, EXIT_SIMULATION, EXIT_BUDGET = 0, 2, 3, 4

COMMANDS = ("estimate", "ci", "budget", "coverage", "mm1-tables", "gen-data")

MM1_TABLE_FIELDS = ["lambda0", "n", "alpha", "measure", "estimate", "half_width",
                    "lower", "upper"]

_prob = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_pos_int = {"type": "integer", "minimum": 1}
_pos_num = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "required": ["name"],
            "properties": {"name": {"enum": ["normal_normal", "mm1"]}},
            "allOf": [
                {"if": {"properties": {"name": {"const": "normal_normal"}}},
                 "then": {"additionalProperties": False,
                          "properties": {"name": {}, "exact_summaries": {"type": "boolean"}}}},
                {"if": {"properties": {"name": {"const": "mm1"}}},
                 "then": {
                     "additionalProperties": False,
                     "properties": {
                         "name": {},
                         "lambda0": _pos_num,
                         "mu0": _pos_num,
                         "n": _pos_int,
                         "cycles": _pos_int,
                         "inner": {"enum": ["path", "replication"]},
                         "batches": {"type": ["integer", "null"], "minimum": 2},
                         "max_redraws": _pos_int,
                         "data": {"type": "object", "required": ["x", "y"],
                                  "additionalProperties": False,
                                  "properties": {"x": {"type": "string"},
                                                 "y": {"type": "string"}}},
                         "rates": {"type": "object", "required": ["lambda", "mu"],
                                   "additionalProperties": False,
                                   "properties": {"lambda": _pos_num, "mu": _pos_num}},
                     }}},
            ],
        },
        "alpha": _prob,
        "beta": _prob,
        "beta_outer": _prob,
        "beta_inner": _prob,
        "N": _pos_int,
        "M": _pos_int,
        "procedure": {"enum": ["weak", "strong"]},
        "target": {"enum": ["VaR", "CVaR"]},
        "terms": {"enum": ["sample", "analytic"]},
        "replications": _pos_int,
        "budget": {
            "type": "object",
            "required": ["CB"],
            "additionalProperties": False,
            "properties": {
                "CB": _pos_num,
                "c1": {"type": "number", "minimum": 0},
                "c2": _pos_num,
                "gamma0": {"type": "integer", "minimum": 2},
                "pilot_n": {"type": "integer", "minimum": 30},
                "pilot_m": {"type": "integer", "minimum": 2},
                "family": {"enum": ["gaussian", "lognormal", "gamma"]},
                "ratio": {"type": "number", "exclusiveMinimum": 1, "maximum": 1.05},
                "run": {"type": "boolean"},
            },
        },
        "tables": {
            "type": "object",
            "required": ["lambda0", "n", "alpha"],
            "additionalProperties": False,
            "properties": {
                "lambda0": {"type": "array", "minItems": 1, "items": _pos_num},
                "n": {"type": "array", "minItems": 1, "items": _pos_int},
                "alpha": {"type": "array", "minItems": 1, "items": _prob},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "threads": _pos_int,
        "out": {"type": ["string", "null"]},
        "format": {"enum": ["csv", "json"]},
    },
}

_DEFAULTS = {"beta": 0.05, "procedure": "weak", "target": "VaR", "terms": "sample",
             "threads": 1, "out": None, "format": "json"}
_BUDGET_DEFAULTS = {"c1": 1.0, "c2": 1.0, "gamma0": 30, "pilot_n": 50, "pilot_m": 100,
                    "family": "gaussian", "ratio": 1.05, "run": False}
_MM1_DEFAULTS = {"mu0": 500.0, "cycles": 200, "inner": "path", "batches": 10,
                 "max_redraws": 10**6}

_REQUIRED = {
    "estimate": ("model", "alpha", "N", "M"),
    "ci": ("model", "alpha", "N", "M"),
    "budget": ("model", "alpha", "budget"),
    "coverage": ("model", "alpha", "N", "M", "replications"),
    "mm1-tables": ("model", "tables", "N", "M"),
    "gen-data": ("model",),
}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _dotted(parts) -> str:
    return ".".join(str(p) for p in parts)


def _schema_errors(config: dict) -> list[ConfigError]:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    out = []
    for err in sorted(validator.iter_errors(config), key=lambda e: list(map(str, e.path))):
        path = list(err.absolute_path)
        if err.validator == "required":
            missing = [k for k in err.validator_value if k not in err.instance]
            path = path + missing[:1]
            out.append(ConfigError("required field is missing", _dotted(path)))
        elif err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            out.append(ConfigError("unknown field", _dotted(path + extra[:1])))
        else:
            out.append(ConfigError(err.message, _dotted(path)))
    return out


def resolve_config(command: str, config: dict, seed=None, out=None, fmt=None,
                   threads=None) -> dict:
    """Validate ``config`` for ``command`` and fill in every default.

    Flag values (when not ``None``) override the file.  A missing seed is
    drawn from the OS and embedded in the result.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    cfg = copy.deepcopy(config)
    for key, val in (("seed", seed), ("out", out), ("format", fmt), ("threads", threads)):
        if val is not None:
            cfg[key] = val
    errors = _schema_errors(cfg)
    if errors:
        raise errors[0]
    for key in _REQUIRED[command]:
        if key not in cfg:
            raise ConfigError("required field is missing", key)
    if "budget" in cfg and ("N" in cfg or "M" in cfg):
        raise ConfigError("explicit N/M and a budget block are mutually exclusive", "budget")
    for key, val in _DEFAULTS.items():
        cfg.setdefault(key, val)
    if "seed" not in cfg:
        cfg["seed"] = secrets.randbits(64)
    beta = cfg["beta"]
    if "beta_outer" in cfg or "beta_inner" in cfg:
        bo = cfg.setdefault("beta_outer", beta - cfg.get("beta_inner", beta / 2))
        bi = cfg.setdefault("beta_inner", beta - bo)
        if not (bo > 0 and bi > 0 and math.isclose(bo + bi, beta, rel_tol=1e-12)):
            raise ConfigError("beta_outer + beta_inner must equal beta", "beta_outer")
    else:
        cfg["beta_outer"] = cfg["beta_inner"] = beta / 2
    if "budget" in cfg:
        for key, val in _BUDGET_DEFAULTS.items():
            cfg["budget"].setdefault(key, val)
    model = cfg["model"]
    if model["name"] == "mm1":
        for key, val in _MM1_DEFAULTS.items():
            model.setdefault(key, val)
        sources = [k for k in ("data", "rates", "lambda0") if k in model]
        if command == "mm1-tables":
            if sources:
                raise ConfigError("mm1-tables generates its own data; "
                                  "use tables.lambda0 and tables.n", f"model.{sources[0]}")
        elif len(sources) != 1:
            raise ConfigError("give exactly one of data, rates, or lambda0 with n",
                              "model.data" if not sources else f"model.{sources[1]}")
        elif sources == ["lambda0"] and "n" not in model:
            raise ConfigError("required field is missing", "model.n")
        if command == "gen-data" and sources != ["lambda0"]:
            raise ConfigError("gen-data needs lambda0 and n", "model.lambda0")
    elif command in ("gen-data", "mm1-tables"):
        raise ConfigError(f"{command} requires the mm1 model", "model.name")
    else:
        model.setdefault("exact_summaries", False)
    if command == "coverage" and model["name"] != "normal_normal":
        raise ConfigError("coverage needs a model with closed-form truth; "
                          "use the normal_normal model", "model.name")
    if cfg["terms"] == "analytic" and model["name"] != "normal_normal":
        raise ConfigError("analytic terms need a model with closed-form truth", "terms")
    return cfg


@dataclass
class ResultRecord:
    """Everything a run produced, plus the config that reproduces it."""

    command: str
    config: dict
    estimates: list = field(default_factory=list)
    intervals: list = field(default_factory=list)
    variance_terms: list = field(default_factory=list)
    budget_plan: dict | None = None
    pilot: dict | None = None
    extra: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    wall_clock: float = 0.0
    version: str = __version__

    def __post_init__(self):
        # normalise to JSON-native containers so that a round trip is exact
        for f in fields(self):
            setattr(self, f.name, json.loads(json.dumps(getattr(self, f.name))))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls(**json.loads(text))


# --------------------------------------------------------------------------
# model construction


def _mm1_from(model_cfg: dict, data: DataSet | None = None) -> MM1Model:
    kw = dict(cycles=model_cfg["cycles"], inner=model_cfg["inner"],
              batches=model_cfg["batches"], max_redraws=model_cfg["max_redraws"])
    if "rates" in model_cfg:
        r = model_cfg["rates"]
        return MM1Model(PointMass(r["lambda"]), PointMass(r["mu"]), **kw)
    if data is None:
        raise ValueError("mm1 model needs data")
    lam_post, mu_post = posterior_from_data(data)
    return MM1Model(lam_post, mu_post, **kw)


def _synthetic_data(model_cfg, seed, lambda0=None, n=None, *path) -> DataSet:
    rng = RngStream(derive_seed(seed, LANE_DATA, *path))
    return generate_data(lambda0 or model_cfg["lambda0"], model_cfg["mu0"],
                         n or model_cfg["n"], rng)


def build_model(cfg: dict):
    """Model and (for data-driven mm1) the data set it was built from."""
    m = cfg["model"]
    if m["name"] == "normal_normal":
        return NormalNormalModel(exact_summaries=m["exact_summaries"]), None
    data = None
    if "data" in m:
        try:
            data = read_dataset(m["data"]["x"], m["data"]["y"])
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc), "model.data") from None
    elif "lambda0" in m:
        data = _synthetic_data(m, cfg["seed"])
    return _mm1_from(m, data), data


def _posterior_dict(model):
    if isinstance(model, MM1Model):
        out = {}
        for name, b in (("lambda", model.lambda_posterior), ("mu", model.mu_posterior)):
            out[name] = ({"shape": b.shape, "rate": b.rate} if isinstance(b, GammaPosterior)
                         else {"value": b.value})
        return {"posterior": out}
    return {}


# --------------------------------------------------------------------------
# commands


def _terms_for(cfg, model, samples, alpha):
    if cfg["terms"] == "analytic":
        return analytic_variance_terms(model.truth, alpha)
    return estimate_variance_terms(samples, alpha)


def _interval(cfg, samples, alpha, terms, target):
    proc = CIProcedure(cfg["procedure"], target, beta=cfg["beta"],
                       beta_outer=cfg["beta_outer"], beta_inner=cfg["beta_inner"])
    return proc.build(samples, alpha, terms, warn=False)


def cmd_estimate(cfg: dict) -> ResultRecord:
    model, _ = build_model(cfg)
    samples = simulate_nested(model, cfg["N"], cfg["M"], derive_seed(cfg["seed"], LANE_MAIN),
                              threads=cfg["threads"])
    a = cfg["alpha"]
    return ResultRecord("estimate", cfg,
                        estimates=[var_nested(samples, a).to_dict(),
                                   cvar_nested(samples, a).to_dict()],
                        extra=_posterior_dict(model))


def cmd_ci(cfg: dict) -> ResultRecord:
    model, _ = build_model(cfg)
    samples = simulate_nested(model, cfg["N"], cfg["M"], derive_seed(cfg["seed"], LANE_MAIN),
                              threads=cfg["threads"])
    a = cfg["alpha"]
    terms = _terms_for(cfg, model, samples, a)
    target = Kind(cfg["target"])
    est = var_nested(samples, a) if target is Kind.VAR else cvar_nested(samples, a)
    ci = _interval(cfg, samples, a, terms, target)
    return ResultRecord("ci", cfg, estimates=[est.to_dict()], intervals=[ci.to_dict()],
                        variance_terms=[terms.to_dict()], warnings=list(ci.warnings),
                        extra=_posterior_dict(model))


def cmd_budget(cfg: dict) -> ResultRecord:
    model, _ = build_model(cfg)
    b = cfg["budget"]
    a = cfg["alpha"]
    cost = SimulationCost(b["c1"], b["c2"])
    pilot = simulate_nested(model, b["pilot_n"], b["pilot_m"],
                            derive_seed(cfg["seed"], LANE_PILOT), threads=cfg["threads"])
    summary = derive_pilot_terms(pilot, a, b["family"])
    plan = allocate_budget(summary, a, cfg["beta_outer"], cfg["beta_inner"], cost, b["CB"],
                           b["gamma0"], cfg["target"], b["ratio"])
    rec = ResultRecord("budget", cfg, budget_plan=plan.to_dict(include_grid=True),
                       pilot=summary.to_dict(), variance_terms=[summary.terms.to_dict()],
                       extra={"pilot_cost": total_cost(cost, b["pilot_n"], b["pilot_m"]),
                              **_posterior_dict(model)})
    if b["run"]:
        samples = simulate_nested(model, plan.n, plan.m, derive_seed(cfg["seed"], LANE_MAIN),
                                  threads=cfg["threads"])
        target = plan.target
        est = var_nested(samples, a) if target is Kind.VAR else cvar_nested(samples, a)
        ci = weak_ci(samples, a, cfg["beta_outer"], cfg["beta_inner"],
                     estimate_variance_terms(samples, a), target)
        rec.estimates = [est.to_dict()]
        rec.intervals = [ci.to_dict()]
    return rec


def cmd_coverage(cfg: dict) -> ResultRecord:
    model, _ = build_model(cfg)
    proc = CIProcedure(cfg["procedure"], cfg["target"], beta=cfg["beta"],
                       beta_outer=cfg["beta_outer"], beta_inner=cfg["beta_inner"],
                       terms=cfg["terms"])
    report = coverage_experiment(model, cfg["alpha"], proc, cfg["N"], cfg["M"],
                                 cfg["replications"], derive_seed(cfg["seed"], LANE_COVERAGE),
                                 threads=cfg["threads"])
    notes = []
    if proc.procedure.value == "strong" and cfg["N"] >= cfg["M"] ** 2:
        notes.append(f"N={cfg['N']} >= M^2={cfg['M'] ** 2}: strong intervals are "
                     "outside their asymptotic regime")
    return ResultRecord("coverage", cfg, extra={"coverage": report.csv_row(),
                                                "terms": report.terms}, warnings=notes)


def _mean_row(samples, beta):
    x = np.asarray(samples.inner_mean)
    half = t_quantile(1 - beta / 2, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size)
    mean = float(x.mean())
    return mean, float(half)


def cmd_mm1_tables(cfg: dict) -> ResultRecord:
    m = cfg["model"]
    tab = cfg["tables"]
    rows = []
    for i, lam0 in enumerate(tab["lambda0"]):
        for j, n in enumerate(tab["n"]):
            data = _synthetic_data(m, cfg["seed"], lam0, n, i, j)
            model = _mm1_from(m, data)
            samples = simulate_nested(model, cfg["N"], cfg["M"],
                                      derive_seed(cfg["seed"], LANE_MAIN, i, j),
                                      threads=cfg["threads"])
            mean, half = _mean_row(samples, cfg["beta"])
            rows.append({"lambda0": lam0, "n": n, "alpha": None, "measure": "Mean",
                         "estimate": mean, "half_width": half,
                         "lower": mean - half, "upper": mean + half})
            for a in tab["alpha"]:
                terms = estimate_variance_terms(samples, a)
                for target in (Kind.VAR, Kind.CVAR):
                    ci = weak_ci(samples, a, cfg["beta_outer"], cfg["beta_inner"], terms,
                                 target)
                    rows.append({"lambda0": lam0, "n": n, "alpha": a,
                                 "measure": target.value, "estimate": ci.center,
                                 "half_width": ci.half_width, "lower": ci.lower,
                                 "upper": ci.upper})
    return ResultRecord("mm1-tables", cfg, extra={"rows": rows})


def cmd_gen_data(cfg: dict) -> ResultRecord:
    data = _synthetic_data(cfg["model"], cfg["seed"])
    files = {}
    if cfg["out"] is not None:
        root = Path(cfg["out"])
        root.mkdir(parents=True, exist_ok=True)
        for name in ("x", "y"):
            path = root / f"{name}.txt"
            write_observations(path, getattr(data, name))
            files[name] = str(path)
    lam_post, mu_post = posterior_from_data(data)
    return ResultRecord("gen-data", cfg, extra={
        "files": files, "n": data.n, "sum_x": float(data.x.sum()), "sum_y": float(data.y.sum()),
        "posterior": {"lambda": asdict(lam_post), "mu": asdict(mu_post)}})


_HANDLERS = {"estimate": cmd_estimate, "ci": cmd_ci, "budget": cmd_budget,
             "coverage": cmd_coverage, "mm1-tables": cmd_mm1_tables, "gen-data": cmd_gen_data}


def run(command: str, config: dict, **overrides) -> ResultRecord:
    """Resolve ``config`` and run ``command``; returns the result record."""
    cfg = resolve_config(command, config, **overrides)
    t0 = time.perf_counter()
    rec = _HANDLERS[command](cfg)
    rec.wall_clock = time.perf_counter() - t0
    return rec


# --------------------------------------------------------------------------
# output


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v)
                    for k, v in r.items()})
    return buf.getvalue()


CI_FIELDS = ["target", "procedure", "alpha", "N", "M", "center", "lower", "upper",
             "half_width", "seed"]


def csv_output(rec: ResultRecord) -> str:
    """CSV rendering of a record; the header is fixed per command."""
    cfg = rec.config
    if rec.command == "coverage":
        return _csv_text(CoverageReport.CSV_FIELDS, [rec.extra["coverage"]])
    if rec.command == "budget":
        return _csv_text(["N", "M", "predicted_width"],
                         [dict(zip(("N", "M", "predicted_width"), r))
                          for r in rec.budget_plan["grid"]])
    if rec.command == "mm1-tables":
        return _csv_text(MM1_TABLE_FIELDS, rec.extra["rows"])
    if rec.command == "ci":
        iv = rec.intervals[0]
        row = {"target": iv["target"], "procedure": iv["procedure"], "alpha": cfg["alpha"],
               "N": cfg["N"], "M": cfg["M"], "center": iv["center"], "lower": iv["lower"],
               "upper": iv["upper"], "half_width": iv["half_width"], "seed": cfg["seed"]}
        return _csv_text(CI_FIELDS, [row])
    if rec.command == "estimate":
        return _csv_text(["kind", "layer", "alpha", "value", "n_outer", "m_inner"],
                         rec.estimates)
    return _csv_text(["n", "sum_x", "sum_y"], [rec.extra])


def write_output(rec: ResultRecord, out, fmt: str) -> None:
    path = Path(out)
    if fmt == "json":
        path.write_text(rec.to_json() + "\n")
        return
    text = csv_output(rec)
    if rec.command == "ci" and path.exists() and path.stat().st_size > 0:
        # append the data row under the existing header
        with path.open("a") as fh:
            fh.write(text.split("\n", 1)[1])
    else:
        path.write_text(text)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nestrisk",
                                description="Nested simulation VaR/CVaR estimation, "
                                            "confidence intervals and budget allocation")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--seed", type=int, default=None, help="top-level 64-bit seed")
        s.add_argument("--out", default=None,
                       help="output file (gen-data: directory for x.txt and y.txt)")
        s.add_argument("--format", choices=("csv", "json"), default=None)
        s.add_argument("--threads", type=int, default=None)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        try:
            config = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", "--config") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON ({exc.msg}, line {exc.lineno})",
                              "--config") from None
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "--seed")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("threads must be >= 1", "--threads")
        had_seed = args.seed is not None or (isinstance(config, dict) and "seed" in config)
        rec = run(args.command, config, seed=args.seed, out=args.out, fmt=args.format,
                  threads=args.threads)
    except (ConfigError, SampleSizeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleBudgetError as exc:
        print(f"infeasible budget ({exc.binding}): {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (SimulationError, QuadratureError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    if not had_seed:
        print(f"seed: {rec.config['seed']}", file=sys.stderr)
    for note in rec.warnings:
        print(f"warning: {note}", file=sys.stderr)
    out = rec.config["out"]
    if out is not None and args.command != "gen-data":
        write_output(rec, out, rec.config["format"])
    elif rec.config["format"] == "csv" and args.command != "gen-data":
        sys.stdout.write(csv_output(rec))
    else:
        print(rec.to_json())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
