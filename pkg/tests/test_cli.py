import csv
import io
import json

import pytest

from nestrisk.ci import CoverageReport
from nestrisk.cli import (CI_FIELDS, ConfigError, ResultRecord, csv_output, main,
                          resolve_config, run)

NN = {"name": "normal_normal"}


def nn_config(**kw):
    return {"model": dict(NN), "alpha": 0.95, "seed": 7, **kw}


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- config handling ---------------------------------------------------------

def test_missing_model_name_names_the_field():
    with pytest.raises(ConfigError) as info:
        resolve_config("estimate", {"model": {}, "alpha": 0.95, "N": 10, "M": 10})
    assert info.value.path == "model.name"


@pytest.mark.parametrize("cfg,path", [
    ({"model": NN, "alpha": 1.5, "N": 40, "M": 40}, "alpha"),
    ({"model": NN, "alpha": 0.9, "N": 40}, "M"),
    ({"model": NN, "alpha": 0.9, "N": 40, "M": 40, "bogus": 1}, "bogus"),
    ({"model": NN, "alpha": 0.9, "N": 40, "M": 40, "budget": {"CB": 10}}, "budget"),
    ({"model": {"name": "mm1"}, "alpha": 0.9, "N": 40, "M": 40}, "model.data"),
    ({"model": {"name": "mm1", "lambda0": 50}, "alpha": 0.9, "N": 40, "M": 40}, "model.n"),
])
def test_config_errors_carry_paths(cfg, path):
    with pytest.raises(ConfigError) as info:
        resolve_config("estimate", cfg)
    assert info.value.path == path


def test_flags_override_and_defaults():
    cfg = resolve_config("ci", nn_config(N=40, M=40, threads=2), seed=99, threads=4, fmt="csv")
    assert (cfg["seed"], cfg["threads"], cfg["format"]) == (99, 4, "csv")
    assert cfg["beta_outer"] == cfg["beta_inner"] == 0.025
    assert cfg["procedure"] == "weak"


def test_generated_seed_is_embedded():
    cfg = resolve_config("estimate", {"model": NN, "alpha": 0.9, "N": 40, "M": 40})
    assert 0 <= cfg["seed"] < 2**64


def test_coverage_needs_closed_form_truth():
    cfg = {"model": {"name": "mm1", "rates": {"lambda": 50, "mu": 500}}, "alpha": 0.95,
           "N": 40, "M": 40, "replications": 2}
    with pytest.raises(ConfigError, match="normal_normal"):
        resolve_config("coverage", cfg)


# -- commands ----------------------------------------------------------------

def test_estimate_reruns_bit_identically_from_echo():
    rec = run("estimate", nn_config(N=5000, M=200))
    again = run("estimate", rec.config)
    assert again.estimates == rec.estimates
    assert all(abs(e["value"]) < 10 for e in rec.estimates)
    threaded = run("estimate", rec.config, threads=4)
    assert threaded.estimates == rec.estimates


def test_result_record_round_trip():
    rec = run("ci", nn_config(N=212, M=47))
    back = ResultRecord.from_json(rec.to_json())
    assert back == rec


def test_ci_weak_table_row():
    rec = run("ci", nn_config(N=212, M=47, terms="analytic"))
    assert rec.intervals[0]["half_width"] == pytest.approx(0.65, rel=0.10)


def test_ci_strong_regime_warning_recorded():
    rec = run("ci", nn_config(N=400, M=20, procedure="strong"))
    assert rec.warnings and "M^2" in rec.warnings[0]


def test_ci_mm1_table_half_width():
    cfg = {"model": {"name": "mm1", "lambda0": 50, "n": 100}, "alpha": 0.9, "N": 5000,
           "M": 200, "seed": 2024}
    rec = run("ci", cfg)
    assert rec.intervals[0]["half_width"] == pytest.approx(5.1e-4, rel=0.5)


def test_estimate_mm1_table_row():
    cfg = {"model": {"name": "mm1", "lambda0": 50, "n": 10**4}, "alpha": 0.95, "N": 5000,
           "M": 200, "seed": 2024}
    rec = run("estimate", cfg)
    assert rec.estimates[0]["value"] == pytest.approx(2.5e-3, rel=0.3)


def test_budget_normal_normal_near_table_design():
    rec = run("budget", nn_config(budget={"CB": 10**4}))
    plan = rec.budget_plan
    assert 212 / 1.5 <= plan["n"] <= 212 * 1.5
    assert 47 / 1.5 <= plan["m"] <= 47 * 1.5
    grid = rows(csv_output(rec))
    assert list(grid[0]) == ["N", "M", "predicted_width"]
    assert len(grid) == plan["feasible_grid_size"]


def test_budget_run_main_experiment():
    rec = run("budget", nn_config(budget={"CB": 10**4, "run": True}))
    assert rec.intervals and rec.estimates[0]["n_outer"] == rec.budget_plan["n"]


def test_coverage_single_replication():
    rec = run("coverage", nn_config(N=40, M=40, replications=1))
    assert rec.extra["coverage"]["coverage"] in (0.0, 1.0)
    assert list(rows(csv_output(rec))[0]) == list(CoverageReport.CSV_FIELDS)


def test_mm1_tables_rows():
    cfg = {"model": {"name": "mm1"}, "N": 5000, "M": 200, "seed": 2024,
           "tables": {"lambda0": [50, 250], "n": [10, 10**4], "alpha": [0.99]}}
    rec = run("mm1-tables", cfg)
    table = {(r["lambda0"], r["n"], r["alpha"], r["measure"]): r for r in rec.extra["rows"]}
    assert len(table) == 2 * 2 * 3
    assert table[(50, 10**4, 0.99, "VaR")]["estimate"] == pytest.approx(2.7e-3, rel=0.3)
    assert table[(50, 10**4, 0.99, "CVaR")]["estimate"] == pytest.approx(2.8e-3, rel=0.3)
    assert (table[(250, 10, 0.99, "CVaR")]["estimate"]
            >= table[(250, 10**4, 0.99, "CVaR")]["estimate"])
    for lam0 in (50, 250):
        for n in (10, 10**4):
            mean = table[(lam0, n, None, "Mean")]["estimate"]
            var = table[(lam0, n, 0.99, "VaR")]["estimate"]
            assert table[(lam0, n, 0.99, "CVaR")]["estimate"] >= var >= mean


def test_mm1_tables_empty_list():
    cfg = {"model": {"name": "mm1"}, "N": 50, "M": 50,
           "tables": {"lambda0": [], "n": [10], "alpha": [0.9]}}
    with pytest.raises(ConfigError) as info:
        resolve_config("mm1-tables", cfg)
    assert info.value.path == "tables.lambda0"


# -- entry point -------------------------------------------------------------

def test_main_missing_name_exits_2(tmp_path, capsys):
    p = write_config(tmp_path, {"model": {}, "alpha": 0.95, "N": 10, "M": 10})
    assert main(["estimate", "--config", p]) == 2
    assert "model.name" in capsys.readouterr().err


def test_main_sample_floor_exits_2(tmp_path, capsys):
    p = write_config(tmp_path, nn_config(N=10, M=10))
    assert main(["ci", "--config", p]) == 2
    assert "N >= 30" in capsys.readouterr().err


def test_main_unstable_queue_exits_3(tmp_path):
    cfg = {"model": {"name": "mm1", "rates": {"lambda": 600, "mu": 500}, "max_redraws": 10},
           "alpha": 0.95, "N": 40, "M": 40, "seed": 1}
    assert main(["estimate", "--config", write_config(tmp_path, cfg)]) == 3


def test_main_infeasible_budget_exits_4(tmp_path, capsys):
    p = write_config(tmp_path, nn_config(budget={"CB": 100}))
    assert main(["budget", "--config", p]) == 4
    assert "infeasible" in capsys.readouterr().err


def test_main_bad_json_exits_2(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{")
    assert main(["estimate", "--config", str(p)]) == 2


def test_main_prints_generated_seed(tmp_path, capsys):
    p = write_config(tmp_path, {"model": NN, "alpha": 0.9, "N": 40, "M": 40})
    assert main(["estimate", "--config", p]) == 0
    err = capsys.readouterr().err
    assert err.startswith("seed: ")


def test_main_ci_csv_appends_rows(tmp_path):
    p = write_config(tmp_path, nn_config(N=212, M=47))
    out = tmp_path / "ci.csv"
    for seed in ("1", "2"):
        assert main(["ci", "--config", p, "--seed", seed, "--format", "csv",
                     "--out", str(out)]) == 0
    table = rows(out.read_text())
    assert list(table[0]) == CI_FIELDS
    assert [r["seed"] for r in table] == ["1", "2"]


def test_main_json_output_is_stable(tmp_path):
    p = write_config(tmp_path, nn_config(N=100, M=50))
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert main(["estimate", "--config", p, "--out", str(out), "--threads", str(k + 1)]) == 0
        d = json.loads(out.read_text())
        d.pop("wall_clock")
        d["config"].pop("threads")
        d["config"].pop("out")
        outs.append(d)
    assert outs[0] == outs[1]


def test_main_gen_data_writes_files(tmp_path):
    cfg = {"model": {"name": "mm1", "lambda0": 50, "n": 25}, "seed": 3}
    out = tmp_path / "data"
    assert main(["gen-data", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == 0
    x = (out / "x.txt").read_text().split()
    y = (out / "y.txt").read_text().split()
    assert len(x) == len(y) == 25
    # the files feed straight back in as an mm1 data source
    back = {"model": {"name": "mm1", "data": {"x": str(out / "x.txt"), "y": str(out / "y.txt")}},
            "alpha": 0.9, "N": 40, "M": 40, "seed": 3}
    assert main(["estimate", "--config", write_config(tmp_path, back, "b.json")]) == 0
