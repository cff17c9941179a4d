import math

import numpy as np
import pytest

from nestrisk.core import (FunctionModel, NestedSampleSet, NonFiniteSampleError, ResponseModel,
                           SamplerError, SimulationCost, batch_means_var, draw_outer, mean_var,
                           simulate_nested, total_cost)
from nestrisk.models import NormalNormalModel, mm1_model
from nestrisk.rng import RngStream


def point_mass(theta0):
    return lambda n, s: np.full(n, theta0)


def noiseless():
    return FunctionModel(lambda n, s: s.standard_normal(n), lambda th, m, s: np.full(m, th ** 2))


def test_draw_outer_point_mass():
    model = FunctionModel(point_mass(2.5), lambda th, m, s: np.full(m, th))
    assert list(draw_outer(model, 3, RngStream(1))) == [2.5, 2.5, 2.5]


def test_draw_outer_gamma_mean():
    model = FunctionModel(lambda n, s: s.gamma(2.0, 2.0, n), None)
    x = draw_outer(model, 10**6, RngStream(9))
    sd = math.sqrt(2.0) / 2.0
    assert abs(x.mean() - 1.0) < 3 * sd / math.sqrt(x.size)


def test_draw_outer_deterministic():
    m = NormalNormalModel()
    assert np.array_equal(draw_outer(m, 50, RngStream(4)), draw_outer(m, 50, 4))


def test_draw_outer_wrong_length_is_error():
    model = FunctionModel(lambda n, s: np.zeros(n + 1), None)
    with pytest.raises(SamplerError):
        draw_outer(model, 3, 0)


def test_outer_lane_must_be_stream_zero():
    with pytest.raises(ValueError):
        simulate_nested(NormalNormalModel(), 3, 3, RngStream(1, stream_id=2))


def test_noiseless_inner_summaries():
    s = simulate_nested(noiseless(), 40, 7, 3)
    assert np.array_equal(s.inner_mean, s.scenarios ** 2)
    assert np.all(s.inner_var == 0)


def test_single_scenario_many_draws():
    s = simulate_nested(NormalNormalModel(), 1, 10**6, 12)
    assert abs(s.inner_mean[0] - s.scenarios[0]) < 3 * 3 / math.sqrt(10**6)
    assert abs(s.inner_var[0] - 1.0) < 0.01


@pytest.mark.parametrize("model", [NormalNormalModel(), NormalNormalModel(exact_summaries=True),
                                   mm1_model(lambda0=150, n=10, rng=RngStream(3))])
def test_parallel_runs_are_bit_identical(model):
    serial = simulate_nested(model, 503, 40, 77)
    for threads, chunk in ((8, None), (8, 7), (3, 100), (1, 1)):
        assert simulate_nested(model, 503, 40, 77, threads=threads, chunk=chunk) == serial


@pytest.mark.parametrize("model", [NormalNormalModel(),
                                   mm1_model(lambda0=150, n=10, rng=RngStream(3)),
                                   mm1_model(lambda0=150, n=10, rng=RngStream(3), batches=None),
                                   mm1_model(lambda0=50, n=100, rng=RngStream(3),
                                             inner="replication", cycles=20)])
def test_compiled_kernel_matches_per_scenario_path(model):
    thetas = draw_outer(model, 25, 5)
    fast = model.summarize(thetas, 30, 5, 1)
    slow = ResponseModel.summarize(model, thetas, 30, 5, 1)
    assert np.array_equal(fast[0], slow[0])
    assert np.array_equal(fast[1], slow[1])


def test_non_finite_response_reports_indices():
    def resp(theta, m, s):
        out = np.zeros(m)
        if theta == 3.0:
            out[4] = np.nan
        return out
    model = FunctionModel(lambda n, s: np.arange(n, dtype=float), resp)
    with pytest.raises(NonFiniteSampleError) as info:
        simulate_nested(model, 6, 8, 0)
    assert info.value.scenario == 3 and info.value.draw == 4


def test_wrong_response_shape_is_error():
    model = FunctionModel(lambda n, s: np.zeros(n), lambda th, m, s: np.zeros(m - 1))
    with pytest.raises(SamplerError):
        simulate_nested(model, 2, 3, 0)


def test_substream_independence():
    # point-mass belief: inner means of distinct scenarios should be uncorrelated
    model = FunctionModel(point_mass(0.0), lambda th, m, s: s.standard_normal(m))
    s = simulate_nested(model, 20_000, 5, 21)
    x = s.inner_mean
    r = np.corrcoef(x[0::2], x[1::2])[0, 1]
    assert abs(r) < 4 / math.sqrt(10_000)


def test_inner_mean_error_shrinks_like_root_m():
    model = FunctionModel(point_mass(1.0), lambda th, m, s: th + s.standard_normal(m))
    ms = np.array([100, 1000, 10_000])
    rmse = []
    for m in ms:
        err = [simulate_nested(model, 1, int(m), seed).inner_mean[0] - 1.0 for seed in range(200)]
        rmse.append(math.sqrt(np.mean(np.square(err))))
    slope = np.polyfit(np.log(ms), np.log(rmse), 1)[0]
    assert -0.55 <= slope <= -0.45


def test_total_cost_examples():
    assert total_cost(SimulationCost(1, 1), 212, 47) == 10176
    assert total_cost(SimulationCost(0, 1), 5, 4) == 20
    assert total_cost(SimulationCost(2, 3), 1, 1) == 5


def test_total_cost_overflow():
    with pytest.raises(OverflowError):
        total_cost(SimulationCost(1, 1), 2**40, 2**40)
    with pytest.raises(OverflowError):
        total_cost(SimulationCost(1.0, 1e300), 10**10, 10**10)


def test_cost_invariants():
    with pytest.raises(ValueError):
        SimulationCost(-1, 1)
    with pytest.raises(ValueError):
        SimulationCost(1, 0)
    with pytest.raises(ValueError):
        total_cost(SimulationCost(), 0, 3)


def test_sample_set_validation_and_immutability():
    s = NestedSampleSet([1.0, 2.0], [0.5, 0.7], [0.0, 1.0], 3)
    assert s.n == 2 and s.m == 3
    with pytest.raises(ValueError):
        s.inner_mean[0] = 9.0
    with pytest.raises(ValueError):
        NestedSampleSet([1.0], [0.5, 0.7], [0.0, 1.0], 3)
    with pytest.raises(ValueError):
        NestedSampleSet([1.0], [0.5], [-1.0], 3)
    with pytest.raises(ValueError):
        NestedSampleSet([1.0], [0.5], [0.0], 0)


def test_mean_var_matches_numpy():
    x = RngStream(2).standard_normal(1001)
    mean, var = mean_var(x)
    assert mean == pytest.approx(x.mean(), rel=1e-13)
    assert var == pytest.approx(x.var(ddof=1), rel=1e-12)
    assert mean_var(np.array([3.0]))[1] == 0.0


def test_batch_means_reduces_to_sample_variance():
    x = RngStream(5).standard_normal(60)
    assert batch_means_var(x, 60) == pytest.approx(x.var(ddof=1), rel=1e-12)


def test_batch_means_tracks_variance_of_the_mean():
    # AR(1) with phi = 0.8: M * Var(mean) -> 1 / (1 - phi)^2 = 25 (unit innovations)
    phi, m = 0.8, 2000
    est = []
    for seed in range(200):
        e = RngStream(seed).standard_normal(m)
        x = np.empty(m)
        x[0] = e[0] / math.sqrt(1 - phi ** 2)
        for t in range(1, m):
            x[t] = phi * x[t - 1] + e[t]
        est.append(batch_means_var(x, 10))
    assert np.mean(est) == pytest.approx(25.0, rel=0.1)
