import itertools
import math

import numpy as np
import pytest

from oracles import median3, net_forward, staircase
from relu_forge.approximator import (
    SamplingPlan,
    TargetFunction,
    approximant_from_network,
    build_approximant,
    build_g,
    certify,
    choose_delta,
    in_trifling,
    index_map,
    index_weights,
    loglog_slope,
    lp_norm,
    partition,
    rate_argument,
    rate_sweep,
    rows_to_csv,
    theorem_budget,
    trifling_measure_bound,
    uniform_lift,
)
from relu_forge.errors import ArgumentError, CapabilityError, CapacityError
from relu_forge.fixtures import zoo
from relu_forge.fnn_core import deserialize, evaluate_scalar, serialize
from relu_forge.modulus import ModulusOfContinuity


def test_partition_intervals_and_gaps():
    P = partition(3, 1, 0.1)
    assert P.intervals() == [(0.0, 1 / 3 - 0.1), (1 / 3, 2 / 3 - 0.1), (2 / 3, 1.0)]
    with pytest.raises(ArgumentError):
        partition(3, 1, 0.2)
    assert len(list(partition(2, 2, 0.1).cubes())) == 4


def test_in_trifling_matches_pointwise_oracle():
    rng = np.random.default_rng(0)
    K, delta = 4, 0.05
    X = rng.random((2000, 2))
    got = in_trifling(X, K, delta, 2)
    want = [any(staircase(t, K, delta) is None for t in x) for x in X]
    assert got.tolist() == want
    # empirical measure stays below K d delta
    assert got.mean() <= trifling_measure_bound(K, 2, delta)


def test_index_map_is_injective_on_cubes():
    K, d = 3, 3
    w = index_weights(K, d)
    idx = [int(round(np.dot(b, w))) for b in itertools.product(range(K), repeat=d)]
    assert len(set(idx)) == K ** d and max(idx) < 2 * K ** d
    net = index_map(K, d)
    beta = np.array([2, 1, 0])
    want = beta[0] / K + beta[1] / K ** 2 + beta[2] / (2 * K ** 3)
    assert net_forward(net, beta)[0] == pytest.approx(want)


def test_build_g_values_at_representatives():
    f = zoo("holder_sqrt")
    K, d = 3, 2
    g = build_g(f, K, d)
    shift = f.modulus(math.sqrt(d)) - f(np.zeros(d))
    w = index_weights(K, d)
    for beta in itertools.product(range(K), repeat=d):
        j = int(round(np.dot(beta, w)))
        assert g.values[j] == pytest.approx(f(np.array(beta) / K) + shift)
    assert g.values.min() >= -1e-12   # shifted values are nonnegative


def test_choose_delta_caps():
    f = zoo("abs")
    assert choose_delta(f, 2, 2, math.inf, False, 16) == pytest.approx(1 / 48)
    d1 = choose_delta(f, 2, 2, 1.0, False, 16)
    assert 0 < d1 <= 1 / 48


@pytest.mark.parametrize("name,N,L", [("abs", 1, 1), ("abs", 2, 3), ("holder_sqrt", 2, 2), ("linear", 2, 1)])
def test_sup_error_outside_trifling_within_bound(name, N, L):
    f = zoo(name, d=2 if name == "linear" else None)
    a = build_approximant(f, N, L)
    rep = certify(a, f, SamplingPlan("monte-carlo", 20_000, 1))
    assert rep.passed
    assert rep.measured_outside_trifling <= 18 * math.sqrt(f.dim) * f.modulus(rate_argument(N, L, f.dim))
    w, dep = theorem_budget(N, L, f.dim)
    assert a.network.width <= w and a.network.depth <= dep


def test_abs_error_decreases_with_size():
    f = zoo("abs")
    rows = rate_sweep(f, [(1, 1), (2, 2), (3, 3)], plan=SamplingPlan("grid", 5000))
    errs = [r["measured_out"] for r in rows]
    assert errs[0] > errs[1] > errs[2]
    assert loglog_slope([1, 4, 9], errs) <= -1.5


def test_constant_target_exact():
    f = zoo("const", d=3, value=2.5)
    a = build_approximant(f, 2, 2)
    X = np.random.default_rng(0).random((100, 3))
    assert np.all(a(X) == 2.5)


def test_uniform_lift_is_median_of_shifts():
    f = zoo("abs")
    a = build_approximant(f, 2, 2)
    lifted = uniform_lift(a.network, a.K, a.delta, 1)
    for x in np.random.default_rng(2).random(30):
        vals = [net_forward(a.network, [x + s * a.delta])[0] for s in (-1, 0, 1)]
        assert net_forward(lifted, [x])[0] == pytest.approx(median3(*vals), abs=1e-9)


def test_uniform_lift_gives_global_sup_bound():
    f = zoo("holder_sqrt")
    a = build_approximant(f, 2, 1, uniform=True)
    rep = certify(a, f, SamplingPlan("monte-carlo", 20_000, 3))
    assert math.isfinite(a.bound_global) and rep.measured_global <= a.bound_global


def test_lp_norm_oracle():
    e = np.array([1.0, 2.0, 2.0])
    assert lp_norm(e, 1) == pytest.approx(5 / 3)
    assert lp_norm(e, 2) == pytest.approx(math.sqrt(3))
    assert lp_norm(e, math.inf) == 2.0


def test_capacity_and_capability_errors():
    f = zoo("abs")
    with pytest.raises(CapacityError):
        build_approximant(f, 10, 10, cap=100)
    g = TargetFunction(5, lambda X: X.sum(1), ModulusOfContinuity.holder(1, 1))
    with pytest.raises(CapabilityError):
        build_approximant(g, 1, 1, uniform=True)
    with pytest.raises(ArgumentError):
        build_approximant(f, 0, 1)


def test_roundtrip_rebuilds_record():
    f = zoo("abs")
    a = build_approximant(f, 2, 2, norm=2.0)
    b = approximant_from_network(deserialize(serialize(a.network)), f)
    assert (b.N, b.L, b.K, b.delta, b.norm) == (a.N, a.L, a.K, a.delta, a.norm)
    X = np.linspace(0, 1, 1000)
    assert np.array_equal(evaluate_scalar(b.network, X), evaluate_scalar(a.network, X))


def test_sweep_csv_is_deterministic_and_records_failures():
    f = zoo("abs")
    rows = rate_sweep(f, [(1, 1), (2, 1)], plan=SamplingPlan("grid", 1000))
    assert rows_to_csv(rows) == rows_to_csv(rate_sweep(f, [(2, 1), (1, 1)], plan=SamplingPlan("grid", 1000)))
    bad = TargetFunction(1, lambda X: np.full(X.shape[0], np.nan), ModulusOfContinuity.holder(1, 1))
    rows = rate_sweep(bad, [(1, 1)])
    assert rows[0]["pass"] is False and rows[0]["error"]
