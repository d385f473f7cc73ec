import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from purekit import catalog
from purekit.errors import ParameterError, ValidationError
from purekit.measures import ActionSpace, FiniteSupportMeasure, make_dense_net
from purekit.strategy import (MixedStrategy, PureStrategy, SimpleApproximator, cell_of,
                              cell_weights, common_refinement, distinct_count, is_aligned,
                              max_support, pure_to_mixed, sample_actions, simple_approximate,
                              strategy_from_json, strategy_sup_distance, strategy_to_json,
                              uniform_partition)

UNIT = ActionSpace.interval()


def D(a):
    return FiniteSupportMeasure.dirac(a)


def test_partition_validation():
    with pytest.raises(ValidationError):
        MixedStrategy([0.0, 0.5], [D(0.1)])
    with pytest.raises(ValidationError):
        MixedStrategy([0.0, 0.6, 0.4, 1.0], [D(0.1)] * 3)
    with pytest.raises(ParameterError):
        uniform_partition(0)


def test_cells_are_right_closed():
    t = uniform_partition(4)
    assert cell_of(t, [0.0, 0.25, 0.2500001, 1.0]).tolist() == [0, 0, 1, 3]


def test_common_refinement_and_refine():
    t = common_refinement([0, 0.5, 1], [0, 0.25, 1])
    assert t.tolist() == [0, 0.25, 0.5, 1]
    f = MixedStrategy([0, 0.5, 1], [D(0.1), D(0.9)])
    g = f.refine(t)
    for x in np.linspace(0, 1, 11):
        assert g(x) == f(x)
    with pytest.raises(ParameterError):
        g.refine([0, 0.5, 1])


def test_pure_strategy_simplified_and_range():
    p = PureStrategy(uniform_partition(4), [0.2, 0.2, 0.7, 0.7])
    s = p.simplified()
    assert s.partition.tolist() == [0, 0.5, 1]
    assert p.range().tolist() == [0.2, 0.7]
    assert distinct_count(p) == 2
    m = pure_to_mixed(p)
    assert max_support(m) == 1 and m(0.9) == D(0.7)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_cell_weights_rows_sum_to_one_and_preserve_means(cells, mult, seed):
    f = catalog.reference_family("cournot", 0, cells, 1, seed=seed)[0]
    Q = cells * mult
    atoms, W = cell_weights(f, Q)
    assert np.allclose(W.sum(axis=1), 1)
    mids = (np.arange(Q) + 0.5) / Q
    means = W @ atoms
    assert np.allclose(means, [float(f(x).mean()) for x in mids])
    assert is_aligned(f, Q)


def test_cell_weights_average_unaligned():
    # [DERIVED] breakpoint at 1/3 on a 2-cell grid: cell 0 holds 2/3 of 0.0 and 1/3 of 1.0
    f = PureStrategy([0, 1 / 3, 1], [0.0, 1.0])
    atoms, W = cell_weights(f, 2)
    assert atoms.tolist() == [0.0, 1.0]
    assert np.allclose(W, [[2 / 3, 1 / 3], [0, 1]])
    assert not is_aligned(f, 2)


def test_json_roundtrip():
    f = catalog.reference_strategy("zero-sum-signal", 0, 4)
    assert strategy_from_json(strategy_to_json(f)) == f
    p = PureStrategy(uniform_partition(2), [0.1, 0.3])
    assert strategy_from_json(strategy_to_json(p)) == p


def test_sample_actions_frequencies():
    f = MixedStrategy.constant(FiniteSupportMeasure([0.0, 1.0], [0.3, 0.7]))
    xs = np.random.default_rng(0).random(20000)
    draws = sample_actions(f, xs, np.random.default_rng(1))
    assert abs(draws.mean() - 0.7) < 0.02


def test_sup_distance():
    f = MixedStrategy([0, 0.5, 1], [D(0.1), D(0.9)], UNIT)
    g = PureStrategy([0, 0.25, 1], [0.1, 0.8], UNIT)
    assert strategy_sup_distance(f, g) == pytest.approx(0.7)
    other = PureStrategy([0, 1], [0.5], ActionSpace.interval(0, 2))
    with pytest.raises(TypeError):
        strategy_sup_distance(f, other)


def test_simple_approximation_monotone_and_net_valued():
    net = make_dense_net(UNIT, 0.1, 10)
    f = catalog.reference_strategy("cournot", 0, 4)
    ap = SimpleApproximator(f, net)
    sups = [ap.at(nu)[1] for nu in (1, 11, 100, 400, 1000)]
    assert all(b <= a for a, b in zip(sups, sups[1:]))
    g, sup = simple_approximate(f, net, 400)
    assert sup == pytest.approx(strategy_sup_distance(f, g, UNIT), abs=1e-12)
    assert all(net.rank(v) is not None for v in g.values)
    with pytest.raises(ParameterError):
        ap.at(0)
