import numpy as np
import pytest

from purekit import catalog
from purekit.game import expected_payoff
from purekit.strategy import PureStrategy, cell_weights, uniform_partition
from purekit.twoplayer import (Opponent, adversarial_suite, combine, embed_weights, from_spec,
                               gap_tables, integrate_out, lift_opponents,
                               opponent_from_profile, quadrature_budget, worst_case_opponents)


@pytest.mark.parametrize("name,n", [("cournot", 2), ("cournot", 3), ("zero-sum-signal", 2),
                                    ("quadratic-coordination", 3)])
def test_aggregate_game_reproduces_expected_payoff(name, n):
    spec = catalog.catalog_game(name, n)
    Q = spec.prior.resolution * 2
    prof = [catalog.reference_family(name if n == 2 else "cournot", i, Q, 1, seed=i)[0]
            for i in range(n)]
    for player in range(n):
        game = from_spec(spec, player, 2)
        opp = opponent_from_profile(spec, player, prof, 2)
        got = game.strategy_values(prof[player], opp)
        want = [expected_payoff(spec, prof, c, 2) for c in range(spec.m)]
        assert np.allclose(got, want, atol=1e-13, rtol=0)


def test_integrate_out_matches_full_game():
    spec = catalog.catalog_game("quadratic-coordination", 3)
    prof = [catalog.reference_family("cournot", i, 4, 1, seed=10 + i)[0] for i in range(3)]
    for m, j in [(0, 1), (2, 0), (1, 2)]:
        game, excluded = integrate_out(spec, m, j, prof, 2)
        assert excluded == 0
        aj, Wj = cell_weights(prof[j], 4)
        got = game.strategy_values(prof[m], Opponent((aj,), (Wj,)))
        want = [expected_payoff(spec, prof, c, 2) for c in range(3)]
        assert np.allclose(got, want, atol=1e-13, rtol=0)


def test_nonneg_split_and_constant():
    spec = catalog.catalog_game("zero-sum-signal")
    game = from_spec(spec, 0, 2)
    f = catalog.reference_strategy("zero-sum-signal", 0, 4)
    opp = opponent_from_profile(spec, 0, [f, catalog.reference_strategy("zero-sum-signal", 1, 4)], 2)
    base = game.strategy_values(f, opp)
    split = game.nonneg().strategy_values(f, opp)
    assert np.all(split >= 0)
    assert np.allclose(split[:2] - split[2:], base)
    const = game.with_constant().strategy_values(f, opp)
    assert const[-1] == pytest.approx(1.0)
    assert game.select(1).strategy_values(f, opp)[0] == pytest.approx(base[1])


def test_combine_scales_each_subgame():
    games = [from_spec(catalog.catalog_game("zero-sum-signal"), 0, 2),
             from_spec(catalog.catalog_game("quadratic-coordination"), 0, 2)]
    C = combine(games)
    M = len(C.parts["games"])
    assert M == 4 and C.Qy == sum(g.Qy for g in games) * 2
    rng = np.random.default_rng(0)
    grid = np.linspace(0, 1, 5)
    opps = [Opponent((grid,), (rng.dirichlet(np.ones(5), size=g.Qy),)) for g, _ in C.parts["games"]]
    f = catalog.reference_strategy("cournot", 0, 4)
    comp = C.strategy_values(f, lift_opponents(C, opps))
    for t, ((g, c), opp) in enumerate(zip(C.parts["games"], opps)):
        assert comp[t] == pytest.approx(g.strategy_values(f, opp)[c] / M, abs=1e-14)


def test_combine_rejects_mismatched_games():
    with pytest.raises(TypeError):
        combine([from_spec(catalog.catalog_game("cournot"), 0, 2),
                 from_spec(catalog.catalog_game("zero-sum-signal"), 0, 2)])


def test_suite_is_deterministic_and_sized():
    game = from_spec(catalog.catalog_game("cournot"), 0, 2)
    a = adversarial_suite(game, 40, seed=5)
    b = adversarial_suite(game, 40, seed=5)
    c = adversarial_suite(game, 40, seed=6)
    assert len(a) == 40
    assert all(np.array_equal(x.weights[0], y.weights[0]) for x, y in zip(a, b))
    assert not all(np.array_equal(x.weights[0], y.weights[0]) for x, y in zip(a[20:], c[20:]))
    for opp in a:
        assert np.allclose(opp.weights[0].sum(axis=1), 1)


def test_worst_case_dominates_suite():
    game = from_spec(catalog.catalog_game("zero-sum-signal"), 0, 2)
    f = catalog.reference_strategy("zero-sum-signal", 0, game.Qx)
    p = PureStrategy(uniform_partition(game.Qx), np.linspace(0.2, 0.8, game.Qx))
    a1, W1 = cell_weights(f, game.Qx)
    a2, W2 = cell_weights(p, game.Qx)
    atoms = np.union1d(a1, a2)
    F1, F2 = embed_weights(a1, W1, atoms), embed_weights(a2, W2, atoms)
    suite = adversarial_suite(game, 64, seed=0)
    table, fields = gap_tables(game, F1, F2, atoms, suite)
    worst, _ = gap_tables(game, F1, F2, atoms, worst_case_opponents(game, fields, list(suite[0].atoms)))
    for c in range(game.m):
        assert worst[2 * c, c] >= table[:, c].max() - 1e-14
        assert worst[2 * c + 1, c] <= table[:, c].min() + 1e-14


def test_quadrature_budget_shrinks_with_subdivision():
    spec = catalog.catalog_game("cournot")
    f = catalog.reference_strategy("cournot", 0, 8)
    budgets = []
    for s in (2, 4, 8):
        game = from_spec(spec, 0, s)
        budgets.append(quadrature_budget(game, [f], adversarial_suite(game, 8, seed=0)))
    assert budgets[0] > budgets[1] > budgets[2] > 0
