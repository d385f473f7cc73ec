import pytest

from purekit import catalog
from purekit.equilibrium import epsilon_nash_check
from purekit.errors import ParameterError
from purekit.measures import FiniteSupportMeasure
from purekit.strategy import MixedStrategy, PureStrategy, is_aligned, uniform_partition


@pytest.mark.parametrize("name", catalog.NAMES)
def test_catalog_games_parse_and_respect_bound(name):
    for n in ((2,) if name == "zero-sum-signal" else (2, 3)):
        g = catalog.catalog_game(name, n)
        assert g.n == n and g.m == n
        assert g.check_bound()
        assert catalog.describe(name)


def test_catalog_errors():
    with pytest.raises(ParameterError):
        catalog.catalog_text("nope")
    with pytest.raises(ParameterError):
        catalog.catalog_text("zero-sum-signal", 3)
    with pytest.raises(ParameterError):
        catalog.catalog_text("cournot", 5)


@pytest.mark.parametrize("name", catalog.NAMES)
def test_reference_strategies(name):
    f = catalog.reference_strategy(name, 0, 8)
    assert f.cells == 8 and is_aligned(f, 8)
    fam = catalog.reference_family(name, 0, 4, 3, seed=1)
    assert len(fam) == 3
    assert fam == catalog.reference_family(name, 0, 4, 3, seed=1)


def test_zero_sum_known_equilibrium():
    # [DERIVED] the spread game is won at the endpoints: player 1 mixing 1/2-1/2
    # on {0, 1} against 1/2 is a best response, and 1/2 minimizes E (k1 - k2)^2.
    g = catalog.catalog_game("zero-sum-signal")
    t = uniform_partition(1)
    prof = [MixedStrategy(t, [FiniteSupportMeasure([0.0, 1.0], [0.5, 0.5])]),
            PureStrategy(t, [0.5])]
    assert max(epsilon_nash_check(g, prof)) == pytest.approx(0.0, abs=1e-12)
