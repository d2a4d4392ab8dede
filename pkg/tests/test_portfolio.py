import math

import numpy as np
import pytest
from hypothesis import given, settings

from mbvar.errors import DegenerateTape, InvalidConfig, MissingSecurity
from mbvar.portfolio import (
    MarketBase,
    PortfolioSpec,
    aggregate_market,
    infer_base_prices,
    is_market_proportional,
    liquidity_report,
    market_proportional_portfolio,
    market_shares,
    normalize_to_portfolio,
)
from mbvar.tape import MarketTape, SecurityTape, market_from_arrays

from .oracles import market_arrays


def pair_market():
    a = SecurityTape("A", [10.0, 24.0], [5.0, 8.0])
    b = SecurityTape("B", [10.0, 24.0], [5.0, 8.0])
    return MarketTape((a, b))


def test_market_base_weights():
    base = MarketBase(("A", "B"), [1.0, 2.0], [100.0, 50.0])
    assert base.total_capitalization == 200.0
    assert base.price == pytest.approx(200 / 150)
    np.testing.assert_allclose(base.value_weights, [0.5, 0.5])
    np.testing.assert_allclose(base.share_weights, [2 / 3, 1 / 3])


def test_proportional_portfolio_small_budget():
    base = MarketBase(("A", "B"), [1.0, 2.0], [100.0, 50.0])
    spec = market_proportional_portfolio(base, 20.0)
    np.testing.assert_allclose(spec.holdings, [10.0, 5.0], rtol=1e-15)
    assert spec.price == pytest.approx(20 / 15, rel=1e-15)
    assert spec.price == pytest.approx(base.price, rel=1e-15)
    assert is_market_proportional(spec, base)


def test_full_budget_reproduces_market():
    base = MarketBase(("A", "B"), [1.0, 2.0], [100.0, 50.0])
    spec = market_proportional_portfolio(base, base.total_capitalization)
    np.testing.assert_allclose(spec.holdings, base.shares_outstanding, rtol=1e-15)


def test_scaled_budget_keeps_weights():
    base = MarketBase(("A", "B", "C"), [1.0, 2.0, 7.5], [100.0, 50.0, 3.0])
    full = market_proportional_portfolio(base, base.total_capitalization)
    small = market_proportional_portfolio(base, 0.01 * base.total_capitalization)
    np.testing.assert_allclose(small.holdings, 0.01 * full.holdings, rtol=1e-14)
    np.testing.assert_allclose(small.value_weights, full.value_weights, rtol=1e-14)
    np.testing.assert_allclose(small.share_weights, full.share_weights, rtol=1e-14)


def test_portfolio_validation():
    with pytest.raises(InvalidConfig):
        PortfolioSpec(("A",), [0.0], [1.0])
    with pytest.raises(InvalidConfig):
        PortfolioSpec(("A", "B"), [1.0, -1.0], [1.0, 1.0])
    with pytest.raises(InvalidConfig):
        PortfolioSpec.from_mappings({"A": 1.0}, {"B": 2.0})
    with pytest.raises(InvalidConfig):
        market_proportional_portfolio(MarketBase(("A",), [1.0], [1.0]), 0.0)


def test_normalize_identical_pair():
    spec = PortfolioSpec(("A", "B"), [13.0, 13.0], [2.0, 2.0])
    norm = normalize_to_portfolio(pair_market(), spec)
    np.testing.assert_array_equal(norm.scales, [1.0, 1.0])
    np.testing.assert_array_equal(norm.values, [20.0, 48.0])
    np.testing.assert_array_equal(norm.volumes, [10.0, 16.0])


def test_single_security_normalized_prices_unchanged():
    t = SecurityTape("A", [10.0, 24.0, 7.0], [5.0, 8.0, 3.5])
    spec = PortfolioSpec(("A",), [4.0], [2.0])
    norm = normalize_to_portfolio(MarketTape((t,)), spec)
    np.testing.assert_allclose(norm.prices, t.prices, rtol=1e-15)
    assert norm.total_volume == pytest.approx(4.0, rel=1e-15)


def test_unheld_security_is_ignored_by_normalization():
    m = MarketTape((SecurityTape("A", [10.0, 24.0], [5.0, 8.0]), SecurityTape("B", [3.0, 4.0], [1.0, 1.0])))
    spec = PortfolioSpec(("A",), [13.0], [2.0])
    norm = normalize_to_portfolio(m, spec)
    np.testing.assert_allclose(norm.volumes, [5.0, 8.0])


def test_missing_held_security():
    spec = PortfolioSpec(("A", "Z"), [1.0, 1.0], [1.0, 1.0])
    with pytest.raises(MissingSecurity):
        normalize_to_portfolio(pair_market(), spec)


def test_aggregate_market_examples():
    m = MarketTape((SecurityTape("A", [10.0, 4.0], [5.0, 2.0]), SecurityTape("B", [6.0, 9.0], [1.0, 3.0])))
    agg = aggregate_market(m)
    assert agg.values.tolist() == [16.0, 13.0]
    assert agg.volumes.tolist() == [6.0, 5.0]
    assert agg.prices[0] == pytest.approx(8 / 3, rel=1e-15)
    single = MarketTape((SecurityTape("A", [10.0, 4.0], [5.0, 2.0]),))
    one = aggregate_market(single)
    assert one.values.tolist() == [10.0, 4.0] and one.volumes.tolist() == [5.0, 2.0]


def test_constant_security_volumes_give_constant_market_volume():
    m = market_from_arrays(("A", "B"), np.array([[1.0, 2.0, 3.0], [5.0, 4.0, 3.0]]), np.array([[2.0] * 3, [7.0] * 3]))
    assert np.all(aggregate_market(m).volumes == 9.0)


def test_market_shares_toy_volumes():
    toy_a = market_from_arrays(("A", "B"), np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[1000.0] * 2, [2000.0] * 2]))
    np.testing.assert_allclose(market_shares(toy_a).volume_shares, [1 / 3, 2 / 3], rtol=1e-15)
    toy_b = market_from_arrays(("A", "B"), np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[3000.0] * 2, [2000.0] * 2]))
    np.testing.assert_allclose(market_shares(toy_b).volume_shares, [3 / 5, 2 / 5], rtol=1e-15)


def test_identical_tapes_share_equally():
    t = ([3.0, 5.0, 1.0], [1.0, 2.0, 3.0])
    m = MarketTape(tuple(SecurityTape(f"S{k}", *t) for k in range(4)))
    snap = market_shares(m)
    np.testing.assert_allclose(snap.value_shares, 0.25)
    np.testing.assert_allclose(snap.volume_shares, 0.25)


def test_liquidity_examples():
    m = MarketTape((SecurityTape("A", [10.0, 10.0], [50.0, 50.0]), SecurityTape("B", [10.0, 10.0], [50.0, 50.0])))
    ok = liquidity_report(PortfolioSpec(("A", "B"), [1.0, 1.0], [1.0, 1.0]), m)
    assert ok.passed and ok.ratios == {"A": 0.01, "B": 0.01}
    bad = liquidity_report(PortfolioSpec(("A", "B"), [100.0, 1.0], [1.0, 1.0]), m)
    assert not bad.passed and bad.ratios["A"] == 1.0 and bad.failing == ("A",)
    mixed = liquidity_report(PortfolioSpec(("A", "B"), [3.0, 7.0], [1.0, 1.0]), m, 0.05)
    assert mixed.failing == ("B",)
    with pytest.raises(InvalidConfig):
        liquidity_report(PortfolioSpec(("A",), [1.0], [1.0]), m, 1.5)


def test_infer_base_prices():
    prices, inferred = infer_base_prices(pair_market(), {"A": 3.0})
    assert prices == {"A": 3.0, "B": 2.0} and inferred == ["B"]


@settings(max_examples=150, deadline=None)
@given(market_arrays())
def test_conservation(arrays):
    values, volumes = arrays
    ids = tuple(f"S{k}" for k in range(len(values)))
    m = market_from_arrays(ids, np.array(values), np.array(volumes))
    holdings = np.linspace(1.0, 3.0, len(ids))
    spec = PortfolioSpec(ids, holdings, np.ones(len(ids)))
    norm = normalize_to_portfolio(m, spec)
    per_security = norm.normalized_volumes.sum(axis=1)
    np.testing.assert_allclose(per_security, holdings, rtol=1e-12)
    assert math.isclose(norm.total_volume, holdings.sum(), rel_tol=1e-12)
    snap = market_shares(m)
    assert math.isclose(math.fsum(snap.value_shares), 1.0, rel_tol=1e-12)
    assert math.isclose(math.fsum(snap.volume_shares), 1.0, rel_tol=1e-12)


@settings(max_examples=100, deadline=None)
@given(market_arrays())
def test_proportional_portfolio_price_matches_market(arrays):
    j = len(arrays[0])
    rng = np.random.default_rng(j)
    base = MarketBase(tuple(f"S{k}" for k in range(j)), rng.uniform(1, 100, j), rng.uniform(1e3, 1e6, j))
    spec = market_proportional_portfolio(base, 1234.5)
    assert math.isclose(spec.price, base.price, rel_tol=1e-12)


def test_degenerate_zero_holdings_in_tape():
    with pytest.raises((DegenerateTape, InvalidConfig)):
        normalize_to_portfolio(pair_market(), PortfolioSpec(("A", "B"), [0.0, 0.0], [1.0, 1.0]))
