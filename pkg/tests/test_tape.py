import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbvar.errors import ConsistencyError, InvalidTick, UndefinedCorrelation
from mbvar.tape import (
    AveragingWindow,
    MarketTape,
    SecurityTape,
    TradeTick,
    correlation_constant,
    correlation_or_zero,
    moments,
    vwap,
)

from .oracles import exact_moments, positive_tapes


def two_tick():
    return SecurityTape.from_ticks("A", [(10, 5), (24, 8)])


def test_trade_tick_price():
    assert TradeTick(10.0, 5.0).price == 2.0


@pytest.mark.parametrize("value, volume", [(10, 0), (10, -1), (0, 5), (-1, 5), (float("nan"), 1), (1, float("inf"))])
def test_trade_tick_rejects(value, volume):
    with pytest.raises(InvalidTick):
        TradeTick(value, volume)


def test_tape_needs_two_ticks():
    with pytest.raises(InvalidTick):
        SecurityTape("A", [1.0], [1.0])


def test_tape_arrays_read_only():
    t = two_tick()
    with pytest.raises(ValueError):
        t.values[0] = 3.0


def test_two_tick_moments_exact():
    s = moments(two_tick())
    assert s.vwap == pytest.approx(34 / 13, rel=1e-15)
    assert s.psi2 == pytest.approx(49 / 289, rel=1e-14)
    assert s.chi2 == pytest.approx(9 / 169, rel=1e-14)
    assert s.phi == pytest.approx(21 / 221, rel=1e-14)
    assert correlation_constant(s) == 1.0


def test_constant_volume_moments():
    t = SecurityTape("A", [10.0, 12.0, 9.0], [5.0, 5.0, 5.0])
    s = moments(t)
    assert s.chi2 == 0.0 and s.phi == 0.0
    assert s.vwap == pytest.approx(31 / 15, rel=1e-15)
    with pytest.raises(UndefinedCorrelation):
        correlation_constant(s)
    assert correlation_or_zero(s) == (0.0, True)


def test_correlation_out_of_range_is_consistency_error():
    s = moments(two_tick())
    from dataclasses import replace

    with pytest.raises(ConsistencyError):
        correlation_constant(replace(s, phi=s.phi * 1.01))


def test_window_checks_duration():
    AveragingWindow(5.0, 10.0, 10, 1.0)
    with pytest.raises(ValueError):
        AveragingWindow(5.0, 11.0, 10, 1.0)
    assert AveragingWindow.unit(4, 0.5) == AveragingWindow(1.0, 2.0, 4, 0.5)


def test_market_tape_grid():
    a = two_tick()
    b = SecurityTape("B", [1.0, 2.0, 3.0], [1.0, 1.0, 1.0])
    with pytest.raises(InvalidTick):
        MarketTape((a, b))
    with pytest.raises(InvalidTick):
        MarketTape((a, a))
    m = MarketTape((a, SecurityTape("B", [1.0, 2.0], [1.0, 2.0])))
    assert m.security_ids == ("A", "B") and m.n_ticks == 2 and len(m) == 2
    assert m["B"].volumes.tolist() == [1.0, 2.0]
    assert m.price_matrix.shape == (2, 2)
    with pytest.raises(KeyError):
        m["C"]


@settings(max_examples=200, deadline=None)
@given(positive_tapes())
def test_moments_match_rational_oracle(ticks):
    values, volumes = ticks
    got = moments(SecurityTape("X", values, volumes))
    exact = exact_moments(values, volumes)
    for name in ("psi2", "chi2", "phi", "vwap"):
        assert float(exact[name]) == pytest.approx(getattr(got, name), rel=1e-10, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(positive_tapes())
def test_correlation_bounded(ticks):
    a, _ = correlation_or_zero(moments(SecurityTape("X", *ticks)))
    assert -1.0 <= a <= 1.0


@given(positive_tapes(), st.floats(0.01, 100))
def test_vwap_scale_invariant_in_volume_units(ticks, k):
    values, volumes = ticks
    base = vwap(SecurityTape("X", values, volumes))
    # k-fold share split: volumes up, prices down, values unchanged
    split = vwap(SecurityTape("X", values, np.asarray(volumes) * k))
    assert split == pytest.approx(base / k, rel=1e-12)


def test_vwap_between_min_and_max_price():
    t = SecurityTape("A", [10.0, 30.0, 8.0], [5.0, 10.0, 1.0])
    assert t.prices.min() <= vwap(t) <= t.prices.max()
    assert vwap(t) == float(Fraction(48, 16))


def test_constant_price_vwap():
    assert vwap(SecurityTape("A", [5.0, 35.0, 500.0], [1.0, 7.0, 100.0])) == 5.0
    assert vwap(SecurityTape("A", [2.0, 2.0], [1.0, 1.0])) == 2.0


def test_constant_price_and_volume_all_zero():
    s = moments(SecurityTape("A", [6.0] * 7, [2.0] * 7))
    assert (s.vwap, s.psi2, s.chi2, s.phi) == (3.0, 0.0, 0.0, 0.0)


def test_constant_volume_psi_is_value_dispersion():
    values = np.array([10.0, 12.0, 9.0, 15.0])
    s = moments(SecurityTape("A", values, [5.0] * 4))
    assert s.psi2 == pytest.approx(values.var() / values.mean() ** 2, rel=1e-14)


def test_proportional_value_volume_gives_unit_correlation():
    u = np.array([1.0, 3.0, 2.0, 7.0])
    assert correlation_constant(moments(SecurityTape("A", 4.0 * u, u))) == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_deviations_give_zero_correlation():
    s = moments(SecurityTape("A", [10.0, 10.0, 20.0, 20.0], [1.0, 2.0, 1.0, 2.0]))
    assert correlation_constant(s) == 0.0


@given(positive_tapes())
def test_mean_ratio_equals_vwap(ticks):
    s = moments(SecurityTape("X", *ticks))
    assert s.mean_value / s.mean_volume == pytest.approx(s.vwap, rel=1e-12)
    assert s.total_value / s.total_volume == s.vwap


@given(positive_tapes())
def test_cross_moment_matches_normalized_covariance(ticks):
    values, volumes = (np.asarray(x) for x in ticks)
    s = moments(SecurityTape("X", values, volumes))
    cross = math.fsum((values * volumes).tolist()) / values.size
    assert cross == pytest.approx(s.mean_value * s.mean_volume * (1 + s.phi), rel=1e-9)
