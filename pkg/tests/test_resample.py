import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbvar.errors import SpanMismatch
from mbvar.resample import SpanSpec, resample, resample_arrays
from mbvar.tape import AveragingWindow, MarketTape, SecurityTape, market_from_arrays, vwap

from .oracles import positive

FOUR = SecurityTape("A", [10.0, 24.0, 6.0, 6.0], [5.0, 8.0, 1.0, 2.0])


def test_span_one_is_identity():
    assert resample(FOUR, 1) == FOUR


def test_span_two_example():
    coarse = resample(FOUR, 2)
    assert coarse.values.tolist() == [34.0, 12.0]
    assert coarse.volumes.tolist() == [13.0, 3.0]
    assert coarse.prices.tolist() == [34 / 13, 4.0]


def test_full_collapse_rejected():
    with pytest.raises(SpanMismatch):
        resample(FOUR, 4)
    values, volumes = resample_arrays(FOUR.values, FOUR.volumes, SpanSpec(4))
    assert values[0] / volumes[0] == vwap(FOUR)


def test_partial_span():
    with pytest.raises(SpanMismatch):
        resample(FOUR, 3)
    with pytest.raises(SpanMismatch):
        resample(SecurityTape("A", [1.0] * 5, [1.0] * 5), SpanSpec(2, "error"))
    dropped = resample(SecurityTape("A", [1.0, 2.0, 3.0, 4.0, 5.0], [1.0] * 5), SpanSpec(2, "drop"))
    assert dropped.values.tolist() == [3.0, 7.0]


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_span_validation(bad):
    with pytest.raises(SpanMismatch):
        SpanSpec(bad)
    with pytest.raises(SpanMismatch):
        SpanSpec(2, "pad")


def test_window_rescaled():
    m = MarketTape((FOUR,), AveragingWindow(10.0, 2.0, 4, 0.5))
    coarse = resample(m, 2)
    assert coarse.window == AveragingWindow(10.0, 2.0, 2, 1.0)


@st.composite
def fine_markets(draw):
    z1 = draw(st.integers(1, 4))
    z2 = draw(st.integers(1, 4))
    k = draw(st.integers(2, 6))
    n = z1 * z2 * k
    j = draw(st.integers(1, 3))
    values = np.array([draw(st.lists(positive, min_size=n, max_size=n)) for _ in range(j)])
    volumes = np.array([draw(st.lists(positive, min_size=n, max_size=n)) for _ in range(j)])
    return market_from_arrays(tuple(f"S{i}" for i in range(j)), values, volumes), z1, z2


@settings(max_examples=150, deadline=None)
@given(fine_markets())
def test_conservation_and_composition(case):
    m, z1, z2 = case
    coarse = resample(m, z1)
    for fine, c in zip(m, coarse):
        assert math.isclose(math.fsum(c.values), math.fsum(fine.values), rel_tol=1e-12)
        assert math.isclose(math.fsum(c.volumes), math.fsum(fine.volumes), rel_tol=1e-12)
        assert math.isclose(vwap(c), vwap(fine), rel_tol=1e-12)
    twice = resample(coarse, z2)
    once = resample(m, z1 * z2)
    for a, b in zip(twice, once):
        np.testing.assert_allclose(a.values, b.values, rtol=1e-12)
        np.testing.assert_allclose(a.volumes, b.volumes, rtol=1e-12)
