"""Mean returns and market-based variances of a single-security-like tape."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._numerics import fmean, fsum, rel_close
from ..errors import ConsistencyError, DegenerateTape
from ..tape import TapeLike, TradeStats, correlation_or_zero, moments, vwap

#: Negative variance ratios down to -NEGATIVE_TOL are rounding noise and clamp to 0.
NEGATIVE_TOL = 1e-12
#: Closed form and direct estimate must agree this closely inside a report.
CONSISTENCY_RTOL = 1e-9


def _check_base(base_price: float) -> None:
    if not (base_price > 0 and math.isfinite(base_price)):
        raise DegenerateTape(f"base price must be positive, got {base_price}")


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Per-tick gross returns R(t_i, t0) = p(t_i) / p(t0) with their volume weights."""

    returns: np.ndarray
    base_price: float
    volumes: np.ndarray

    @property
    def mean(self) -> float:
        """Volume weighted mean return."""
        return fsum(self.returns * self.volumes) / fsum(self.volumes)

    @property
    def equal_weight_mean(self) -> float:
        return fmean(self.returns)

    @property
    def net(self) -> np.ndarray:
        return self.returns - 1.0


def return_series(tape: TapeLike, base_price: float) -> ReturnSeries:
    _check_base(base_price)
    prices = np.asarray(tape.values) / np.asarray(tape.volumes)
    return ReturnSeries(prices / base_price, float(base_price), np.asarray(tape.volumes))


def mean_return(tape: TapeLike, base_price: float) -> float:
    """R(t, t0) = VWAP / base price."""
    _check_base(base_price)
    return vwap(tape) / base_price


def variance_ratio(stats: TradeStats) -> float:
    """mu = (psi^2 - 2 phi + chi^2) / (1 + chi^2), the variance over squared mean return."""
    mu = stats.spread2 / (1.0 + stats.chi2)
    if mu < 0:
        if mu < -NEGATIVE_TOL:
            raise ConsistencyError(f"negative variance ratio {mu!r}")
        mu = 0.0
    return mu


def market_based_variance(tape: TapeLike, base_price: float) -> float:
    """Variance of returns that accounts for random trade volumes.

    Theta = (psi^2 - 2 phi + chi^2) / (1 + chi^2) * R^2, built from the
    coefficients of variation of trade values and volumes.
    """
    _check_base(base_price)
    stats = moments(tape)
    r = stats.vwap / base_price
    return variance_ratio(stats) * r * r


def price_variance(tape: TapeLike) -> float:
    """Squared-volume weighted second central moment of tick prices about VWAP."""
    values = np.asarray(tape.values, dtype=float)
    volumes = np.asarray(tape.volumes, dtype=float)
    total = volumes.sum()
    if total == 0:
        raise DegenerateTape("total volume is zero")
    prices = values / volumes
    center = values.sum() / total
    w2 = volumes * volumes
    return fsum((prices - center) ** 2 * w2) / fsum(w2)


def variance_oracle(tape: TapeLike, base_price: float) -> float:
    """Market-based variance computed straight from tick prices (no moments)."""
    _check_base(base_price)
    return price_variance(tape) / (base_price * base_price)


def taylor_variance(theta_m: float, r: float, chi: float, a: float) -> float:
    """Second-order expansion of Theta in the volume coefficient of variation.

    Theta_M - 2 a sqrt(Theta_M) R chi + (R^2 - Theta_M) chi^2
    """
    if theta_m < 0 or chi < 0 or abs(a) > 1:
        raise ValueError("need theta_m >= 0, chi >= 0 and |a| <= 1")
    return theta_m - 2.0 * a * math.sqrt(theta_m) * r * chi + (r * r - theta_m) * chi * chi


@dataclass(frozen=True)
class VarianceReport:
    """Return and variance estimates for one tape.

    mean_return is volume weighted; mean_return_equal_weight and
    theta_markowitz follow the constant-volume (equal weight) convention.
    """

    label: str
    base_price: float
    vwap: float
    mean_return: float
    mean_return_equal_weight: float
    theta_market_based: float
    theta_oracle: float
    theta_markowitz: float | None
    theta_taylor: float | None
    psi2: float
    chi2: float
    phi: float
    a: float
    phi_price: float
    mu: float
    flags: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "base_price": self.base_price,
            "vwap": self.vwap,
            "mean_return": self.mean_return,
            "mean_return_equal_weight": self.mean_return_equal_weight,
            "theta_market_based": self.theta_market_based,
            "theta_oracle": self.theta_oracle,
            "theta_markowitz": self.theta_markowitz,
            "theta_taylor": self.theta_taylor,
            "psi2": self.psi2,
            "chi2": self.chi2,
            "phi": self.phi,
            "a": self.a,
            "phi_price": self.phi_price,
            "mu": self.mu,
            "flags": list(self.flags),
            "conventions": {
                "mean_return": "volume_weighted",
                "mean_return_equal_weight": "equal_weight",
                "theta_market_based": "volume_weighted",
                "theta_markowitz": "equal_weight",
            },
        }


def variance_report(
    tape: TapeLike,
    base_price: float,
    theta_markowitz: float | None = None,
    label: str = "",
) -> VarianceReport:
    """Full set of estimates for one tape, cross-checked against the direct route."""
    _check_base(base_price)
    stats = moments(tape)
    r = stats.vwap / base_price
    mu = variance_ratio(stats)
    theta = mu * r * r
    phi_price = price_variance(tape)
    oracle = phi_price / (base_price * base_price)
    if not rel_close(theta, oracle, CONSISTENCY_RTOL, atol=NEGATIVE_TOL * r * r):
        raise ConsistencyError(
            f"{label or 'tape'}: closed-form variance {theta!r} disagrees with direct estimate {oracle!r}"
        )
    a, degenerate = correlation_or_zero(stats)
    flags = []
    if stats.chi2 == 0:
        flags.append("constant_volume")
    if degenerate:
        flags.append("correlation_undefined")
    elif stats.psi * stats.chi and abs(stats.phi / (stats.psi * stats.chi)) > 1:
        flags.append("correlation_clamped")
    taylor = None
    if theta_markowitz is not None:
        taylor = taylor_variance(theta_markowitz, r, stats.chi, a)
    returns = return_series(tape, base_price)
    return VarianceReport(
        label=label,
        base_price=float(base_price),
        vwap=stats.vwap,
        mean_return=r,
        mean_return_equal_weight=returns.equal_weight_mean,
        theta_market_based=theta,
        theta_oracle=oracle,
        theta_markowitz=theta_markowitz,
        theta_taylor=taylor,
        psi2=stats.psi2,
        chi2=stats.chi2,
        phi=stats.phi,
        a=a,
        phi_price=phi_price,
        mu=mu,
        flags=tuple(flags),
    )
