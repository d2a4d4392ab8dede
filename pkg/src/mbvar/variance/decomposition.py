"""Portfolio versus market: mean return difference and volume-variation decomposition."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._numerics import fcov, fmean, fsum, rel_close
from ..errors import ConsistencyError, DegenerateTape, ZeroShare
from ..portfolio import (
    MarketBase,
    PortfolioSpec,
    aggregate_market,
    is_market_proportional,
    market_shares,
    normalize_to_portfolio,
)
from ..tape import MarketTape, vwap

IDENTITY_RTOL = 1e-10


@dataclass(frozen=True)
class ReturnDifference:
    """Mean return of the held portfolio against the mean return of all market trades.

    weight_form_difference (sum_j R_j X_j(t0) [1 - x_j(t)/x_j(t0)]) and
    market_return_from_weights are only filled in for market-proportional
    portfolios, the case in which that decomposition holds.
    """

    security_ids: tuple[str, ...]
    portfolio_return: float
    portfolio_return_from_weights: float
    market_return: float
    market_return_from_weights: float | None
    difference: float
    weight_form_difference: float | None
    price_form_difference: float
    security_returns: dict[str, float]
    contributions: dict[str, float]
    market_proportional: bool

    def as_dict(self) -> dict:
        return {
            "portfolio_return": self.portfolio_return,
            "portfolio_return_from_weights": self.portfolio_return_from_weights,
            "market_return": self.market_return,
            "market_return_from_weights": self.market_return_from_weights,
            "difference": self.difference,
            "weight_form_difference": self.weight_form_difference,
            "price_form_difference": self.price_form_difference,
            "security_returns": self.security_returns,
            "contributions": self.contributions,
            "market_proportional": self.market_proportional,
        }


def return_difference(tapes: MarketTape, portfolio: PortfolioSpec, base: MarketBase) -> ReturnDifference:
    ids = tapes.security_ids
    base = base.aligned(ids)
    spec = portfolio.aligned(ids, dict(zip(base.security_ids, base.base_prices)))
    p0 = spec.base_prices
    mean_prices = np.array([vwap(s) for s in tapes])
    rj = mean_prices / p0
    big_x = spec.value_weights
    x0 = spec.share_weights
    xt = market_shares(tapes).volume_shares

    norm = normalize_to_portfolio(tapes, spec)
    market = aggregate_market(tapes)
    s_mean = vwap(norm)
    sm_mean = vwap(market)
    r_direct = s_mean / spec.price
    rm_direct = sm_mean / base.price
    r_weights = fsum(rj * big_x)
    price_terms = mean_prices * (x0 - xt) / base.price
    proportional = is_market_proportional(spec, base)

    rm_weights = None
    weight_diff = None
    if proportional:
        if np.any(x0 == 0):
            raise ZeroShare("a share weight x_j(t0) is zero")
        ratio = xt / x0
        rm_weights = fsum(rj * big_x * ratio)
        weight_terms = rj * big_x * (1.0 - ratio)
        weight_diff = fsum(weight_terms)
        contributions = weight_terms
    else:
        contributions = price_terms
    return ReturnDifference(
        security_ids=ids,
        portfolio_return=r_direct,
        portfolio_return_from_weights=r_weights,
        market_return=rm_direct,
        market_return_from_weights=rm_weights,
        difference=r_direct - rm_direct,
        weight_form_difference=weight_diff,
        price_form_difference=(s_mean - sm_mean) / base.price,
        security_returns={i: float(r) for i, r in zip(ids, rj)},
        contributions={i: float(c) for i, c in zip(ids, contributions)},
        market_proportional=proportional,
    )


@dataclass(frozen=True, eq=False)
class ChiDecomposition:
    """Portfolio volume variation split into market and tie-factor parts.

    gamma(t_i) = W(t_i) / U_m(t_i). The identity
    1 + chi2 = (1 + chi_m2)(1 + chi_gamma2)(1 + omega xi_gamma xi_m)
    holds exactly; omega is a correlation of squares, so |omega| <= 1.
    The constant omega is the same constant sometimes written b.
    """

    chi2: float
    chi_m2: float
    chi_gamma2: float
    xi_m: float
    xi_gamma: float
    omega: float
    big_omega: float
    gamma: np.ndarray
    gamma_mean: float
    gamma_mean_sq: float
    flags: tuple[str, ...] = ()

    @property
    def recomposed(self) -> float:
        """(1 + chi_m2)(1 + chi_gamma2)(1 + omega xi_gamma xi_m)."""
        return (1 + self.chi_m2) * (1 + self.chi_gamma2) * (1 + self.omega * self.xi_gamma * self.xi_m)

    def as_dict(self) -> dict:
        return {
            "chi2": self.chi2,
            "chi_m2": self.chi_m2,
            "chi_gamma2": self.chi_gamma2,
            "xi_m": self.xi_m,
            "xi_gamma": self.xi_gamma,
            "omega": self.omega,
            "big_omega": self.big_omega,
            "gamma_mean": self.gamma_mean,
            "gamma_mean_sq": self.gamma_mean_sq,
            "one_plus_chi2": 1 + self.chi2,
            "recomposed": self.recomposed,
            "flags": list(self.flags),
        }


def _cv2_of_squares(x: np.ndarray) -> tuple[float, float]:
    sq = x * x
    m2 = fmean(sq)
    return fcov(sq, sq, m2, m2) / (m2 * m2), m2


def chi_decomposition(portfolio_volumes, market_volumes) -> ChiDecomposition:
    w = np.asarray(portfolio_volumes, dtype=float)
    um = np.asarray(market_volumes, dtype=float)
    if w.shape != um.shape:
        raise ValueError("portfolio and market volume series differ in length")
    if np.any(um <= 0):
        raise DegenerateTape("market volumes must be positive")
    gamma = w / um
    w1 = fmean(w)
    um1 = fmean(um)
    chi2 = fcov(w, w, w1, w1) / (w1 * w1)
    chi_m2 = fcov(um, um, um1, um1) / (um1 * um1)
    # gamma(t;1) is the volume weighted mean W(t;1) / U_m(t;1), not the plain mean of gamma
    g1 = w1 / um1
    g_plain = fmean(gamma)
    chi_gamma2 = (fcov(gamma, gamma, g_plain, g_plain) + (g_plain - g1) * (g_plain + g1)) / (g1 * g1)
    xi_m2, um2 = _cv2_of_squares(um)
    xi_g2, g2 = _cv2_of_squares(gamma)
    big_omega = fcov(gamma * gamma, um * um, g2, um2) / (g2 * um2)
    xi_m = math.sqrt(xi_m2)
    xi_g = math.sqrt(xi_g2)
    flags = []
    if xi_m == 0 or xi_g == 0:
        omega = 0.0
        flags.append("omega_undefined")
    else:
        omega = big_omega / (xi_g * xi_m)
        if abs(omega) > 1 + 1e-12:
            raise ConsistencyError(f"omega {omega!r} outside [-1, 1]")
        omega = max(-1.0, min(1.0, omega))
    gamma.setflags(write=False)
    out = ChiDecomposition(chi2, chi_m2, chi_gamma2, xi_m, xi_g, omega, big_omega, gamma, g1, g2, tuple(flags))
    # 1 + Omega can be a tiny difference of order-one terms; allow for the rounding of the
    # larger factors it multiplies
    scale = (1 + chi_m2) * (1 + chi_gamma2) * max(1.0, abs(big_omega))
    if not rel_close(1 + chi2, out.recomposed, IDENTITY_RTOL, atol=IDENTITY_RTOL * scale):
        raise ConsistencyError(f"volume decomposition does not recompose: {1 + chi2!r} vs {out.recomposed!r}")
    return out
