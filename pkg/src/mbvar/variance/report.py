"""One document with every estimate for a market, its portfolio and its securities."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConsistencyError, MbvarError
from ..portfolio import (
    DEFAULT_LIQUIDITY_THRESHOLD,
    LiquidityReport,
    MarketBase,
    MarketShareSnapshot,
    PortfolioSpec,
    aggregate_market,
    liquidity_report,
    market_shares,
    normalize_to_portfolio,
)
from ..tape import MarketTape
from .decomposition import ChiDecomposition, ReturnDifference, chi_decomposition, return_difference
from .estimators import VarianceReport, variance_report
from .markowitz import (
    CovarianceMatrix,
    markowitz_difference,
    markowitz_market_variance,
    markowitz_portfolio_variance,
    return_covariances,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MarkowitzComparison:
    theta_portfolio: float
    theta_market: float
    difference: float

    @property
    def market_over_portfolio(self) -> float | None:
        return self.theta_market / self.theta_portfolio if self.theta_portfolio else None

    @property
    def portfolio_over_market(self) -> float | None:
        return self.theta_portfolio / self.theta_market if self.theta_market else None

    def as_dict(self) -> dict:
        return {
            "theta_markowitz_portfolio": self.theta_portfolio,
            "theta_markowitz_market": self.theta_market,
            "difference": self.difference,
            "ratio_markowitz_market_over_portfolio": self.market_over_portfolio,
            "ratio_markowitz_portfolio_over_market": self.portfolio_over_market,
        }


@dataclass
class FullReport:
    security_ids: tuple[str, ...]
    n_ticks: int
    portfolio: PortfolioSpec
    market_base: MarketBase
    securities: dict[str, VarianceReport] = field(default_factory=dict)
    market: VarianceReport | None = None
    portfolio_variance: VarianceReport | None = None
    covariance: CovarianceMatrix | None = None
    markowitz: MarkowitzComparison | None = None
    returns: ReturnDifference | None = None
    chi: ChiDecomposition | None = None
    liquidity: LiquidityReport | None = None
    shares: MarketShareSnapshot | None = None
    flags: list[str] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict:
        def opt(x):
            return None if x is None else x.as_dict()

        ids = list(self.security_ids)
        pf = self.portfolio
        mb = self.market_base
        return {
            "inputs": {
                "security_ids": ids,
                "n_ticks": self.n_ticks,
                "portfolio": {
                    "holdings": dict(zip(pf.security_ids, pf.holdings.tolist())),
                    "base_prices": dict(zip(pf.security_ids, pf.base_prices.tolist())),
                    "price_t0": pf.price,
                    "value_weights_t0": dict(zip(pf.security_ids, pf.value_weights.tolist())),
                    "share_weights_t0": dict(zip(pf.security_ids, pf.share_weights.tolist())),
                },
                "market_base": {
                    "shares_outstanding": dict(zip(mb.security_ids, mb.shares_outstanding.tolist())),
                    "price_t0": mb.price,
                    "value_weights_t0": dict(zip(mb.security_ids, mb.value_weights.tolist())),
                    "share_weights_t0": dict(zip(mb.security_ids, mb.share_weights.tolist())),
                },
            },
            "securities": {k: v.as_dict() for k, v in self.securities.items()},
            "market": opt(self.market),
            "portfolio": opt(self.portfolio_variance),
            "covariance": opt(self.covariance),
            "markowitz": opt(self.markowitz),
            "returns": opt(self.returns),
            "chi_decomposition": opt(self.chi),
            "liquidity": opt(self.liquidity),
            "market_shares": opt(self.shares),
            "mu": {
                "portfolio": None if self.portfolio_variance is None else self.portfolio_variance.mu,
                "market": None if self.market is None else self.market.mu,
            },
            "flags": list(self.flags),
            "errors": dict(self.errors),
        }


def full_report(
    tapes: MarketTape,
    portfolio: PortfolioSpec,
    market_base: MarketBase,
    threshold: float = DEFAULT_LIQUIDITY_THRESHOLD,
) -> FullReport:
    """Run every estimator and collect the results section by section.

    A failing section is recorded in ``errors`` and the rest still run.
    ConsistencyError is never swallowed.
    """
    ids = tapes.security_ids
    base = market_base.aligned(ids)
    base_prices = dict(zip(base.security_ids, base.base_prices.tolist()))
    spec = portfolio.aligned(ids, base_prices)
    rep = FullReport(ids, tapes.n_ticks, portfolio, base)

    def section(name, fn):
        try:
            return fn()
        except ConsistencyError:
            raise
        except MbvarError as exc:
            log.warning("section %s failed: %s", name, exc)
            rep.errors[name] = f"{type(exc).__name__}: {exc}"
            return None

    rep.covariance = section("covariance", lambda: return_covariances(tapes, base.base_prices))
    cov = rep.covariance
    rep.shares = section("market_shares", lambda: market_shares(tapes))

    theta_m = theta_mm = None
    if cov is not None:
        theta_m = section("markowitz", lambda: markowitz_portfolio_variance(cov, spec.value_weights))
        if rep.shares is not None:
            xt = rep.shares.volume_shares
            theta_mm = section(
                "markowitz",
                lambda: markowitz_market_variance(cov, base.value_weights, base.share_weights, xt),
            )
            diff = section(
                "markowitz",
                lambda: markowitz_difference(cov, base.value_weights, base.share_weights, xt),
            )
            if theta_m is not None and theta_mm is not None and diff is not None:
                rep.markowitz = MarkowitzComparison(theta_m, theta_mm, diff)

    for k, s in enumerate(tapes):
        own = None if cov is None else float(cov.matrix[k, k])
        r = section(
            f"security:{s.security_id}",
            lambda s=s, own=own: variance_report(s, base_prices[s.security_id], own, s.security_id),
        )
        if r is not None:
            rep.securities[s.security_id] = r

    market_tape = aggregate_market(tapes)
    rep.market = section("market", lambda: variance_report(market_tape, base.price, theta_mm, "market"))

    norm = section("portfolio", lambda: normalize_to_portfolio(tapes, spec))
    if norm is not None:
        rep.portfolio_variance = section(
            "portfolio", lambda: variance_report(norm, spec.price, theta_m, "portfolio")
        )
        rep.chi = section("chi_decomposition", lambda: chi_decomposition(norm.volumes, market_tape.volumes))
    rep.returns = section("returns", lambda: return_difference(tapes, spec, base))
    rep.liquidity = section("liquidity", lambda: liquidity_report(portfolio, tapes, threshold))
    if rep.liquidity is not None and not rep.liquidity.passed:
        rep.flags.append("liquidity_failed")
    if rep.returns is not None and not rep.returns.market_proportional:
        rep.flags.append("portfolio_not_market_proportional")
    return rep
