"""The market at t0, the investor's portfolio, and their single-security tapes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._numerics import fsum
from .errors import DegenerateTape, InvalidConfig, MissingSecurity
from .tape import AveragingWindow, MarketTape, SecurityTape

DEFAULT_LIQUIDITY_THRESHOLD = 0.05
UNTRADEABLE = "untradeable"


def _as_mapping(ids: Sequence[str], arr) -> dict[str, float]:
    return {i: float(x) for i, x in zip(ids, arr)}


@dataclass(frozen=True, eq=False)
class MarketBase:
    """Base prices p_j(t0) and shares outstanding W_mj(t0) of the whole market."""

    security_ids: tuple[str, ...]
    base_prices: np.ndarray
    shares_outstanding: np.ndarray

    def __post_init__(self):
        ids = tuple(self.security_ids)
        p = np.array(self.base_prices, dtype=float)
        w = np.array(self.shares_outstanding, dtype=float)
        if len(set(ids)) != len(ids) or p.shape != (len(ids),) or w.shape != (len(ids),):
            raise InvalidConfig("market base needs one price and share count per unique id")
        if not (np.all(p > 0) and np.all(w > 0)):
            raise InvalidConfig("market base prices and shares outstanding must be positive")
        p.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "security_ids", ids)
        object.__setattr__(self, "base_prices", p)
        object.__setattr__(self, "shares_outstanding", w)

    @classmethod
    def from_mappings(cls, base_prices: Mapping[str, float], shares_outstanding: Mapping[str, float]) -> "MarketBase":
        if set(base_prices) != set(shares_outstanding):
            raise InvalidConfig("base prices and shares outstanding cover different securities")
        ids = tuple(shares_outstanding)
        return cls(ids, [base_prices[i] for i in ids], [shares_outstanding[i] for i in ids])

    @property
    def capitalizations(self) -> np.ndarray:
        return self.base_prices * self.shares_outstanding

    @property
    def total_capitalization(self) -> float:
        return fsum(self.capitalizations)

    @property
    def total_shares(self) -> float:
        return fsum(self.shares_outstanding)

    @property
    def price(self) -> float:
        """Market price per share s_m(t0) = Q_m / W_m."""
        return self.total_capitalization / self.total_shares

    @property
    def value_weights(self) -> np.ndarray:
        """Relative capitalizations X_j(t0)."""
        return self.capitalizations / self.total_capitalization

    @property
    def share_weights(self) -> np.ndarray:
        """Relative share counts x_j(t0)."""
        return self.shares_outstanding / self.total_shares

    def aligned(self, ids: Sequence[str]) -> "MarketBase":
        index = {i: k for k, i in enumerate(self.security_ids)}
        missing = [i for i in ids if i not in index]
        if missing or len(ids) != len(self.security_ids):
            raise MissingSecurity(f"market base does not match tape securities: missing {missing}")
        order = [index[i] for i in ids]
        return MarketBase(tuple(ids), self.base_prices[order], self.shares_outstanding[order])


@dataclass(frozen=True, eq=False)
class PortfolioSpec:
    """Holdings W_j(t0) bought at base prices p_j(t0) and never traded since."""

    security_ids: tuple[str, ...]
    holdings: np.ndarray
    base_prices: np.ndarray

    def __post_init__(self):
        ids = tuple(self.security_ids)
        w = np.array(self.holdings, dtype=float)
        p = np.array(self.base_prices, dtype=float)
        if len(set(ids)) != len(ids) or w.shape != (len(ids),) or p.shape != (len(ids),):
            raise InvalidConfig("portfolio needs one holding and base price per unique id")
        if np.any(w < 0) or not np.any(w > 0):
            raise InvalidConfig("holdings must be non-negative with at least one positive")
        if not np.all(p > 0):
            raise InvalidConfig("base prices must be positive")
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "security_ids", ids)
        object.__setattr__(self, "holdings", w)
        object.__setattr__(self, "base_prices", p)

    @classmethod
    def from_mappings(cls, holdings: Mapping[str, float], base_prices: Mapping[str, float]) -> "PortfolioSpec":
        missing = [i for i in holdings if i not in base_prices]
        if missing:
            raise InvalidConfig(f"no base price for held securities {missing}")
        ids = tuple(holdings)
        return cls(ids, [holdings[i] for i in ids], [base_prices[i] for i in ids])

    @property
    def values(self) -> np.ndarray:
        """Q_j(t0) = p_j(t0) W_j(t0)."""
        return self.base_prices * self.holdings

    @property
    def total_value(self) -> float:
        return fsum(self.values)

    @property
    def total_shares(self) -> float:
        return fsum(self.holdings)

    @property
    def price(self) -> float:
        """Portfolio price per share s(t0) = Q_Sigma / W_Sigma."""
        return self.total_value / self.total_shares

    @property
    def value_weights(self) -> np.ndarray:
        return self.values / self.total_value

    @property
    def share_weights(self) -> np.ndarray:
        return self.holdings / self.total_shares

    def holdings_for(self, ids: Sequence[str]) -> np.ndarray:
        """Holdings in the given id order; securities not held get 0."""
        index = {i: k for k, i in enumerate(self.security_ids)}
        extra = [i for i in self.security_ids if i not in set(ids)]
        if extra:
            raise MissingSecurity(f"portfolio securities {extra} are absent from the tape")
        return np.array([self.holdings[index[i]] if i in index else 0.0 for i in ids])

    def aligned(self, ids: Sequence[str], base_prices: Mapping[str, float] | None = None) -> "PortfolioSpec":
        """Re-index onto ids, adding zero holdings for securities not held.

        Base prices of added securities come from base_prices.
        """
        w = self.holdings_for(ids)
        index = {i: k for k, i in enumerate(self.security_ids)}
        prices = []
        for i in ids:
            if i in index:
                prices.append(self.base_prices[index[i]])
            elif base_prices is not None and i in base_prices:
                prices.append(base_prices[i])
            else:
                raise MissingSecurity(f"no base price for security {i}")
        return PortfolioSpec(tuple(ids), w, prices)

    def scaled(self, k: float) -> "PortfolioSpec":
        return PortfolioSpec(self.security_ids, self.holdings * k, self.base_prices)


def market_proportional_portfolio(base: MarketBase, budget: float) -> PortfolioSpec:
    """Portfolio worth budget at t0 holding every security pro rata to the market.

    W_j(t0) = budget / Q_m(t0) * W_mj(t0), which gives s(t0) = s_m(t0).
    """
    if not budget > 0:
        raise InvalidConfig(f"budget must be positive, got {budget}")
    scale = budget / base.total_capitalization
    return PortfolioSpec(base.security_ids, base.shares_outstanding * scale, base.base_prices)


def is_market_proportional(spec: PortfolioSpec, base: MarketBase, rtol: float = 1e-12) -> bool:
    """True when the portfolio holds every security in market share proportions."""
    if set(spec.security_ids) != set(base.security_ids):
        return False
    aligned = base.aligned(spec.security_ids)
    if not np.allclose(spec.base_prices, aligned.base_prices, rtol=rtol, atol=0):
        return False
    return bool(np.allclose(spec.share_weights, aligned.share_weights, rtol=rtol, atol=0))


def infer_base_prices(tapes: MarketTape, known: Mapping[str, float] | None = None) -> tuple[dict[str, float], list[str]]:
    """Fill missing base prices with each security's first tick price.

    Returns the completed map and the ids whose price was inferred.
    """
    known = dict(known or {})
    inferred = []
    for s in tapes:
        if s.security_id not in known:
            known[s.security_id] = float(s.prices[0])
            inferred.append(s.security_id)
    return known, inferred


@dataclass(frozen=True, eq=False)
class NormalizedPortfolioTape:
    """The untouched portfolio modelled as trades with one security.

    values and volumes are Q(t_i) and W(t_i); normalized_volumes holds the
    per-security u_j(t_i) = lambda_j U_j(t_i).
    """

    security_ids: tuple[str, ...]
    scales: np.ndarray
    values: np.ndarray
    volumes: np.ndarray
    normalized_values: np.ndarray
    normalized_volumes: np.ndarray
    holdings: np.ndarray
    window: AveragingWindow | None = None

    @property
    def prices(self) -> np.ndarray:
        return self.values / self.volumes

    @property
    def total_volume(self) -> float:
        return fsum(self.volumes)

    @property
    def total_value(self) -> float:
        return fsum(self.values)

    def as_tape(self, security_id: str = "portfolio") -> SecurityTape:
        return SecurityTape(security_id, self.values, self.volumes)


def total_volumes(tapes: MarketTape) -> np.ndarray:
    return np.array([fsum(s.volumes) for s in tapes])


def total_values(tapes: MarketTape) -> np.ndarray:
    return np.array([fsum(s.values) for s in tapes])


def normalize_to_portfolio(tapes: MarketTape, spec: PortfolioSpec) -> NormalizedPortfolioTape:
    """Rescale each security by lambda_j = W_j(t0) / U_Sigma_j and sum across securities.

    Securities in the tape that the portfolio does not hold get lambda_j = 0.
    """
    ids = tapes.security_ids
    holdings = spec.holdings_for(ids)
    totals = total_volumes(tapes)
    if np.any(totals <= 0):
        bad = [i for i, t in zip(ids, totals) if t <= 0]
        raise DegenerateTape(f"zero traded volume for {bad}")
    scales = holdings / totals
    c = tapes.value_matrix * scales[:, None]
    u = tapes.volume_matrix * scales[:, None]
    q = np.array([fsum(col) for col in c.T])
    w = np.array([fsum(col) for col in u.T])
    for arr in (scales, c, u, q, w, holdings):
        arr.setflags(write=False)
    return NormalizedPortfolioTape(ids, scales, q, w, c, u, holdings, tapes.window)


def aggregate_market(tapes: MarketTape, security_id: str = "market") -> SecurityTape:
    """All trades at t_i summed into one trade: C_m(t_i), U_m(t_i)."""
    if len(tapes) == 1:
        only = tapes.securities[0]
        return SecurityTape(security_id, only.values, only.volumes)
    values = np.array([fsum(col) for col in tapes.value_matrix.T])
    volumes = np.array([fsum(col) for col in tapes.volume_matrix.T])
    return SecurityTape(security_id, values, volumes)


@dataclass(frozen=True, eq=False)
class MarketShareSnapshot:
    """Current shares X_j(t) of traded value and x_j(t) of traded volume."""

    security_ids: tuple[str, ...]
    value_shares: np.ndarray
    volume_shares: np.ndarray

    def as_dict(self) -> dict:
        return {
            "value_shares": _as_mapping(self.security_ids, self.value_shares),
            "volume_shares": _as_mapping(self.security_ids, self.volume_shares),
        }


def market_shares(tapes: MarketTape) -> MarketShareSnapshot:
    cj = total_values(tapes)
    uj = total_volumes(tapes)
    cm = fsum(cj)
    um = fsum(uj)
    if cm <= 0 or um <= 0:
        raise DegenerateTape("total market value or volume is zero")
    return MarketShareSnapshot(tapes.security_ids, cj / cm, uj / um)


@dataclass(frozen=True)
class LiquidityReport:
    """Holdings relative to traded volume, W_j(t0) / U_Sigma_j(t), per security."""

    threshold: float
    ratios: dict[str, float]
    failing: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failing

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "passed": self.passed,
            "failing": list(self.failing),
            "ratios": {k: (UNTRADEABLE if math.isinf(v) else v) for k, v in self.ratios.items()},
        }


def liquidity_report(
    spec: PortfolioSpec, tapes: MarketTape, threshold: float = DEFAULT_LIQUIDITY_THRESHOLD
) -> LiquidityReport:
    """Flag securities whose holdings exceed threshold of the window's traded volume.

    A security with zero traded volume gets ratio inf and always fails.
    """
    if not 0 < threshold < 1:
        raise InvalidConfig(f"liquidity threshold must be in (0, 1), got {threshold}")
    ids = tapes.security_ids
    holdings = spec.holdings_for(ids)
    totals = total_volumes(tapes)
    ratios = {}
    for i, w, u in zip(ids, holdings, totals):
        if i not in spec.security_ids:
            continue
        ratios[i] = math.inf if u <= 0 else float(w / u)
    failing = tuple(i for i, r in ratios.items() if r > threshold)
    return LiquidityReport(threshold, ratios, failing)
