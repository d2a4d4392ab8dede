"""Deterministic synthetic tapes: random markets and two-security toy models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._numerics import fmean, fsum
from .errors import InvalidConfig
from .portfolio import MarketBase, PortfolioSpec, market_proportional_portfolio, total_volumes
from .tape import MarketTape, SecurityTape

MAX_VOLATILITY = 0.5


@dataclass(frozen=True)
class RandomMarketConfig:
    """Log-random-walk prices with volume fluctuations of relative size eps.

    hold="price" keeps the price path fixed as eps varies (values follow
    volumes); hold="value" keeps trade values fixed and lets prices absorb
    the volume fluctuation. eps = 0 gives exactly constant volumes either way.
    """

    n_securities: int = 3
    n_ticks: int = 64
    initial_price: float = 100.0
    price_dispersion: float = 0.0
    volatility: float = 0.01
    drift: float = 0.0
    base_volume: float = 1000.0
    volume_dispersion: float = 0.0
    eps: float = 0.0
    distribution: str = "uniform"
    rho: float = 0.0
    seed: int = 0
    hold: str = "price"

    def __post_init__(self):
        j = self.n_securities
        if j < 1 or self.n_ticks < 2:
            raise InvalidConfig("need at least one security and two ticks")
        if not 0 <= self.eps < 1:
            raise InvalidConfig(f"eps must be in [0, 1), got {self.eps}")
        if not 0 <= self.volatility <= MAX_VOLATILITY:
            raise InvalidConfig(f"volatility must be in [0, {MAX_VOLATILITY}], got {self.volatility}")
        if abs(self.rho) > 1 or (j > 1 and self.rho < -1.0 / (j - 1)):
            raise InvalidConfig(f"correlation {self.rho} is not valid for {j} securities")
        if self.initial_price <= 0 or self.base_volume <= 0:
            raise InvalidConfig("initial price and base volume must be positive")
        if self.distribution not in ("uniform", "lognormal"):
            raise InvalidConfig(f"unknown volume distribution {self.distribution!r}")
        if self.hold not in ("price", "value"):
            raise InvalidConfig(f"hold must be 'price' or 'value', got {self.hold!r}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class SimulatedMarket:
    tape: MarketTape
    base_prices: dict[str, float]


def _equicorrelation_factor(j: int, rho: float) -> np.ndarray:
    corr = np.full((j, j), rho)
    np.fill_diagonal(corr, 1.0)
    vals, vecs = np.linalg.eigh(corr)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def security_ids(j: int) -> tuple[str, ...]:
    width = len(str(j))
    return tuple(f"S{k + 1:0{width}d}" for k in range(j))


def simulate_market(config: RandomMarketConfig) -> SimulatedMarket:
    """Random market plus the base prices p_j(t0) its walks started from.

    The random draws do not depend on eps, so configs differing only in eps
    share the same price path and fluctuation pattern.
    """
    c = config
    rng = np.random.default_rng(c.seed)
    j, n = c.n_securities, c.n_ticks
    p0 = c.initial_price * np.exp(c.price_dispersion * rng.standard_normal(j))
    shocks = rng.standard_normal((n, j)) @ _equicorrelation_factor(j, c.rho).T
    log_paths = np.log(p0)[:, None] + np.cumsum(c.drift + c.volatility * shocks.T, axis=1)
    prices = np.exp(log_paths)
    base_vol = c.base_volume * np.exp(c.volume_dispersion * rng.standard_normal(j))
    if c.distribution == "uniform":
        d = rng.uniform(-1.0, 1.0, (j, n))
        d -= np.array([fmean(row) for row in d])[:, None]
        d /= np.maximum(1.0, np.abs(d).max(axis=1))[:, None]
        factor = 1.0 + c.eps * d
    else:
        m = np.exp(c.eps * rng.standard_normal((j, n)))
        factor = m / np.array([fmean(row) for row in m])[:, None]
    volumes = base_vol[:, None] * factor
    if c.hold == "price":
        values = prices * volumes
    else:
        values = prices * base_vol[:, None]
    ids = security_ids(j)
    tape = MarketTape(tuple(SecurityTape(i, v, u) for i, v, u in zip(ids, values, volumes)))
    return SimulatedMarket(tape, {i: float(p) for i, p in zip(ids, p0)})


def generate_market(config: RandomMarketConfig) -> MarketTape:
    return simulate_market(config).tape


def default_market_base(
    tape: MarketTape, base_prices: dict[str, float], turnover_multiple: float = 100.0
) -> MarketBase:
    """Shares outstanding set to turnover_multiple times each security's window volume."""
    ids = tape.security_ids
    return MarketBase(ids, [base_prices[i] for i in ids], total_volumes(tape) * turnover_multiple)


def liquid_portfolio(base: MarketBase, tape: MarketTape, fraction: float = 0.01) -> PortfolioSpec:
    """Market-proportional portfolio holding about fraction of the window's traded volume."""
    ratio = float(np.max(base.aligned(tape.security_ids).shares_outstanding / total_volumes(tape)))
    return market_proportional_portfolio(base, base.total_capitalization * fraction / ratio)


TOY_PRESETS = {
    "A": dict(volumes=(1000.0, 2000.0), share_weights=(2 / 3, 1 / 3), value_weights=(1 / 3, 2 / 3)),
    "B": dict(volumes=(3000.0, 2000.0), share_weights=(0.2, 0.8), value_weights=(0.1, 0.9)),
    "perturbed": dict(
        volumes=(1000.0, 2000.0), share_weights=(2 / 3, 1 / 3), value_weights=(1 / 3, 2 / 3), alpha=300.0
    ),
}


@dataclass(frozen=True)
class ToyModelConfig:
    """Two securities with zero return covariance and prescribed return variances.

    Variants A and B trade constant volumes. The perturbed variant moves
    delta(t_i) shares from security 2 to security 1 at each tick, which keeps
    the market volume constant while the portfolio volume fluctuates.
    Base prices follow from the weights: p_j(t0) = price_scale * X_j / x_j.
    """

    variant: str
    volumes: tuple[float, float]
    share_weights: tuple[float, float]
    value_weights: tuple[float, float]
    thetas: tuple[float, float] = (0.01, 0.01)
    mean_returns: tuple[float, float] = (1.02, 0.99)
    alpha: float = 0.0
    n_ticks: int = 64
    seed: int = 0
    price_scale: float = 10.0
    shares_outstanding: float = 3e6
    portfolio_shares: float = 30.0

    def __post_init__(self):
        if self.variant not in TOY_PRESETS:
            raise InvalidConfig(f"unknown toy variant {self.variant!r}")
        for name in ("share_weights", "value_weights"):
            w = getattr(self, name)
            if len(w) != 2 or min(w) <= 0 or abs(sum(w) - 1) > 1e-12:
                raise InvalidConfig(f"{name} must be two positive numbers summing to 1")
        if len(self.volumes) != 2 or min(self.volumes) <= 0:
            raise InvalidConfig("volumes must be two positive numbers")
        if min(self.thetas) < 0 or min(self.mean_returns) <= 0:
            raise InvalidConfig("return variances must be >= 0 and mean returns > 0")
        if self.n_ticks < 2:
            raise InvalidConfig("need at least two ticks")
        if self.variant == "perturbed":
            u1, u2 = self.volumes
            if not self.alpha**2 < u1**2 or u1 > u2:
                raise InvalidConfig("perturbed toy needs alpha^2 < U1^2 and U1 <= U2")
            if self.n_ticks % 2:
                raise InvalidConfig("perturbed toy needs an even tick count (antithetic pairs)")

    @classmethod
    def preset(cls, variant: str, theta: float = 0.01, theta22: float | None = None, **kw) -> "ToyModelConfig":
        """Weights and volumes of the preset toy variants with theta11 = theta22 = theta by default."""
        if variant not in TOY_PRESETS:
            raise InvalidConfig(f"unknown toy variant {variant!r}")
        params = dict(TOY_PRESETS[variant])
        params.update(kw)
        return cls(variant=variant, thetas=(theta, theta if theta22 is None else theta22), **params)

    @property
    def base_prices(self) -> np.ndarray:
        return self.price_scale * np.array(self.value_weights) / np.array(self.share_weights)


@dataclass(frozen=True, eq=False)
class ToyModel:
    tape: MarketTape
    portfolio: PortfolioSpec
    market_base: MarketBase
    expected: dict[str, float] = field(default_factory=dict)


def _uncorrelated_returns(rng: np.random.Generator, thetas, means, n: int) -> np.ndarray:
    z = rng.standard_normal((2, n))
    z -= np.array([fmean(row) for row in z])[:, None]
    z[1] -= fsum(z[0] * z[1]) / fsum(z[0] * z[0]) * z[0]
    z -= np.array([fmean(row) for row in z])[:, None]
    out = np.empty_like(z)
    for k in range(2):
        var = fsum(z[k] * z[k]) / n
        out[k] = means[k] + z[k] * math.sqrt(thetas[k] / var)
    return out


def _antithetic_deltas(rng: np.random.Generator, alpha: float, n: int) -> np.ndarray:
    amps = rng.uniform(0.0, alpha * math.sqrt(2.0), n // 2)
    if alpha > 0:
        amps *= alpha / math.sqrt(fsum(amps * amps) / amps.size)
    delta = np.concatenate([amps, -amps])
    return delta[rng.permutation(n)]


def toy_expectations(config: ToyModelConfig) -> dict[str, float]:
    """Closed-form constant-volume variances for the toy weights."""
    big_x = np.array(config.value_weights)
    x0 = np.array(config.share_weights)
    u = np.array(config.volumes)
    xt = u / u.sum()
    th = np.array(config.thetas)
    theta_m = float(np.sum(th * big_x**2))
    theta_mm = float(np.sum(th * (big_x * xt / x0) ** 2))
    out = {
        "theta_markowitz": theta_m,
        "theta_markowitz_market": theta_mm,
        "ratio_market_over_portfolio": theta_mm / theta_m,
        "ratio_portfolio_over_market": theta_m / theta_mm,
    }
    if config.variant == "perturbed":
        n = config.n_ticks
        holdings = x0 * config.portfolio_shares
        w = holdings[0] / (n * u[0]) - holdings[1] / (n * u[1])
        big_w = holdings.sum() / n
        out["chi2"] = (w * config.alpha) ** 2 / big_w**2
        out["chi_m2"] = 0.0
    return out


def generate_toy(config: ToyModelConfig) -> ToyModel:
    rng = np.random.default_rng(config.seed)
    n = config.n_ticks
    p0 = config.base_prices
    returns = _uncorrelated_returns(rng, config.thetas, config.mean_returns, n)
    prices = p0[:, None] * returns
    if np.any(prices <= 0):
        raise InvalidConfig("return variances too large: generated a non-positive price")
    volumes = np.tile(np.array(config.volumes, dtype=float)[:, None], (1, n))
    if config.variant == "perturbed":
        delta = _antithetic_deltas(rng, config.alpha, n)
        volumes[0] += delta
        volumes[1] -= delta
        if np.any(volumes <= 0):
            raise InvalidConfig("perturbation drove a volume to zero; lower alpha")
    ids = ("S1", "S2")
    tape = MarketTape(tuple(SecurityTape(i, p * u, u) for i, p, u in zip(ids, prices, volumes)))
    x0 = np.array(config.share_weights)
    base = MarketBase(ids, p0, x0 * config.shares_outstanding)
    portfolio = PortfolioSpec(ids, x0 * config.portfolio_shares, p0)
    return ToyModel(tape, portfolio, base, toy_expectations(config))


def with_eps(config: RandomMarketConfig, eps: float) -> RandomMarketConfig:
    return replace(config, eps=eps)
