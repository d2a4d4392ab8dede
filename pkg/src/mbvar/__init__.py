"""Market-based returns and variances from trade value and volume tapes."""

from .errors import (
    ConsistencyError,
    DegenerateTape,
    GridError,
    InvalidConfig,
    InvalidTick,
    MbvarError,
    MissingSecurity,
    ParseError,
    SpanMismatch,
    UndefinedCorrelation,
    WeightMismatch,
    ZeroShare,
    ZeroVolume,
)
from .io import AnalysisConfig, ingest_tape, read_config, render_report, write_config, write_tape
from .portfolio import (
    LiquidityReport,
    MarketBase,
    MarketShareSnapshot,
    NormalizedPortfolioTape,
    PortfolioSpec,
    aggregate_market,
    liquidity_report,
    market_proportional_portfolio,
    market_shares,
    normalize_to_portfolio,
)
from .resample import SpanSpec, resample
from .simulate import RandomMarketConfig, ToyModelConfig, generate_market, generate_toy, simulate_market
from .tape import (
    AveragingWindow,
    MarketTape,
    SecurityTape,
    TradeStats,
    TradeTick,
    correlation_constant,
    moments,
    vwap,
)
from .variance import (
    full_report,
    market_based_variance,
    markowitz_market_variance,
    markowitz_portfolio_variance,
    mean_return,
    return_covariances,
    taylor_variance,
    variance_oracle,
    variance_report,
)

__version__ = "0.1.0"
