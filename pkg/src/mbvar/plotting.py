"""Per-tick series for plotting, written as CSV and rendered as PNG figures."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import format_float  # noqa: E402
from .portfolio import MarketBase, PortfolioSpec, aggregate_market, normalize_to_portfolio  # noqa: E402
from .tape import MarketTape  # noqa: E402

log = logging.getLogger(__name__)

SERIES_FILES = {
    "prices": "Price",
    "returns": "Gross return p(t_i) / p(t0)",
    "cumulative_volumes": "Cumulative volume",
}


def plot_series(tapes: MarketTape, portfolio: PortfolioSpec, base: MarketBase) -> dict[str, dict[str, np.ndarray]]:
    """Prices, returns and cumulative volumes for each security, the market and the portfolio.

    The portfolio column uses the normalized portfolio tape, so its cumulative
    volume ends at the portfolio's total share count.
    """
    ids = tapes.security_ids
    base = base.aligned(ids)
    spec = portfolio.aligned(ids, dict(zip(base.security_ids, base.base_prices.tolist())))
    market = aggregate_market(tapes, "market")
    norm = normalize_to_portfolio(tapes, spec)

    prices: dict[str, np.ndarray] = {}
    returns: dict[str, np.ndarray] = {}
    cumulative: dict[str, np.ndarray] = {}
    for s, p0 in zip(tapes, base.base_prices):
        prices[s.security_id] = s.prices
        returns[s.security_id] = s.prices / p0
        cumulative[s.security_id] = np.cumsum(s.volumes)
    prices["market"] = market.prices
    returns["market"] = market.prices / base.price
    cumulative["market"] = np.cumsum(market.volumes)
    prices["portfolio"] = norm.prices
    returns["portfolio"] = norm.prices / spec.price
    cumulative["portfolio"] = np.cumsum(norm.volumes)
    return {"prices": prices, "returns": returns, "cumulative_volumes": cumulative}


def write_series_csv(series: dict[str, np.ndarray], path: Path) -> None:
    names = list(series)
    n = len(next(iter(series.values())))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tick_index", *names])
        for i in range(n):
            writer.writerow([i, *(format_float(series[k][i]) for k in names)])


def render_figure(series: dict[str, np.ndarray], ylabel: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    try:
        for name, y in series.items():
            style = "-" if name not in ("market", "portfolio") else "--"
            ax.plot(np.arange(len(y)), y, style, lw=1.2, label=name)
        ax.set_xlabel("Tick index")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize="small", ncol=2)
        fig.tight_layout()
        fig.savefig(path, dpi=100, metadata={"Software": None})
    finally:
        plt.close(fig)


def export_plot_data(
    tapes: MarketTape,
    portfolio: PortfolioSpec,
    base: MarketBase,
    out_dir: str | Path,
    figures: bool = True,
) -> list[Path]:
    """Write one CSV (and optionally one PNG) per series group into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, series in plot_series(tapes, portfolio, base).items():
        path = out / f"{name}.csv"
        write_series_csv(series, path)
        written.append(path)
        if figures:
            png = out / f"{name}.png"
            render_figure(series, SERIES_FILES[name], png)
            written.append(png)
    log.info("wrote plot data to %s", out)
    return written
