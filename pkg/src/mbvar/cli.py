"""mbvar command line: analyze, simulate, resample and liquidity subcommands.

Exit codes: 0 success, 1 usage, parse or domain error, 2 liquidity failure
under --strict-liquidity, 3 internal consistency violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
from pathlib import Path

from .errors import ConsistencyError, InvalidConfig, MbvarError, SpanMismatch
from .io import AnalysisConfig, format_tape, parse_tape, read_config, render_report, write_config, write_tape
from .portfolio import MarketBase, PortfolioSpec, infer_base_prices, liquidity_report
from .resample import SpanSpec, resample
from .simulate import (
    RandomMarketConfig,
    ToyModelConfig,
    default_market_base,
    generate_toy,
    liquid_portfolio,
    simulate_market,
)
from .tape import MarketTape
from .variance import full_report

log = logging.getLogger("mbvar")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_LIQUIDITY = 2
EXIT_CONSISTENCY = 3

TOY_VARIANTS = {"toy-a": "A", "toy-b": "B", "perturbed": "perturbed"}
WALL_CLOCK_UNITS = {"s": 1.0, "sec": 1.0, "min": 60.0, "h": 3600.0, "d": 86400.0}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _configure_logging() -> None:
    level = os.environ.get("MBVAR_LOG", "WARNING").strip().upper()
    numeric = int(level) if level.isdigit() else getattr(logging, level, None)
    if not isinstance(numeric, int):
        numeric = logging.WARNING
    logging.basicConfig(level=numeric, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)


def _load_tape(path: str, drop_zero_volume: bool) -> MarketTape:
    tape, dropped = parse_tape(Path(path).read_text(), drop_zero_volume)
    if dropped:
        print(f"warning: dropped zero-volume tick(s) {dropped}; N is now {tape.n_ticks}", file=sys.stderr)
    return tape


def build_inputs(tape: MarketTape, config: AnalysisConfig) -> tuple[MarketTape, PortfolioSpec, MarketBase, list[str]]:
    """Apply config resampling and window, then build the portfolio and market base.

    Securities on the tape without a configured base price get their first
    tick price; their ids are returned so the report can flag them.
    """
    if config.resample_span > 1:
        tape = resample(tape, SpanSpec(int(config.resample_span)))
    window = config.averaging_window(tape.n_ticks)
    if window is not None:
        tape = MarketTape(tape.securities, window)
    ids = tape.security_ids
    unknown = [k for k in config.base_prices if k not in ids and k not in config.holdings]
    if unknown:
        log.warning("ignoring base prices for securities not on the tape: %s", unknown)
    prices, inferred = infer_base_prices(tape, {k: v for k, v in config.base_prices.items() if k in ids})
    if inferred:
        log.warning("inferred base prices from first tick for %s", inferred)
    portfolio = PortfolioSpec.from_mappings(config.holdings, prices)
    if config.shares_outstanding is not None:
        shares = config.shares_outstanding
        missing = [i for i in ids if i not in shares]
        if missing:
            raise InvalidConfig(f"no shares outstanding for {missing}")
    else:
        held = portfolio.holdings_for(ids)
        if min(held) <= 0:
            raise InvalidConfig("shares_outstanding is required when the portfolio does not hold every security")
        shares = dict(zip(ids, held.tolist()))
    base = MarketBase(ids, [prices[i] for i in ids], [shares[i] for i in ids])
    return tape, portfolio, base, inferred


def cmd_analyze(args) -> int:
    config = read_config(args.config)
    tape = _load_tape(args.tape, args.drop_zero_volume)
    tape, portfolio, base, inferred = build_inputs(tape, config)
    threshold = config.liquidity_threshold if args.threshold is None else args.threshold
    rep = full_report(tape, portfolio, base, threshold)
    doc = rep.as_dict()
    if inferred:
        doc["flags"].append("base_prices_inferred")
        doc["inputs"]["inferred_base_prices"] = inferred
    if config.resample_span > 1:
        doc["inputs"]["resample_span"] = int(config.resample_span)
    text = render_report(doc)
    out = args.out or config.output
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.plot_data:
        from .plotting import export_plot_data

        export_plot_data(tape, portfolio, base, args.plot_data, figures=not args.no_figures)
    if rep.liquidity is not None and not rep.liquidity.passed:
        failing = ", ".join(rep.liquidity.failing)
        print(f"warning: liquidity check failed for {failing}", file=sys.stderr)
        if args.strict_liquidity:
            return EXIT_LIQUIDITY
    return EXIT_OK


def cmd_liquidity(args) -> int:
    config = read_config(args.config)
    tape = _load_tape(args.tape, args.drop_zero_volume)
    tape, portfolio, _, _ = build_inputs(tape, config)
    threshold = config.liquidity_threshold if args.threshold is None else args.threshold
    rep = liquidity_report(portfolio, tape, threshold)
    sys.stdout.write(json.dumps(rep.as_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n")
    if not rep.passed:
        print(f"warning: liquidity check failed for {', '.join(rep.failing)}", file=sys.stderr)
        if args.strict_liquidity:
            return EXIT_LIQUIDITY
    return EXIT_OK


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.variant == "random":
        cfg = RandomMarketConfig(
            n_securities=args.j,
            n_ticks=args.n,
            eps=args.eps,
            seed=args.seed,
            volatility=args.volatility,
            rho=args.rho,
            distribution=args.distribution,
            hold=args.hold,
        )
        sim = simulate_market(cfg)
        tape = sim.tape
        base = default_market_base(tape, sim.base_prices)
        portfolio = liquid_portfolio(base, tape)
    else:
        kw = {"n_ticks": args.n, "seed": args.seed}
        if args.alpha is not None:
            kw["alpha"] = args.alpha
        toy = generate_toy(ToyModelConfig.preset(TOY_VARIANTS[args.variant], args.theta, args.theta22, **kw))
        tape, base, portfolio = toy.tape, toy.market_base, toy.portfolio
    ids = tape.security_ids
    config = AnalysisConfig(
        holdings=dict(zip(portfolio.security_ids, portfolio.holdings.tolist())),
        base_prices=dict(zip(ids, base.base_prices.tolist())),
        shares_outstanding=dict(zip(ids, base.shares_outstanding.tolist())),
    )
    write_tape(tape, out / "tape.csv")
    write_config(config, out / "config.toml")
    log.info("wrote %s and %s", out / "tape.csv", out / "config.toml")
    return EXIT_OK


def parse_span(text: str, tick_span: float | None) -> int:
    """Span as a tick count, or a wall-clock length such as 90s, 1min, 1h, 1d."""
    text = text.strip()
    if text.isdigit():
        return int(text)
    m = re.fullmatch(r"(\d+(?:\.\d+)?)\s*([a-z]+)", text)
    if not m or m.group(2) not in WALL_CLOCK_UNITS:
        raise UsageError(f"span {text!r} is neither a tick count nor a duration like 1min, 1h, 1d")
    if tick_span is None or not tick_span > 0:
        raise UsageError("a wall-clock span needs --tick-span (seconds per tick)")
    ticks = float(m.group(1)) * WALL_CLOCK_UNITS[m.group(2)] / tick_span
    k = round(ticks)
    if k < 1 or not math.isclose(ticks, k, rel_tol=1e-9):
        raise SpanMismatch(f"span {text} is {ticks:g} ticks of {tick_span:g}s, not a whole number")
    return k


def cmd_resample(args) -> int:
    tape = _load_tape(args.tape, args.drop_zero_volume)
    span = parse_span(args.span, args.tick_span)
    coarse = resample(tape, SpanSpec(span, args.trailing))
    if args.out:
        write_tape(coarse, args.out)
    else:
        sys.stdout.write(format_tape(coarse))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mbvar", description="Market-based returns and variances from trade tapes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def tape_args(p, config=True):
        p.add_argument("--tape", required=True, help="tape CSV (security_id,tick_index,value,volume)")
        if config:
            p.add_argument("--config", required=True, help="analysis config (TOML)")
        p.add_argument("--drop-zero-volume", action="store_true", help="remove zero-volume ticks from every security")

    p = sub.add_parser("analyze", help="full variance report")
    tape_args(p)
    p.add_argument("--out", help="report path (default: config output, else stdout)")
    p.add_argument("--plot-data", metavar="DIR", help="write per-tick CSVs and figures into DIR")
    p.add_argument("--no-figures", action="store_true", help="with --plot-data, skip the PNG figures")
    p.add_argument("--threshold", type=float, help="override the liquidity threshold")
    p.add_argument("--strict-liquidity", action="store_true", help="exit 2 when the liquidity check fails")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("liquidity", help="portfolio holdings against traded volumes")
    tape_args(p)
    p.add_argument("--threshold", type=float)
    p.add_argument("--strict-liquidity", action="store_true")
    p.set_defaults(func=cmd_liquidity)

    p = sub.add_parser("simulate", help="write a synthetic tape.csv and config.toml")
    p.add_argument("--variant", choices=["random", *TOY_VARIANTS], default="random")
    p.add_argument("--j", type=int, default=3, help="securities (random variant)")
    p.add_argument("--n", type=int, default=64, help="ticks")
    p.add_argument("--eps", type=float, default=0.0, help="volume fluctuation scale (random variant)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--volatility", type=float, default=0.01)
    p.add_argument("--rho", type=float, default=0.0, help="return correlation between securities")
    p.add_argument("--distribution", choices=["uniform", "lognormal"], default="uniform")
    p.add_argument("--hold", choices=["price", "value"], default="price")
    p.add_argument("--theta", type=float, default=0.01, help="toy return variance theta11")
    p.add_argument("--theta22", type=float, help="toy return variance theta22 (default: --theta)")
    p.add_argument("--alpha", type=float, help="perturbation size of the perturbed toy")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("resample", help="aggregate consecutive ticks into coarser spans")
    tape_args(p, config=False)
    p.add_argument("--span", required=True, help="ticks per span, or a duration (90s, 1min, 1h, 1d)")
    p.add_argument("--tick-span", type=float, help="seconds per tick, needed for wall-clock spans")
    p.add_argument("--trailing", choices=["error", "drop"], default="error")
    p.add_argument("--out", help="output tape (default stdout)")
    p.set_defaults(func=cmd_resample)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConsistencyError as exc:
        print(f"mbvar: internal consistency violation: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (MbvarError, UsageError, OSError) as exc:
        print(f"mbvar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
