"""Tape CSV files, analysis config files and report serialization.

Tape files are CSV with header ``security_id,tick_index,value,volume``; price
is never stored. Config files are TOML::

    liquidity_threshold = 0.05   # optional
    resample_span = 1            # optional, fine ticks per coarse tick
    output = "report.json"       # optional

    [holdings]                   # W_j(t0), shares
    S1 = 20.0
    [base_prices]                # p_j(t0)
    S1 = 5.0
    [shares_outstanding]         # optional W_mj(t0); defaults to the holdings
    S1 = 2000000.0
    [window]                     # optional; duration = N * tick_span
    center = 32.0
    duration = 64.0
    tick_span = 1.0
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import GridError, InvalidConfig, ParseError, ZeroVolume
from .portfolio import DEFAULT_LIQUIDITY_THRESHOLD
from .tape import AveragingWindow, MarketTape, SecurityTape

log = logging.getLogger(__name__)

TAPE_HEADER = ("security_id", "tick_index", "value", "volume")


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _parse_float(text: str, name: str, line: int) -> float:
    try:
        x = float(text)
    except (TypeError, ValueError):
        raise ParseError(f"{name} {text!r} is not a number", line) from None
    if not math.isfinite(x):
        raise ParseError(f"{name} {text!r} is not finite", line)
    return x


def parse_tape(text: str, drop_zero_volume: bool = False) -> tuple[MarketTape, list[int]]:
    """Parse tape CSV text into a validated MarketTape.

    Returns the tape and the tick indices removed by drop_zero_volume.
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise ParseError("empty tape file", 1)
    header = [h.strip() for h in header]
    if tuple(header) != TAPE_HEADER:
        raise ParseError(f"expected header {','.join(TAPE_HEADER)}, got {','.join(header)}", 1)
    rows: dict[str, dict[int, tuple[float, float]]] = {}
    zero_ticks: set[int] = set()
    for fields in reader:
        line = reader.line_num
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", line)
        sid = fields[0].strip()
        if not sid:
            raise ParseError("empty security_id", line)
        try:
            idx = int(fields[1])
        except ValueError:
            raise ParseError(f"tick_index {fields[1]!r} is not an integer", line) from None
        if idx < 0:
            raise ParseError(f"negative tick_index {idx}", line)
        value = _parse_float(fields[2], "value", line)
        volume = _parse_float(fields[3], "volume", line)
        if volume < 0:
            raise ParseError(f"negative volume {volume}", line)
        if volume == 0:
            if not drop_zero_volume:
                raise ZeroVolume(f"line {line}: zero volume for {sid} at tick {idx}")
            zero_ticks.add(idx)
        elif value <= 0:
            raise ParseError(f"non-positive value {value} with positive volume", line)
        ticks = rows.setdefault(sid, {})
        if idx in ticks:
            raise GridError(f"duplicate row for {sid} at tick {idx} (line {line})")
        ticks[idx] = (value, volume)
    if not rows:
        raise ParseError("tape file has no rows", 2)

    n = max(max(t) for t in rows.values()) + 1
    for sid, ticks in rows.items():
        if len(ticks) != n:
            missing = next(i for i in range(n) if i not in ticks)
            raise GridError(f"security {sid} is missing tick {missing}")

    keep = [i for i in range(n) if i not in zero_ticks]
    if zero_ticks:
        msg = f"dropped {len(zero_ticks)} zero-volume tick(s) {sorted(zero_ticks)} across all securities"
        warnings.warn(msg, stacklevel=2)
        log.warning(msg)
    secs = []
    for sid, ticks in rows.items():
        values = np.array([ticks[i][0] for i in keep])
        volumes = np.array([ticks[i][1] for i in keep])
        secs.append(SecurityTape(sid, values, volumes))
    return MarketTape(tuple(secs)), sorted(zero_ticks)


def ingest_tape(path: str | Path, drop_zero_volume: bool = False) -> MarketTape:
    return parse_tape(Path(path).read_text(), drop_zero_volume)[0]


def format_tape(tape: MarketTape | SecurityTape) -> str:
    secs = [tape] if isinstance(tape, SecurityTape) else list(tape)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TAPE_HEADER)
    for s in secs:
        for i, (c, u) in enumerate(zip(s.values, s.volumes)):
            writer.writerow((s.security_id, i, format_float(c), format_float(u)))
    return buf.getvalue()


def write_tape(tape: MarketTape | SecurityTape, path: str | Path) -> None:
    Path(path).write_text(format_tape(tape))


@dataclass
class AnalysisConfig:
    holdings: dict[str, float]
    base_prices: dict[str, float]
    shares_outstanding: dict[str, float] | None = None
    window: dict[str, float] | None = None
    liquidity_threshold: float = DEFAULT_LIQUIDITY_THRESHOLD
    resample_span: int = 1
    output: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.holdings:
            raise InvalidConfig("config has no holdings")
        missing = [k for k in self.holdings if k not in self.base_prices]
        if missing:
            raise InvalidConfig(f"no base price for held securities {missing}")
        for name, mapping in (("holdings", self.holdings), ("base_prices", self.base_prices),
                              ("shares_outstanding", self.shares_outstanding or {})):
            for k, v in mapping.items():
                if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                    raise InvalidConfig(f"{name}.{k} must be a number")
        if any(v < 0 for v in self.holdings.values()):
            raise InvalidConfig("holdings must be non-negative")
        if any(v <= 0 for v in self.base_prices.values()):
            raise InvalidConfig("base prices must be positive")
        if self.shares_outstanding is not None and any(v <= 0 for v in self.shares_outstanding.values()):
            raise InvalidConfig("shares outstanding must be positive")
        if not 0 < self.liquidity_threshold < 1:
            raise InvalidConfig("liquidity_threshold must be in (0, 1)")
        if int(self.resample_span) != self.resample_span or self.resample_span < 1:
            raise InvalidConfig("resample_span must be a positive integer")

    def averaging_window(self, n_ticks: int) -> AveragingWindow | None:
        if self.window is None:
            return None
        try:
            w = self.window
            span = float(w.get("tick_span", 1.0))
            duration = float(w.get("duration", n_ticks * span))
            return AveragingWindow(float(w.get("center", duration / 2)), duration, n_ticks, span)
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"bad window: {exc}") from None

    def to_toml_dict(self) -> dict:
        out: dict = {"liquidity_threshold": self.liquidity_threshold, "resample_span": int(self.resample_span)}
        if self.output is not None:
            out["output"] = self.output
        out["holdings"] = {k: float(v) for k, v in self.holdings.items()}
        out["base_prices"] = {k: float(v) for k, v in self.base_prices.items()}
        if self.shares_outstanding is not None:
            out["shares_outstanding"] = {k: float(v) for k, v in self.shares_outstanding.items()}
        if self.window is not None:
            out["window"] = {k: float(v) for k, v in self.window.items()}
        return out


KNOWN_KEYS = {"holdings", "base_prices", "shares_outstanding", "window", "liquidity_threshold", "resample_span", "output"}


def parse_config(text: str) -> AnalysisConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"config is not valid TOML: {exc}") from None
    for key in ("holdings", "base_prices"):
        if not isinstance(data.get(key), dict):
            raise InvalidConfig(f"config needs a [{key}] table")
    extra = {k: v for k, v in data.items() if k not in KNOWN_KEYS}
    if extra:
        log.warning("ignoring unknown config keys %s", sorted(extra))
    return AnalysisConfig(
        holdings=dict(data["holdings"]),
        base_prices=dict(data["base_prices"]),
        shares_outstanding=dict(data["shares_outstanding"]) if "shares_outstanding" in data else None,
        window=dict(data["window"]) if "window" in data else None,
        liquidity_threshold=data.get("liquidity_threshold", DEFAULT_LIQUIDITY_THRESHOLD),
        resample_span=data.get("resample_span", 1),
        output=data.get("output"),
        extra=extra,
    )


def read_config(path: str | Path) -> AnalysisConfig:
    return parse_config(Path(path).read_text())


def format_config(config: AnalysisConfig) -> str:
    return tomli_w.dumps(config.to_toml_dict())


def write_config(config: AnalysisConfig, path: str | Path) -> None:
    Path(path).write_text(format_config(config))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


SUMMARY_FIELDS = (
    ("portfolio", "mean_return"),
    ("portfolio", "theta_market_based"),
    ("portfolio", "theta_markowitz"),
    ("portfolio", "theta_taylor"),
    ("portfolio", "mu"),
    ("market", "mean_return"),
    ("market", "theta_market_based"),
    ("market", "theta_markowitz"),
    ("market", "theta_taylor"),
    ("market", "mu"),
    ("markowitz", "ratio_markowitz_market_over_portfolio"),
    ("markowitz", "ratio_markowitz_portfolio_over_market"),
    ("returns", "difference"),
)


def rounded_summary(report: dict) -> dict[str, str]:
    """Six-significant-digit copies of the headline numbers."""
    out = {}
    for section, key in SUMMARY_FIELDS:
        value = (report.get(section) or {}).get(key)
        if isinstance(value, float):
            out[f"{section}.{key}"] = f"{value:.6g}"
    return out


def render_report(report: dict) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats, trailing newline."""
    doc = _plain(report)
    doc["summary_rounded"] = rounded_summary(doc)
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
