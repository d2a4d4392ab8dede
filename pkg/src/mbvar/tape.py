"""Trade tapes on a shared tick grid and their moment statistics.

A tape is the sequence of trade values C(t_i) and volumes U(t_i) of one
security over the averaging window, i = 1..N. All moments use population
(1/N) normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from ._numerics import fcov, fmean, fsum
from .errors import ConsistencyError, DegenerateTape, InvalidTick, UndefinedCorrelation

CORRELATION_TOL = 1e-12


@dataclass(frozen=True)
class TradeTick:
    """One trade: monetary value and (real-valued) share volume."""

    value: float
    volume: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and math.isfinite(self.volume)):
            raise InvalidTick(f"non-finite tick ({self.value}, {self.volume})")
        if self.volume <= 0:
            raise InvalidTick(f"tick volume must be positive, got {self.volume}")
        if self.value <= 0:
            raise InvalidTick(f"tick value must be positive, got {self.value}")

    @property
    def price(self) -> float:
        return self.value / self.volume


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_ticks(values: np.ndarray, volumes: np.ndarray, label: str) -> None:
    if values.ndim != 1 or values.shape != volumes.shape:
        raise InvalidTick(f"{label}: values and volumes must be 1-d of equal length")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(volumes))):
        raise InvalidTick(f"{label}: non-finite value or volume")
    bad = np.flatnonzero(volumes <= 0)
    if bad.size:
        raise InvalidTick(f"{label}: tick {int(bad[0])} has non-positive volume {volumes[bad[0]]}")
    bad = np.flatnonzero(values <= 0)
    if bad.size:
        raise InvalidTick(f"{label}: tick {int(bad[0])} has non-positive value {values[bad[0]]}")


class TapeLike(Protocol):
    values: np.ndarray
    volumes: np.ndarray


@dataclass(frozen=True, eq=False)
class SecurityTape:
    """Values and volumes of consecutive trades with one security."""

    security_id: str
    values: np.ndarray
    volumes: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        volumes = _frozen(self.volumes)
        _check_ticks(values, volumes, str(self.security_id))
        if values.size < 2:
            raise InvalidTick(f"{self.security_id}: a tape needs at least 2 ticks, got {values.size}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "volumes", volumes)

    @classmethod
    def from_ticks(cls, security_id: str, ticks: Iterable[TradeTick | tuple[float, float]]) -> "SecurityTape":
        pairs = [t if isinstance(t, TradeTick) else TradeTick(*t) for t in ticks]
        return cls(security_id, [t.value for t in pairs], [t.volume for t in pairs])

    def __len__(self) -> int:
        return self.values.size

    @property
    def prices(self) -> np.ndarray:
        return self.values / self.volumes

    @property
    def ticks(self) -> list[TradeTick]:
        return [TradeTick(float(c), float(u)) for c, u in zip(self.values, self.volumes)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SecurityTape):
            return NotImplemented
        return (
            self.security_id == other.security_id
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.volumes, other.volumes)
        )


@dataclass(frozen=True)
class AveragingWindow:
    """Window of N ticks spaced tick_span apart centred on center.

    duration must equal tick_count * tick_span (relative tolerance 1e-9).
    """

    center: float
    duration: float
    tick_count: int
    tick_span: float

    def __post_init__(self):
        if self.tick_count < 1 or self.tick_span <= 0 or self.duration <= 0:
            raise ValueError("window needs tick_count >= 1 and positive span and duration")
        expected = self.tick_count * self.tick_span
        if abs(expected - self.duration) > 1e-9 * max(abs(expected), abs(self.duration)):
            raise ValueError(
                f"window duration {self.duration} != tick_count * tick_span = {expected}"
            )

    @classmethod
    def unit(cls, tick_count: int, tick_span: float = 1.0, center: float | None = None) -> "AveragingWindow":
        duration = tick_count * tick_span
        return cls(duration / 2 if center is None else center, duration, tick_count, tick_span)


@dataclass(frozen=True, eq=False)
class MarketTape:
    """J security tapes sharing one tick grid."""

    securities: tuple[SecurityTape, ...]
    window: AveragingWindow | None = None

    def __post_init__(self):
        secs = tuple(self.securities)
        if not secs:
            raise InvalidTick("a market tape needs at least one security")
        n = len(secs[0])
        ids = [s.security_id for s in secs]
        if len(set(ids)) != len(ids):
            raise InvalidTick(f"duplicate security ids in {ids}")
        for s in secs:
            if len(s) != n:
                raise InvalidTick(
                    f"security {s.security_id} has {len(s)} ticks, expected {n} (common grid)"
                )
        window = self.window
        if window is None:
            window = AveragingWindow.unit(n)
        elif window.tick_count != n:
            raise InvalidTick(f"window tick_count {window.tick_count} != tape length {n}")
        object.__setattr__(self, "securities", secs)
        object.__setattr__(self, "window", window)

    @property
    def security_ids(self) -> tuple[str, ...]:
        return tuple(s.security_id for s in self.securities)

    @property
    def n_ticks(self) -> int:
        return len(self.securities[0])

    def __len__(self) -> int:
        return len(self.securities)

    def __iter__(self):
        return iter(self.securities)

    def __getitem__(self, security_id: str) -> SecurityTape:
        for s in self.securities:
            if s.security_id == security_id:
                return s
        raise KeyError(security_id)

    @property
    def value_matrix(self) -> np.ndarray:
        """J x N trade values."""
        return np.vstack([s.values for s in self.securities])

    @property
    def volume_matrix(self) -> np.ndarray:
        return np.vstack([s.volumes for s in self.securities])

    @property
    def price_matrix(self) -> np.ndarray:
        return self.value_matrix / self.volume_matrix

    def __eq__(self, other) -> bool:
        if not isinstance(other, MarketTape):
            return NotImplemented
        return self.securities == other.securities and self.window == other.window


@dataclass(frozen=True)
class TradeStats:
    """First and second moments of one tape.

    psi2, chi2 are the squared coefficients of variation of values and
    volumes; phi is their covariance normalized by the two means. spread2 is
    psi2 - 2 phi + chi2, summed directly as mean((C/C1 - U/U1)^2) so it keeps
    full relative accuracy when the three terms nearly cancel.
    """

    n: int
    mean_value: float
    mean_volume: float
    mean_sq_value: float
    mean_sq_volume: float
    cov_vv: float
    cov_uu: float
    cov_vu: float
    psi2: float
    chi2: float
    phi: float
    spread2: float
    vwap: float
    total_value: float
    total_volume: float

    @property
    def psi(self) -> float:
        return math.sqrt(self.psi2)

    @property
    def chi(self) -> float:
        return math.sqrt(self.chi2)


def stats_from_arrays(values: np.ndarray, volumes: np.ndarray) -> TradeStats:
    values = np.asarray(values, dtype=float)
    volumes = np.asarray(volumes, dtype=float)
    n = values.size
    total_value = fsum(values)
    total_volume = fsum(volumes)
    if total_volume == 0:
        raise DegenerateTape("total volume is zero")
    mc = fmean(values)
    mu = fmean(volumes)
    if mc == 0:
        raise DegenerateTape("mean trade value is zero")
    cov_vv = fcov(values, values, mc, mc)
    cov_uu = fcov(volumes, volumes, mu, mu)
    cov_vu = fcov(values, volumes, mc, mu)
    return TradeStats(
        n=n,
        mean_value=mc,
        mean_volume=mu,
        mean_sq_value=fsum(values * values) / n,
        mean_sq_volume=fsum(volumes * volumes) / n,
        cov_vv=cov_vv,
        cov_uu=cov_uu,
        cov_vu=cov_vu,
        psi2=cov_vv / (mc * mc),
        chi2=cov_uu / (mu * mu),
        phi=cov_vu / (mc * mu),
        spread2=fsum((values / mc - volumes / mu) ** 2) / n,
        vwap=total_value / total_volume,
        total_value=total_value,
        total_volume=total_volume,
    )


def moments(tape: TapeLike) -> TradeStats:
    """Moments, covariances and VWAP of any single-security-like tape."""
    return stats_from_arrays(tape.values, tape.volumes)


def vwap(tape: TapeLike) -> float:
    """Volume weighted average price sum(p_i U_i) / sum(U_i)."""
    total_volume = fsum(tape.volumes)
    if total_volume == 0:
        raise DegenerateTape("total volume is zero")
    return fsum(tape.values) / total_volume


def correlation_constant(stats: TradeStats) -> float:
    """a = phi / (psi * chi), clamped into [-1, 1].

    Raises UndefinedCorrelation when either coefficient of variation is zero.
    """
    denom = stats.psi * stats.chi
    if stats.psi2 == 0 or stats.chi2 == 0 or denom == 0:
        raise UndefinedCorrelation("psi or chi is zero")
    a = stats.phi / denom
    if abs(a) > 1 + CORRELATION_TOL:
        raise ConsistencyError(f"correlation constant {a!r} outside [-1, 1]")
    return max(-1.0, min(1.0, a))


def correlation_or_zero(stats: TradeStats) -> tuple[float, bool]:
    """Correlation constant, or (0.0, True) for a degenerate tape."""
    try:
        return correlation_constant(stats), False
    except UndefinedCorrelation:
        return 0.0, True


def market_from_arrays(
    ids: Sequence[str], values: np.ndarray, volumes: np.ndarray, window: AveragingWindow | None = None
) -> MarketTape:
    return MarketTape(
        tuple(SecurityTape(i, v, u) for i, v, u in zip(ids, values, volumes)), window
    )
