"""Aggregate a fine tick grid into coarser spans of zeta consecutive ticks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numerics import fsum
from .errors import SpanMismatch
from .tape import AveragingWindow, MarketTape, SecurityTape

POLICIES = ("error", "drop")


@dataclass(frozen=True)
class SpanSpec:
    """span: fine ticks per coarse tick (zeta). Coarse tick count is K = N // span."""

    span: int
    trailing: str = "error"

    def __post_init__(self):
        if int(self.span) != self.span or self.span < 1:
            raise SpanMismatch(f"span must be a positive integer, got {self.span!r}")
        if self.trailing not in POLICIES:
            raise SpanMismatch(f"trailing policy must be one of {POLICIES}, got {self.trailing!r}")

    def coarse_count(self, n: int) -> int:
        k, rest = divmod(n, self.span)
        if rest and self.trailing == "error":
            raise SpanMismatch(f"{n} ticks do not divide into spans of {self.span}")
        return k


def resample_arrays(values: np.ndarray, volumes: np.ndarray, spec: SpanSpec) -> tuple[np.ndarray, np.ndarray]:
    """Summed values and volumes per span; no minimum length is enforced here."""
    values = np.asarray(values, dtype=float)
    volumes = np.asarray(volumes, dtype=float)
    k = spec.coarse_count(values.size)
    used = k * spec.span
    cv = values[:used].reshape(k, spec.span)
    cu = volumes[:used].reshape(k, spec.span)
    return np.array([fsum(row) for row in cv]), np.array([fsum(row) for row in cu])


def _coarse_window(window: AveragingWindow, spec: SpanSpec, k: int) -> AveragingWindow:
    span = window.tick_span * spec.span
    return AveragingWindow(window.center, k * span, k, span)


def resample(tape: SecurityTape | MarketTape, spec: SpanSpec | int) -> SecurityTape | MarketTape:
    """Coarser tape of the same kind: C(tau_k) and U(tau_k) are per-span sums.

    Totals and window VWAP are preserved. A span that leaves fewer than two
    coarse ticks raises SpanMismatch since no variance can be formed.
    """
    if not isinstance(spec, SpanSpec):
        spec = SpanSpec(spec)
    n = len(tape) if isinstance(tape, SecurityTape) else tape.n_ticks
    k = spec.coarse_count(n)
    if k < 2:
        raise SpanMismatch(f"span {spec.span} collapses {n} ticks into {k} coarse tick(s); need at least 2")
    if isinstance(tape, SecurityTape):
        return SecurityTape(tape.security_id, *resample_arrays(tape.values, tape.volumes, spec))
    secs = tuple(SecurityTape(s.security_id, *resample_arrays(s.values, s.volumes, spec)) for s in tape)
    return MarketTape(secs, _coarse_window(tape.window, spec, k))
