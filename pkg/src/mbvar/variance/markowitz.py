"""Constant-volume (Markowitz) variances built from equal-weight return covariances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .._numerics import fcov, fmean, fsum
from ..errors import ConsistencyError, DegenerateTape, WeightMismatch, ZeroShare
from ..tape import MarketTape


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """theta_jk: 1/N covariances of per-tick gross returns about equal-weight means."""

    security_ids: tuple[str, ...]
    matrix: np.ndarray
    mean_returns: np.ndarray

    def __len__(self) -> int:
        return len(self.security_ids)

    def as_dict(self) -> dict:
        return {
            "security_ids": list(self.security_ids),
            "matrix": [[float(v) for v in row] for row in self.matrix],
            "mean_returns_equal_weight": [float(v) for v in self.mean_returns],
        }


def _aligned_prices(tapes: MarketTape, base_prices) -> np.ndarray:
    if isinstance(base_prices, Mapping):
        try:
            base = np.array([base_prices[i] for i in tapes.security_ids], dtype=float)
        except KeyError as exc:
            raise DegenerateTape(f"no base price for security {exc.args[0]}") from None
    else:
        base = np.asarray(base_prices, dtype=float)
    if base.shape != (len(tapes),):
        raise WeightMismatch(f"expected {len(tapes)} base prices, got {base.shape}")
    if not np.all(base > 0):
        raise DegenerateTape("base prices must be positive")
    return base


def return_covariances(tapes: MarketTape, base_prices: Mapping[str, float] | Sequence[float]) -> CovarianceMatrix:
    """Covariance matrix of gross returns R_j(t_i) = p_j(t_i) / p_j(t0).

    Means are arithmetic over ticks, the convention under which the
    constant-volume reduction is exact.
    """
    base = _aligned_prices(tapes, base_prices)
    returns = tapes.price_matrix / base[:, None]
    means = np.array([fmean(r) for r in returns])
    j = len(tapes)
    theta = np.empty((j, j))
    for a in range(j):
        for b in range(a, j):
            theta[a, b] = theta[b, a] = fcov(returns[a], returns[b], means[a], means[b])
    theta.setflags(write=False)
    means.setflags(write=False)
    return CovarianceMatrix(tapes.security_ids, theta, means)


def _weights(cov: CovarianceMatrix, weights, name: str) -> np.ndarray:
    if isinstance(weights, Mapping):
        weights = [weights.get(i, 0.0) for i in cov.security_ids]
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(cov),):
        raise WeightMismatch(f"{name}: expected {len(cov)} weights, got {w.size}")
    return w


def _quadratic_form(theta: np.ndarray, w: np.ndarray) -> float:
    terms = theta * np.outer(w, w)
    v = fsum(terms)
    if v < 0:
        scale = fsum(np.abs(terms))
        if v < -1e-12 * max(scale, 1e-300):
            raise ConsistencyError(f"covariance quadratic form is negative: {v!r}")
        v = 0.0
    return v


def markowitz_portfolio_variance(cov: CovarianceMatrix, weights) -> float:
    """Theta_M = sum_jk theta_jk X_j(t0) X_k(t0)."""
    w = _weights(cov, weights, "value weights")
    if abs(fsum(w) - 1.0) > 1e-9:
        raise WeightMismatch(f"value weights sum to {fsum(w)!r}, not 1")
    return _quadratic_form(cov.matrix, w)


def _share_ratio(x0: np.ndarray, xt: np.ndarray) -> np.ndarray:
    if np.any(x0 == 0):
        raise ZeroShare("a share weight x_j(t0) is zero")
    return xt / x0


def markowitz_market_variance(cov: CovarianceMatrix, value_weights, share_weights, current_share_weights) -> float:
    """Constant-volume variance of all market trades.

    Uses the modified weights X_j(t0) x_j(t) / x_j(t0) in place of X_j(t0).
    """
    big_x = _weights(cov, value_weights, "value weights")
    x0 = _weights(cov, share_weights, "share weights")
    xt = _weights(cov, current_share_weights, "current share weights")
    return _quadratic_form(cov.matrix, big_x * _share_ratio(x0, xt))


def markowitz_difference(cov: CovarianceMatrix, value_weights, share_weights, current_share_weights) -> float:
    """Theta_M - Theta_Mm as one weighted sum over theta_jk."""
    big_x = _weights(cov, value_weights, "value weights")
    x0 = _weights(cov, share_weights, "share weights")
    xt = _weights(cov, current_share_weights, "current share weights")
    ratio = _share_ratio(x0, xt)
    kernel = 1.0 - np.outer(ratio, ratio)
    return fsum(cov.matrix * np.outer(big_x, big_x) * kernel)
