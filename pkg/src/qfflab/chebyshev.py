"""Chebyshev expansion of x^t, truncation order and tail certificate.

x^t = sum_l p_l T_l(x), where p_l is the probability that a t-step +-1 random walk
from the origin ends at distance l (both signs folded together).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import binom

EXACT_MAX_T = 64
MAX_T = 10**6
EXACT_INT_T = 4096


@dataclass(frozen=True, eq=False)
class FFCoefficients:
    t: int
    tau: int
    p: np.ndarray  # p_0 .. p_tau
    tail: float
    q: np.ndarray  # p / (1 - tail)

    def to_json(self) -> dict:
        return {"t": self.t, "tau": self.tau, "tail": self.tail}


def coefficients(t: int) -> np.ndarray:
    """Full list p_0..p_t."""
    if t < 0 or t > MAX_T:
        raise ValueError(f"t must be in [0, {MAX_T}]")
    p = np.zeros(t + 1)
    ls = np.arange(t % 2, t + 1, 2)
    if t <= EXACT_INT_T:
        # int / int true division is correctly rounded
        den = 2 ** (t - 1) if t else 1
        p[ls] = [math.comb(t, (t - l) // 2) / den for l in ls]
        if t == 0:
            p[0] = 2.0
    else:
        # saddle-point binomial pmf; plain log-gamma differences lose ~1e-9 at t = 10^6
        p[ls] = 2.0 * binom.pmf((t - ls) // 2, t, 0.5)
    if t % 2 == 0:
        p[0] *= 0.5
    return p


def coefficients_exact(t: int) -> list[Fraction]:
    """Rational p_0..p_t for cross-checks at small t."""
    if t < 0 or t > EXACT_MAX_T:
        raise ValueError(f"exact coefficients limited to t <= {EXACT_MAX_T}")
    p = [Fraction(0)] * (t + 1)
    for l in range(t % 2, t + 1, 2):
        c = 2 * Fraction(math.comb(t, (t - l) // 2), 2**t)
        p[l] = c / 2 if l == 0 else c
    return p


def truncation_order(t: int, eps: float, cap: bool = True) -> int:
    """ceil(sqrt(2 t ln(2/eps))), optionally capped at t where the expansion is exact."""
    if not 0 < eps < 2:
        raise ValueError(f"eps must lie in (0, 2), got {eps}")
    if t < 0:
        raise ValueError("t must be nonnegative")
    tau = math.ceil(math.sqrt(2 * t * math.log(2 / eps)))
    return min(tau, t) if cap else tau


def tail_mass(t: int, tau: int) -> float:
    """Sum of p_l for tau < l <= t."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau >= t:
        return 0.0
    p = coefficients(t)
    # summing the small tail directly keeps relative accuracy
    return float(p[tau + 1:].sum())


def ff_coefficients(t: int, tau: int) -> FFCoefficients:
    """Truncate at tau. Branches above t carry weight zero when tau > t."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    full = coefficients(t)
    p = np.zeros(tau + 1)
    keep = min(tau, t)
    p[: keep + 1] = full[: keep + 1]
    tail = tail_mass(t, tau)
    return FFCoefficients(t, tau, p, tail, p / (1.0 - tail))


def approx_eigenfunction(coeffs: FFCoefficients, theta, weights: str = "p"):
    """sum_{l <= tau} w_l cos(l theta) with w = p (default) or q."""
    w = coeffs.p if weights == "p" else coeffs.q
    theta = np.asarray(theta, dtype=float)
    ls = np.arange(len(w))
    out = np.cos(np.multiply.outer(theta, ls)) @ w
    return float(out) if out.ndim == 0 else out


def grid_error(coeffs: FFCoefficients, points: int = 10_000) -> float:
    """max over a uniform grid of [0, pi] of |cos^t - truncated expansion|."""
    theta = np.linspace(0.0, np.pi, points)
    return float(np.max(np.abs(np.cos(theta) ** coeffs.t - approx_eigenfunction(coeffs, theta))))
