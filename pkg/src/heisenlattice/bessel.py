"""Bessel functions J_n of integer order, vectorised over the argument.

Regions:

* ``x <= 2``: power series,
* ``2 < x < max(25, n)``: Miller's backward recurrence normalised by
  ``J_0 + 2 sum J_2k = 1``,
* otherwise: Hankel asymptotic expansion of ``J_0``, ``J_1`` followed by
  forward recurrence (stable while ``n <= x``).
"""

from __future__ import annotations

import math

import numpy as np

MAX_ORDER = 64
MAX_X = 1e4
_SERIES_X = 2.0
_ASYM_X = 25.0


def _series(n: int, x: np.ndarray) -> np.ndarray:
    h = 0.5 * x
    term = h ** n / math.factorial(n)
    out = term.copy()
    h2 = h * h
    for m in range(1, 40):
        term = -term * h2 / (m * (m + n))
        out += term
    return out


def _series_ratio(n: int, x: np.ndarray) -> np.ndarray:
    """J_n(x) / x^n by its power series."""
    h2 = 0.25 * x * x
    term = np.full_like(x, 1.0 / (2.0 ** n * math.factorial(n)))
    out = term.copy()
    for m in range(1, 40):
        term = -term * h2 / (m * (m + n))
        out += term
    return out


def _miller(n: int, x: np.ndarray) -> np.ndarray:
    top = max(n, float(np.max(x)))
    N = int(top + 20 + 6 * math.sqrt(top))
    N += N % 2
    jp1 = np.zeros_like(x)
    j = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    want = np.zeros_like(x)
    for k in range(N, 0, -1):
        jm1 = (2.0 * k / x) * j - jp1
        jp1, j = j, jm1
        # j now holds J_{k-1}
        if k - 1 == n:
            want = j.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        big = np.abs(j) > 1e250
        if np.any(big):
            s = np.where(big, 1e-250, 1.0)
            j *= s
            jp1 *= s
            norm *= s
            want *= s
    norm += j  # J_0
    return want / norm


def _hankel01(x: np.ndarray):
    """(J_0(x), J_1(x)) from the asymptotic expansion; x >= 25."""
    res = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        P = np.ones_like(x)
        Q = np.zeros_like(x)
        a = 1.0
        inv8x = 1.0 / (8.0 * x)
        term = np.ones_like(x)
        for k in range(1, 30):
            a = (mu - (2 * k - 1) ** 2) / k
            term = term * a * inv8x
            if k % 2:
                Q += term if (k // 2) % 2 == 0 else -term
            else:
                P += -term if (k // 2) % 2 else term
            if np.max(np.abs(term)) < 1e-17:
                break
        chi = x - (0.5 * nu + 0.25) * math.pi
        res.append(np.sqrt(2.0 / (math.pi * x)) * (P * np.cos(chi) - Q * np.sin(chi)))
    return res[0], res[1]


def _forward(n: int, x: np.ndarray) -> np.ndarray:
    j0, j1 = _hankel01(x)
    if n == 0:
        return j0
    jm, j = j0, j1
    for k in range(1, n):
        jm, j = j, (2.0 * k / x) * j - jm
    return j


def bessel_j(order: int, x):
    """J_order(x) for integer ``0 <= order <= 64`` and ``0 <= x <= 1e4``."""
    if int(order) != order or not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must be an integer in [0, {MAX_ORDER}]")
    order = int(order)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0) or np.any(xa > MAX_X) or not np.all(np.isfinite(xa)):
        raise ValueError(f"x must lie in [0, {MAX_X:g}]")
    out = np.empty_like(xa)
    small = xa <= _SERIES_X
    large = xa >= max(_ASYM_X, order)
    mid = ~(small | large)
    if np.any(small):
        out[small] = _series(order, xa[small])
    if np.any(mid):
        out[mid] = _miller(order, xa[mid])
    if np.any(large):
        out[large] = _forward(order, xa[large])
    return float(out[0]) if scalar else out


def bessel_ratio(order: int, x) -> np.ndarray:
    """J_order(x) / x^order, finite at x = 0."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(xa)
    small = xa <= _SERIES_X
    if np.any(small):
        out[small] = _series_ratio(order, xa[small])
    if np.any(~small):
        xs = xa[~small]
        out[~small] = bessel_j(order, xs) / xs ** order
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])
