"""Certified comparisons ``|z|^alpha + A|t|^beta <= R^alpha`` on integer data.

Every lattice decision in the package funnels through :func:`le` (scalar) or
:func:`le_array` (vectorised float filter with an exact fallback).  Points are
described by the integer ``n2 = |z|^2`` and the integer ``t``.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np

EPS = np.finfo(float).eps
# float filter band, in units of eps times the magnitude of the terms
BAND_ULPS = 64.0
_MP_LEVELS = (40, 120)
_MAX_ROOT_DEGREE = 64


class ExactnessError(ArithmeticError):
    """A boundary comparison could not be certified."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


def iroot(n: int, k: int) -> int:
    """Largest integer r >= 0 with r**k <= n."""
    if n < 0:
        raise ValueError("negative radicand")
    if n < 2 or k == 1:
        return n
    r = int(round(n ** (1.0 / k))) if n < 2**1000 else 1 << (n.bit_length() // k + 1)
    # Newton from above
    if r ** k <= n:
        while (r + 1) ** k <= n:
            r += 1
        return r
    while True:
        s = ((k - 1) * r + n // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    while r ** k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def exact_power(base: Fraction, e: Fraction) -> Fraction | None:
    """``base**e`` as a Fraction when it is rational and cheaply certifiable."""
    if base < 0:
        raise ValueError("negative base")
    if base == 0:
        return Fraction(0) if e > 0 else Fraction(1)
    p, q = e.numerator, e.denominator
    if q > _MAX_ROOT_DEGREE or abs(p) > 4096:
        return None
    if q == 1:
        return base ** p
    num, den = base.numerator, base.denominator
    rn, rd = iroot(num, q), iroot(den, q)
    if rn ** q != num or rd ** q != den:
        return None
    return Fraction(rn, rd) ** p


class Threshold:
    """The right-hand side ``R^alpha`` of a membership test.

    Built either from a radius (``from_radius``) or directly from the exact
    value of ``R^alpha`` (``from_power``), which the shell probe needs for
    thresholds such as ``R^2 = M + 1/2``.
    """

    __slots__ = ("alpha", "radius", "exact", "value")

    def __init__(self, alpha: Fraction, radius: Fraction | None, exact: Fraction | None):
        self.alpha = alpha
        self.radius = radius
        self.exact = exact
        if exact is not None:
            self.value = float(exact)
        else:
            self.value = float(radius) ** float(alpha)

    @classmethod
    def from_radius(cls, R, alpha) -> "Threshold":
        Rf = as_fraction(R)
        if Rf <= 0:
            raise ValueError("radius must be positive")
        a = as_fraction(alpha)
        return cls(a, Rf, exact_power(Rf, a))

    @classmethod
    def from_power(cls, r_alpha, alpha) -> "Threshold":
        v = as_fraction(r_alpha)
        if v <= 0:
            raise ValueError("R^alpha must be positive")
        return cls(as_fraction(alpha), None, v)

    def mp(self):
        if self.exact is not None:
            return mpmath.mpf(self.exact.numerator) / self.exact.denominator
        R = mpmath.mpf(self.radius.numerator) / self.radius.denominator
        return R ** _mpf(self.alpha)

    @property
    def R(self) -> float:
        if self.radius is not None:
            return float(self.radius)
        return self.value ** (1.0 / float(self.alpha))


def _mpf(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


class Exponents:
    """Exact copies of (alpha/2, beta, A) used by the comparators."""

    __slots__ = ("half_alpha", "beta", "A", "f_half_alpha", "f_beta", "f_A")

    def __init__(self, alpha, beta, A):
        self.half_alpha = as_fraction(alpha) / 2
        self.beta = as_fraction(beta)
        self.A = as_fraction(A)
        self.f_half_alpha = float(self.half_alpha)
        self.f_beta = float(self.beta)
        self.f_A = float(self.A)


def _exact_lhs(ex: Exponents, n2: int, t: int) -> Fraction | None:
    a = exact_power(Fraction(n2), ex.half_alpha)
    if a is None:
        return None
    b = exact_power(Fraction(abs(t)), ex.beta)
    if b is None:
        return None
    return a + ex.A * b


def le(ex: Exponents, n2: int, t: int, thr: Threshold) -> bool:
    """Certified ``n2^(alpha/2) + A|t|^beta <= R^alpha``.  Ties count as inside."""
    n2, t = int(n2), abs(int(t))
    if thr.exact is not None:
        lhs = _exact_lhs(ex, n2, t)
        if lhs is not None:
            return lhs <= thr.exact
    a = float(n2) ** ex.f_half_alpha
    b = ex.f_A * float(t) ** ex.f_beta
    diff = a + b - thr.value
    if abs(diff) > BAND_ULPS * EPS * (a + b + thr.value) + 1e-300:
        return diff <= 0
    return _le_escalate(ex, n2, t, thr)


def _le_escalate(ex: Exponents, n2: int, t: int, thr: Threshold) -> bool:
    for dps in _MP_LEVELS:
        with mpmath.workdps(dps):
            a = mpmath.mpf(n2) ** _mpf(ex.half_alpha)
            b = _mpf(ex.A) * mpmath.mpf(t) ** _mpf(ex.beta)
            c = thr.mp()
            diff = a + b - c
            scale = abs(a) + abs(b) + abs(c)
            if abs(diff) > scale * mpmath.mpf(10) ** (8 - dps):
                return bool(diff <= 0)
    # agreement to ~110 digits: settle by exact arithmetic or refuse
    lhs = _exact_lhs(ex, n2, t)
    rhs = thr.exact
    if rhs is None and thr.radius is not None:
        rhs = exact_power(thr.radius, thr.alpha)
    if lhs is not None and rhs is not None:
        return lhs <= rhs
    raise ExactnessError(
        f"cannot certify n2={n2}, t={t} against R^alpha={thr.value!r}"
    )


def le_array(ex: Exponents, n2: np.ndarray, t: np.ndarray, thr: Threshold) -> np.ndarray:
    """Vectorised :func:`le`; only points inside the float error band are
    re-decided one by one."""
    n2 = np.asarray(n2)
    t = np.abs(np.asarray(t))
    n2, t = np.broadcast_arrays(n2, t)
    a = n2.astype(float) ** ex.f_half_alpha
    b = ex.f_A * t.astype(float) ** ex.f_beta
    diff = a + b - thr.value
    band = BAND_ULPS * EPS * (a + b + thr.value)
    out = diff <= 0
    unsure = np.abs(diff) <= band
    if thr.exact is not None and np.any(unsure):
        idx = np.flatnonzero(unsure)
        for i in idx:
            out.flat[i] = le(ex, int(n2.flat[i]), int(t.flat[i]), thr)
    elif np.any(unsure):
        for i in np.flatnonzero(unsure):
            out.flat[i] = _le_escalate(ex, int(n2.flat[i]), int(t.flat[i]), thr)
    return out


def max_n2(ex: Exponents, t: int, thr: Threshold, guess: int | None = None) -> int:
    """Largest integer n2 >= 0 with ``n2^(alpha/2) + A|t|^beta <= R^alpha``,
    or -1 if even n2 = 0 fails."""
    if not le(ex, 0, t, thr):
        return -1
    if guess is None:
        v = thr.value - ex.f_A * float(abs(t)) ** ex.f_beta
        guess = int(math.floor(max(v, 0.0) ** (1.0 / ex.f_half_alpha)))
    n = max(guess, 0)
    while n > 0 and not le(ex, n, t, thr):
        n -= 1
    while le(ex, n + 1, t, thr):
        n += 1
    return n


def max_t(ex: Exponents, n2: int, thr: Threshold) -> int:
    """Largest integer t >= 0 with ``n2^(alpha/2) + A t^beta <= R^alpha``, or -1."""
    if not le(ex, n2, 0, thr):
        return -1
    v = thr.value - float(n2) ** ex.f_half_alpha
    t = int(math.floor(max(v / ex.f_A, 0.0) ** (1.0 / ex.f_beta)))
    while t > 0 and not le(ex, n2, t, thr):
        t -= 1
    while le(ex, n2, t + 1, thr):
        t += 1
    return t


def max_n2_array(ex: Exponents, t: np.ndarray, thr: Threshold) -> np.ndarray:
    """Vectorised :func:`max_n2` over slices ``t`` (all assumed non-empty)."""
    t = np.abs(np.asarray(t, dtype=np.int64))
    tb = ex.f_A * t.astype(float) ** ex.f_beta
    v = np.maximum(thr.value - tb, 0.0)
    n0 = np.floor(v ** (1.0 / ex.f_half_alpha)).astype(np.int64)
    n0 = np.maximum(n0, 0)
    ok_lo = le_array(ex, n0, t, thr)
    ok_hi = ~le_array(ex, n0 + 1, t, thr)
    bad = ~(ok_lo & ok_hi)
    if np.any(bad):
        for i in np.flatnonzero(bad):
            n0[i] = max_n2(ex, int(t[i]), thr, guess=int(n0[i]))
    return n0
