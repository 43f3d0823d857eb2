"""Fourier transform of the unit-body indicator and its decay along rays.

Convention: ``f^(w, s) = \\int exp(-2 pi i (<z, w> + t s)) f(z, t) dz dt``.
The transform of the body is real and depends on ``w`` only through
``|w|``; integrating the t-slab and the z-sphere analytically leaves a
one-dimensional radial integral

    chi^(w, s) = \\int_0^1 K(|w|, r) sin(2 pi s h(r)) / (pi s) dr,

with ``K(w, r) = 2 pi w^(1-d) r^d J_{d-1}(2 pi w r)`` (the surface-integrated
character) and ``h(r) = ((1 - r^alpha)/A)^(1/beta)`` the slab half-thickness.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .bessel import bessel_ratio
from .estimators import PowerLawEnvelope
from .geometry import BodySpec
from .quadrature import QuadratureError, graded_breaks, integrate, refine
from .volume import ball_volume_2d, unit_volume_closed

# quarter of a cycle per panel
MAX_PHASE_STEP = 0.25
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class FreqSample:
    wmag: float
    s: float
    value: float

    @property
    def radius(self) -> float:
        return math.hypot(self.wmag, self.s)


@dataclass(frozen=True)
class FitResult:
    exponent: float
    log_constant: float
    max_residual: float
    window: tuple


def _radial_kernel(d: int, w: float, r: np.ndarray) -> np.ndarray:
    # 2 pi w^(1-d) r^d J_{d-1}(2 pi w r), written without the w^(1-d) blow-up
    return (2 * math.pi) ** d * r ** (2 * d - 1) * bessel_ratio(d - 1, 2 * math.pi * w * r)


def half_thickness(spec: BodySpec, r):
    return (np.clip(1.0 - np.asarray(r) ** spec.alpha, 0.0, None) / spec.A) ** (1.0 / spec.beta)


def _sin_ratio(s: float, h: np.ndarray) -> np.ndarray:
    """``sin(2 pi s h) / (pi s)``, by series when ``|2 pi s h| < 1e-4``."""
    x = 2 * math.pi * s * h
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    x2 = x[small] ** 2
    out[small] = 2 * h[small] * (1 - x2 / 6 + x2 * x2 / 120)
    big = ~small
    out[big] = np.sin(x[big]) / (math.pi * s)
    return out


def _check(val, err, tol, what):
    if err > tol * max(1.0, abs(val)):
        raise QuadratureError(f"{what}: error estimate {err:.3g} above {tol:g}")
    return float(val)


def ft_axis(spec: BodySpec, s: float, tol: float = DEFAULT_TOL) -> float:
    """Transform on the t-axis (``w = 0``): a 1-D cosine transform of the
    slice volume ``A_2d (1 - A|t|^beta)^(2d/alpha)``."""
    s = abs(float(s))
    if s == 0:
        return unit_volume_closed(spec)
    T = spec.t_extent
    g = 2.0 * spec.d / spec.alpha
    c = 2.0 * ball_volume_2d(spec.d)

    def f(t):
        return c * np.cos(2 * math.pi * s * t) * np.clip(1.0 - spec.A * t ** spec.beta, 0, None) ** g

    br = refine(graded_breaks(0.0, T, left=True, right=True), lambda t: s * t, MAX_PHASE_STEP)
    val, err = integrate(f, br, n=10)
    return _check(val, err, tol, "ft_axis")


def ft_hyperplane(spec: BodySpec, wmag: float, tol: float = DEFAULT_TOL) -> float:
    """Transform on the hyperplane ``s = 0``."""
    w = abs(float(wmag))
    if w == 0:
        return unit_volume_closed(spec)
    d = spec.d

    def f(r):
        return _radial_kernel(d, w, r) * 2.0 * half_thickness(spec, r)

    br = refine(graded_breaks(0.0, 1.0, right=True), lambda r: w * r, MAX_PHASE_STEP)
    val, err = integrate(f, br, n=10)
    return _check(val, err, tol, "ft_hyperplane")


def ft_general(spec: BodySpec, wmag: float, s: float, tol: float = DEFAULT_TOL) -> float:
    """Transform at a generic frequency ``(|w|, s)``."""
    w, s = abs(float(wmag)), abs(float(s))
    if s == 0:
        return ft_hyperplane(spec, w, tol)
    if w == 0:
        return ft_axis(spec, s, tol)
    d = spec.d
    h0 = float(half_thickness(spec, 0.0))

    def f(r):
        return _radial_kernel(d, w, r) * _sin_ratio(s, half_thickness(spec, r))

    def phase(r):
        return w * r + s * (h0 - half_thickness(spec, r))

    br = refine(graded_breaks(0.0, 1.0, right=True), phase, MAX_PHASE_STEP)
    val, err = integrate(f, br, n=10)
    return _check(val, err, tol, "ft_general")


def ft_scaled(spec: BodySpec, R: float, wmag: float, s: float) -> float:
    """Transform of the dilate ``B_R`` at ``(w, s)``: ``R^(2d+q) chi^(R w, R^q s)``."""
    return R ** spec.volume_dim * ft_general(spec, R * wmag, R ** spec.q * s)


def scaling_identity_residual(spec: BodySpec, wmag: float, s: float) -> float:
    """``|chi^_A(w, s) - A^(-1/beta) chi^_1(w, A^(-1/beta) s)|``."""
    c = spec.A ** (-1.0 / spec.beta)
    unit = BodySpec(spec.d, spec.alpha, spec.beta, 1.0)
    left = ft_general(spec, wmag, s)
    right = c * ft_general(unit, wmag, c * s)
    return abs(left - right)


# -- closed forms used as oracles ---------------------------------------------

def hyperplane_alpha2_closed(d: int, A: float, wmag):
    """Bessel closed form of the alpha = 2 hyperplane transform."""
    from .bessel import bessel_j

    w = np.asarray(wmag, dtype=float)
    return (2.0 / (math.pi * A)) * bessel_j(d + 1, 2 * math.pi * w) / w ** (d + 1)


def axis_alpha4_closed(s):
    """Semicircle transform: the d = 1, alpha = 4, A = 1 axis value."""
    from .bessel import bessel_j

    s = np.asarray(s, dtype=float)
    return math.pi * bessel_j(1, 2 * math.pi * s) / (2 * s)


# -- oscillatory integrals with an endpoint singularity ------------------------

def _vectorize(g: Callable) -> Callable:
    def gv(t):
        try:
            out = np.asarray(g(t), dtype=float)
            if out.shape == np.shape(t):
                return out
            return np.broadcast_to(out, np.shape(t))
        except (TypeError, ValueError):
            return np.vectorize(g, otypes=[float])(t)
    return gv


def oscillatory_singular(lam: float, a: float, b: float, s: float,
                         g: Callable | None = None, tol: float = 1e-10) -> complex:
    """``\\int_a^b exp(-i s t) (t - a)^(lam - 1) g(t) dt``.

    ``g`` should be differentiable with integrable derivative (the integral is
    then ``O(|s|^-lam)``).  The substitution ``t = a + v^(1/lam)`` absorbs the
    endpoint singularity.
    """
    if not 0 < lam <= 1:
        raise ValueError("lam must lie in (0, 1]")
    if not a < b:
        raise ValueError("need a < b")
    gv = _vectorize(g) if g is not None else (lambda t: np.ones_like(t))
    p = 1.0 / lam
    V = (b - a) ** lam

    def f(v):
        t = a + v ** p
        return p * np.exp(-1j * s * t) * gv(t)

    br = refine(graded_breaks(0.0, V, left=True), lambda v: abs(s) * v ** p / (2 * math.pi), MAX_PHASE_STEP)
    val, err = integrate(f, br, n=10)
    if err > tol * max(1.0, abs(val)):
        raise QuadratureError(f"oscillatory_singular: error estimate {err:.3g}")
    return complex(val)


def oscillatory_decay_fit(lam: float, a: float, b: float, g: Callable | None = None,
                          window=(8.0, 512.0), per_octave: int = 24):
    """Fit the decay of :func:`oscillatory_singular` in ``s``.

    Returns ``(fit, ok)`` where ``ok`` means the fitted exponent is at least
    ``lam - 0.1``.
    """
    s = geometric_grid(window[0], window[1], per_octave)
    vals = [abs(oscillatory_singular(lam, a, b, x, g)) for x in s]
    fit = fit_decay([FreqSample(0.0, x, v) for x, v in zip(s, vals)], window)
    return fit, fit.exponent >= lam - 0.1


# -- sampling and fitting -----------------------------------------------------

def geometric_grid(lo: float, hi: float, per_octave: int) -> np.ndarray:
    n = int(round(per_octave * math.log2(hi / lo)))
    return lo * (hi / lo) ** (np.arange(n + 1) / n)


def sample_ray(spec: BodySpec, direction: tuple, xs: Iterable[float]) -> list[FreqSample]:
    """FT samples at ``(x * direction[0], x * direction[1])``."""
    cw, cs = direction
    out = []
    for x in xs:
        w, s = x * cw, x * cs
        out.append(FreqSample(w, s, ft_general(spec, w, s)))
    return out


def fit_decay(samples: Sequence[FreqSample], log_window) -> FitResult:
    """Envelope decay exponent along one ray (abscissa ``|(w, s)|``)."""
    if len(samples) < 8:
        raise ValueError("need at least 8 samples")
    x = np.array([smp.radius for smp in samples])
    y = np.array([smp.value for smp in samples])
    est = PowerLawEnvelope(window_ratio=2.0, x_min=log_window[0], x_max=log_window[1]).fit(x, y)
    return FitResult(-est.slope_, est.intercept_, est.max_residual_,
                     (float(log_window[0]), float(log_window[1])))


def predicted_decay_exponent(spec: BodySpec, regime: str) -> float:
    """Predicted decay rate on the axis / hyperplane for ``alpha > 2``."""
    d, a = spec.d, spec.alpha
    heis = spec.is_heisenberg
    if regime == "axis":
        if heis:
            if a % 4 == 0:
                return 1 + 2 * d / a
            return 1 + min(2 * d / a, a / 2)
        if a % 2 == 0:
            return 1 + 2 * d / a
        return 1 + min(2 * d / a, a)
    if regime == "hyperplane":
        c = 2 / a if heis else 1 / a
        return 2 * d if c > d - 0.5 else d + 0.5 + c
    raise ValueError(f"unknown regime {regime!r}")


def write_samples_csv(samples: Iterable[FreqSample], path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["wmag", "s", "value"])
        for smp in samples:
            wr.writerow([f"{smp.wmag:.17g}", f"{smp.s:.17g}", f"{smp.value:.17g}"])


def read_samples_csv(path) -> list[FreqSample]:
    with open(path, newline="") as fh:
        return [FreqSample(float(r["wmag"]), float(r["s"]), float(r["value"]))
                for r in csv.DictReader(fh)]
