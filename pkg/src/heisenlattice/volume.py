"""Volumes of the unit bodies and their dilates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import BodySpec
from .quadrature import QuadratureError, graded_breaks, integrate


@dataclass(frozen=True)
class VolumeReport:
    unit_volume: float
    scaled_volume: float
    method: str


def ball_volume_2d(d: int) -> float:
    """Volume of the Euclidean unit ball in R^(2d): pi^d / d!."""
    return math.pi ** d / math.factorial(d)


def _beta_fn(a: float, b: float) -> float:
    if a + b < 170:
        return math.gamma(a) * math.gamma(b) / math.gamma(a + b)
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def unit_volume_closed(spec: BodySpec) -> float:
    """``A_2d * (2/beta) * A^(-1/beta) * B(1/beta, 2d/alpha + 1)``."""
    b = spec.beta
    return (ball_volume_2d(spec.d) * (2.0 / b) * spec.A ** (-1.0 / b)
            * _beta_fn(1.0 / b, 2.0 * spec.d / spec.alpha + 1.0))


def unit_volume_quadrature(spec: BodySpec, tol: float = 1e-10) -> float:
    r"""Slab integral ``2 A_2d \int_0^T (1 - A t^beta)^(2d/alpha) dt``.

    Computed after the substitution ``u = A t^beta``, which turns it into
    ``\int_0^1 u^(1/beta - 1) (1 - u)^(2d/alpha) du``.  On [0, 1/2] the power
    ``u^(1/beta - 1)`` is absorbed by ``v = u^(1/beta)``; the right endpoint
    is resolved by geometric grading.
    """
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-12, 1e-4]")
    b = spec.beta
    g = 2.0 * spec.d / spec.alpha

    def left(v):
        return b * (1.0 - v ** b) ** g

    def right(u):
        return u ** (1.0 / b - 1.0) * (1.0 - u) ** g

    scale = 2.0 * ball_volume_2d(spec.d) / (b * spec.A ** (1.0 / b))
    v1, e1 = integrate(left, graded_breaks(0.0, 0.5 ** (1.0 / b), left=True), n=16)
    v2, e2 = integrate(right, graded_breaks(0.5, 1.0, right=True), n=16)
    val, err = v1 + v2, e1 + e2
    if err * scale > tol:
        raise QuadratureError(f"volume quadrature did not reach {tol:g} (estimate {err * scale:.3g})")
    return float(val * scale)


def ball_volume(spec: BodySpec, R: float) -> float:
    if not R > 0:
        raise ValueError("R must be positive")
    return float(R) ** spec.volume_dim * unit_volume_closed(spec)


def volume_report(spec: BodySpec, R: float = 1.0, method: str = "closed_form") -> VolumeReport:
    if method == "closed_form":
        u = unit_volume_closed(spec)
    elif method == "quadrature":
        u = unit_volume_quadrature(spec)
    else:
        raise ValueError(f"unknown method {method!r}")
    return VolumeReport(u, float(R) ** spec.volume_dim * u, method)


def error_term(spec: BodySpec, R: float, table):
    """Exact count minus volume at radius ``R``."""
    from .counting import CountResult, count_sliced

    return CountResult.make(R, count_sliced(spec, R, table), ball_volume(spec, R))


def volume_scaling_residual(spec: BodySpec, R: float) -> float:
    return abs(ball_volume(spec, R) - float(R) ** spec.volume_dim * ball_volume(spec, 1.0))

