"""Norm family, dilations, exact membership and the shape probes.

The bodies are ``{(z, t) : |z|^alpha + A|t|^beta <= 1}`` in ``R^(2d+1)``.
``beta = alpha/2`` is the Heisenberg norm ball, ``beta = alpha`` the
Euclidean-dilation comparison body.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _exact
from ._exact import Exponents, Threshold


@dataclass(frozen=True)
class BodySpec:
    d: int
    alpha: float
    beta: float
    A: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if not (self.alpha > 0 and self.beta > 0 and self.A > 0):
            raise ValueError("alpha, beta and A must be positive")
        object.__setattr__(self, "d", int(self.d))

    @classmethod
    def heisenberg(cls, d: int, alpha: float, A: float = 1.0) -> "BodySpec":
        return cls(d, alpha, alpha / 2, A)

    @classmethod
    def euclidean(cls, d: int, alpha: float) -> "BodySpec":
        return cls(d, alpha, alpha, 1.0)

    @property
    def q(self) -> float:
        """Weight of the t-axis under the dilations (2 Heisenberg, 1 Euclidean)."""
        return self.alpha / self.beta

    @property
    def family(self) -> str:
        if self.beta * 2 == self.alpha:
            return "heisenberg"
        if self.beta == self.alpha and self.A == 1:
            return "euclidean"
        return "general"

    @property
    def is_heisenberg(self) -> bool:
        return self.beta * 2 == self.alpha

    @property
    def volume_dim(self) -> float:
        return 2 * self.d + self.q

    @property
    def dim(self) -> int:
        return 2 * self.d + 1

    @property
    def t_extent(self) -> float:
        """Largest |t| in the unit body."""
        return self.A ** (-1.0 / self.beta)

    @cached_property
    def exponents(self) -> Exponents:
        return Exponents(self.alpha, self.beta, self.A)

    def threshold(self, R) -> Threshold:
        return Threshold.from_radius(R, self.alpha)


@dataclass(frozen=True)
class Point:
    z: tuple
    t: float

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(float(x) for x in self.z))
        object.__setattr__(self, "t", float(self.t))

    def __add__(self, other: "Point") -> "Point":
        if len(self.z) != len(other.z):
            raise ValueError("dimension mismatch")
        return Point(tuple(a + b for a, b in zip(self.z, other.z)), self.t + other.t)

    def __neg__(self) -> "Point":
        return Point(tuple(-a for a in self.z), -self.t)


@dataclass(frozen=True)
class LatticePoint:
    z: tuple
    t: int

    def __post_init__(self):
        zs = tuple(int(x) for x in self.z)
        if any(a != b for a, b in zip(zs, self.z)) or int(self.t) != self.t:
            raise ValueError("lattice point coordinates must be integers")
        object.__setattr__(self, "z", zs)
        object.__setattr__(self, "t", int(self.t))

    @property
    def n2(self) -> int:
        return sum(x * x for x in self.z)

    def to_point(self) -> Point:
        return Point(self.z, self.t)


def _check_dim(spec: BodySpec, z: Sequence) -> None:
    if len(z) != 2 * spec.d:
        raise ValueError(f"point has {len(z)} z-coordinates, expected {2 * spec.d}")


def norm_value(spec: BodySpec, p: Point) -> float:
    _check_dim(spec, p.z)
    zz = float(np.sqrt(np.dot(p.z, p.z)))
    return float((zz ** spec.alpha + spec.A * abs(p.t) ** spec.beta) ** (1.0 / spec.alpha))


def norm_array(spec: BodySpec, zmag, t) -> np.ndarray:
    """Vectorised norm from |z| and t."""
    zmag = np.asarray(zmag, dtype=float)
    t = np.asarray(t, dtype=float)
    return (zmag ** spec.alpha + spec.A * np.abs(t) ** spec.beta) ** (1.0 / spec.alpha)


def dilate(spec: BodySpec, p: Point, a: float) -> Point:
    if not a > 0:
        raise ValueError("dilation factor must be positive")
    _check_dim(spec, p.z)
    return Point(tuple(a * x for x in p.z), a ** spec.q * p.t)


def is_member(spec: BodySpec, R, p: LatticePoint) -> bool:
    """Closed-ball membership of a lattice point, decided exactly (ties are inside)."""
    if not isinstance(p, LatticePoint):
        p = LatticePoint(p.z, p.t)
    _check_dim(spec, p.z)
    return _exact.le(spec.exponents, p.n2, p.t, spec.threshold(R))


# -- convexity ----------------------------------------------------------------

@dataclass(frozen=True)
class ConvexityWitness:
    p: Point
    p2: Point
    lam: float
    combined_norm: float


@dataclass(frozen=True)
class ConvexityReport:
    status: str  # "witness", "convex" or "not-found"
    witness: ConvexityWitness | None = None
    trials: int = 0
    max_norm: float = field(default=0.0)


def _quarter_plane_witness(spec: BodySpec, tol: float) -> ConvexityWitness | None:
    """Deterministic search inside the (|z|, t) quarter plane.

    The boundary ``t = b(a)`` of the quarter-plane section is convex near
    ``a = 1`` when alpha < 2, so chords between ``(1, 0)`` and nearby boundary
    points leave the body.
    """
    tmax = spec.t_extent
    a2 = 1.0 - np.geomspace(1e-6, 0.999, 400)
    b2 = tmax * (1.0 - a2 ** spec.alpha) ** (1.0 / spec.beta)
    lam = np.linspace(0.02, 0.98, 49)[:, None]
    a = lam * 1.0 + (1 - lam) * a2
    b = (1 - lam) * b2
    val = a ** spec.alpha + spec.A * b ** spec.beta
    i, j = np.unravel_index(np.argmax(val), val.shape)
    n = float(val[i, j] ** (1.0 / spec.alpha))
    if n <= 1.0 + tol:
        return None
    z1 = (1.0,) + (0.0,) * (2 * spec.d - 1)
    z2 = (float(a2[j]),) + (0.0,) * (2 * spec.d - 1)
    return ConvexityWitness(Point(z1, 0.0), Point(z2, float(b2[j])), float(lam[i, 0]), n)


def _boundary_samples(spec: BodySpec, rng: np.random.Generator, n: int):
    z = rng.standard_normal((n, 2 * spec.d))
    t = rng.standard_normal(n)
    nv = norm_array(spec, np.linalg.norm(z, axis=1), t)
    # dilate onto the unit sphere of the norm
    z = z / nv[:, None]
    t = t / nv ** spec.q
    return z, t


def convexity_probe(spec: BodySpec, trials: int = 10_000, rng_seed: int = 0,
                    tol: float = 1e-12) -> ConvexityReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if spec.alpha < 2:
        w = _quarter_plane_witness(spec, tol)
        if w is not None:
            return ConvexityReport("witness", w, 0, w.combined_norm)
    rng = np.random.default_rng(rng_seed)
    best = 0.0
    done = 0
    chunk = 20_000
    while done < trials:
        n = min(chunk, trials - done)
        z1, t1 = _boundary_samples(spec, rng, n)
        z2, t2 = _boundary_samples(spec, rng, n)
        lam = rng.uniform(0.0, 1.0, n)
        zc = lam[:, None] * z1 + (1 - lam)[:, None] * z2
        tc = lam * t1 + (1 - lam) * t2
        nc = norm_array(spec, np.linalg.norm(zc, axis=1), tc)
        k = int(np.argmax(nc))
        best = max(best, float(nc[k]))
        if nc[k] > 1.0 + tol:
            w = ConvexityWitness(Point(z1[k], t1[k]), Point(z2[k], t2[k]), float(lam[k]), float(nc[k]))
            return ConvexityReport("witness", w, done + k + 1, best)
        done += n
    status = "convex" if spec.alpha >= 2 else "not-found"
    return ConvexityReport(status, None, done, best)


def subadditivity_margin(spec: BodySpec, p: Point, p2: Point) -> float:
    """``N(p) + N(p2) - N(p + p2)`` (Euclidean addition)."""
    return norm_value(spec, p) + norm_value(spec, p2) - norm_value(spec, p + p2)


def subadditivity_margins(spec: BodySpec, n: int, rng_seed: int = 0) -> np.ndarray:
    """Margins on ``n`` seeded random pairs of points of mixed scales."""
    rng = np.random.default_rng(rng_seed)
    scale = np.exp(rng.uniform(-4, 4, (2, n)))
    z = rng.standard_normal((2, n, 2 * spec.d)) * scale[..., None]
    t = rng.standard_normal((2, n)) * scale ** spec.q
    n1 = norm_array(spec, np.linalg.norm(z[0], axis=1), t[0])
    n2 = norm_array(spec, np.linalg.norm(z[1], axis=1), t[1])
    n12 = norm_array(spec, np.linalg.norm(z[0] + z[1], axis=1), t[0] + t[1])
    return n1 + n2 - n12


# -- curvature probes ---------------------------------------------------------

_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFF = np.array([-2, -1, 0, 1, 2])


def _fd_hessian(f, n: int, step: float) -> np.ndarray:
    """Five-point central-difference Hessian of ``f`` at the origin of R^n."""
    H = np.zeros((n, n))
    e = np.eye(n) * step
    for i in range(n):
        H[i, i] = sum(c * f(k * e[i]) for c, k in zip(_D2, _OFF) if c) / step ** 2
        for j in range(i + 1, n):
            acc = 0.0
            for ci, ki in zip(_D1, _OFF):
                if not ci:
                    continue
                for cj, kj in zip(_D1, _OFF):
                    if cj:
                        acc += ci * cj * f(ki * e[i] + kj * e[j])
            H[i, j] = H[j, i] = acc / step ** 2
    return H


def _check_curvature_args(spec: BodySpec, step: float) -> None:
    if spec.alpha <= 2:
        raise ValueError("curvature probes need alpha > 2")
    if not 0 < step <= 0.1:
        raise ValueError("step must lie in (0, 0.1]")


def pole_hessian(spec: BodySpec, step: float = 1e-2) -> np.ndarray:
    """Hessian of the boundary graph at the pole ``t = -t_max``."""
    _check_curvature_args(spec, step)
    c = spec.A ** (-1.0 / spec.beta)
    a, ib = spec.alpha, 1.0 / spec.beta

    def phi(X):
        r = float(np.sqrt(X @ X))
        return c * (1.0 - (1.0 - r ** a) ** ib)

    return _fd_hessian(phi, 2 * spec.d, step)


def equator_hessian(spec: BodySpec, step: float = 1e-2) -> np.ndarray:
    """Hessian of ``X1 = psi(X2..X2d, t)`` at the equator point ``z = e1, t = 0``.

    The last row/column is the t-direction.
    """
    _check_curvature_args(spec, step)
    a, b, A = spec.alpha, spec.beta, spec.A

    def psi(Y):
        X, t = Y[:-1], Y[-1]
        return 1.0 - ((1.0 - A * abs(t) ** b) ** (2.0 / a) - float(X @ X)) ** 0.5

    return _fd_hessian(psi, 2 * spec.d, step)


def hessian_sweep(spec: BodySpec, kind: str = "pole", steps=(1e-1, 1e-2, 1e-3)) -> dict:
    fn = {"pole": pole_hessian, "equator": equator_hessian}[kind]
    return {h: fn(spec, h) for h in steps}
