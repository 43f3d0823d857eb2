"""Smooth bumps adapted to the dilations, convolution sandwiches, and a
truncated Poisson-summation estimate of smoothed lattice sums."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from . import _exact
from .bessel import bessel_ratio
from .counting import BudgetExceeded, count_sliced, get_slice_table, r_table, required_nmax
from .geometry import BodySpec, Point, norm_array
from .quadrature import QuadratureError, gauss_legendre, integrate, refine
from .spectral import ft_general
from .volume import ball_volume

FT_GRID_MAX = 96.0
FT_GRID_POINTS = 1200
MAX_SMOOTH_R = 32.0
MAX_POISSON_K = 32


def bump(u):
    """``exp(-1/(1-u^2))`` on ``|u| < 1``, zero elsewhere."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    out[m] = np.exp(-1.0 / (1.0 - u[m] ** 2))
    return out


def _sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def _bump_moment(k: int) -> float:
    """``\\int_0^1 bump(u) u^k du`` to near machine precision."""
    br = np.linspace(0.0, 1.0, 33)
    val, err = integrate(lambda u: bump(u) * u ** k, br, n=24)
    if err > 1e-15:
        raise QuadratureError("bump moment did not converge")
    return float(val)


@dataclass
class Mollifier:
    """``rho(z, t) = normalization * bump(|z|/z_r) * bump(|t|/t_r)``."""

    spec: BodySpec
    z_support_radius: float
    t_support_radius: float
    normalization: float
    z_mass: float
    t_mass: float
    ft_grid: dict = field(default_factory=dict, repr=False)

    # the two normalised factors: zeta on R^2d (radial), tau on R
    def zeta(self, r):
        return bump(np.asarray(r) / self.z_support_radius) / self.z_mass

    def tau(self, t):
        return bump(np.asarray(t) / self.t_support_radius) / self.t_mass


def make_mollifier(spec: BodySpec) -> Mollifier:
    d = spec.d
    zr = 0.5 ** (1.0 / spec.alpha)
    tr = (0.5 / spec.A) ** (1.0 / spec.beta)
    zm = _sphere_area(2 * d) * zr ** (2 * d) * _bump_moment(2 * d - 1)
    tm = 2 * tr * _bump_moment(0)
    return Mollifier(spec, zr, tr, 1.0 / (zm * tm), zm, tm)


def mollifier_value(m: Mollifier, p: Point) -> float:
    zmag = float(np.linalg.norm(p.z))
    return float(m.zeta(zmag) * m.tau(p.t))


def mollifier_dilate_value(m: Mollifier, eps: float, p: Point) -> float:
    """``rho_eps(z, t) = eps^-(2d+q) rho(z/eps, t/eps^q)``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    q = m.spec.q
    zmag = float(np.linalg.norm(p.z)) / eps
    return float(eps ** (-m.spec.volume_dim) * m.zeta(zmag) * m.tau(p.t / eps ** q))


def mollifier_mass(m: Mollifier, eps: float, n: int = 48) -> float:
    """Tensor Gauss quadrature of ``rho_eps`` over its support box, in polar
    form in ``z``; should be 1."""
    d, q = m.spec.d, m.spec.q
    R = eps * m.z_support_radius
    T = eps ** q * m.t_support_radius
    x, w = gauss_legendre(n)
    br_r = np.linspace(0.0, R, 9)
    br_t = np.linspace(-T, T, 17)
    rr = (0.5 * (br_r[:-1, None] + br_r[1:, None]) + 0.5 * np.diff(br_r)[:, None] * x).ravel()
    wr = (0.5 * np.diff(br_r)[:, None] * w).ravel()
    tt = (0.5 * (br_t[:-1, None] + br_t[1:, None]) + 0.5 * np.diff(br_t)[:, None] * x).ravel()
    wt = (0.5 * np.diff(br_t)[:, None] * w).ravel()
    zf = eps ** (-2 * d) * m.zeta(rr / eps) * _sphere_area(2 * d) * rr ** (2 * d - 1)
    tf = eps ** (-q) * m.tau(tt / eps ** q)
    return float((zf * wr).sum() * (tf * wt).sum())


# -- Fourier transform of the bump ------------------------------------------

def _zeta_hat_direct(m: Mollifier, w) -> np.ndarray:
    """Radial transform of the z-factor at frequencies ``w``."""
    d = m.spec.d
    w = np.atleast_1d(np.asarray(w, dtype=float))
    zr = m.z_support_radius
    out = np.empty_like(w)
    for i, wi in enumerate(w):
        br = refine(np.linspace(0.0, zr, 9), lambda r: wi * r, 0.25)
        val, err = integrate(
            lambda r: m.zeta(r) * (2 * math.pi) ** d * r ** (2 * d - 1) * bessel_ratio(d - 1, 2 * math.pi * wi * r),
            br, n=16)
        out[i] = val
    return out


def _tau_hat_direct(m: Mollifier, s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    tr = m.t_support_radius
    out = np.empty_like(s)
    for i, si in enumerate(s):
        br = refine(np.linspace(0.0, tr, 9), lambda t: si * t, 0.25)
        val, err = integrate(lambda t: 2.0 * m.tau(t) * np.cos(2 * math.pi * si * t), br, n=16)
        out[i] = val
    return out


def _grid():
    # uniform in log(1 + x) so that x = 0 is a node
    u = np.linspace(0.0, math.log1p(FT_GRID_MAX), FT_GRID_POINTS)
    return u, np.expm1(u)


def _splines(m: Mollifier):
    if "z" not in m.ft_grid:
        u, x = _grid()
        m.ft_grid["u"] = u
        m.ft_grid["z"] = CubicSpline(u, _zeta_hat_direct(m, x))
        m.ft_grid["t"] = CubicSpline(u, _tau_hat_direct(m, x))
    return m.ft_grid["z"], m.ft_grid["t"]


def zeta_hat(m: Mollifier, w, cached: bool = True) -> np.ndarray:
    w = np.abs(np.atleast_1d(np.asarray(w, dtype=float)))
    if not cached:
        return _zeta_hat_direct(m, w)
    sz, _ = _splines(m)
    out = np.empty_like(w)
    inside = w <= FT_GRID_MAX
    out[inside] = sz(np.log1p(w[inside]))
    if np.any(~inside):
        out[~inside] = _zeta_hat_direct(m, w[~inside])
    return out


def tau_hat(m: Mollifier, s, cached: bool = True) -> np.ndarray:
    s = np.abs(np.atleast_1d(np.asarray(s, dtype=float)))
    if not cached:
        return _tau_hat_direct(m, s)
    _, st = _splines(m)
    out = np.empty_like(s)
    inside = s <= FT_GRID_MAX
    out[inside] = st(np.log1p(s[inside]))
    if np.any(~inside):
        out[~inside] = _tau_hat_direct(m, s[~inside])
    return out


def mollifier_ft(m: Mollifier, eps: float, wmag: float, s: float, cached: bool = True) -> float:
    """``rho_eps^(w, s) = rho^(eps w, eps^q s)``, a product of two 1-D transforms."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    a = eps * abs(wmag)
    b = eps ** m.spec.q * abs(s)
    return float(zeta_hat(m, a, cached)[0] * tau_hat(m, b, cached)[0])


def mollifier_ft_mp(m: Mollifier, wmag: float, s: float, dps: int = 60, nodes: int = 3) -> float:
    """High-precision ``rho^(w, s)`` (no dilation) with mpmath.

    Used to follow the super-polynomial decay below the double-precision
    noise floor.  ``nodes`` is the mpmath Gauss-Legendre degree (panel rule of
    ``3 * 2^(nodes-1)`` points).
    """
    import mpmath

    with mpmath.workdps(dps):
        gl = mpmath.calculus.quadrature.GaussLegendre(mpmath.mp)
        rule = gl.calc_nodes(nodes, mpmath.mp.prec)
        d = m.spec.d

        def panel_sum(f, a, b):
            half = (b - a) / 2
            mid = (a + b) / 2
            return half * mpmath.fsum(wk * f(mid + half * xk) for xk, wk in rule)

        def g(u):
            return mpmath.exp(-1 / (1 - u * u)) if abs(u) < 1 else mpmath.mpf(0)

        def breaks(L, freq):
            # panels of at most a quarter cycle
            n = max(64, int(math.ceil(4 * freq * L)) + 1)
            return [mpmath.mpf(L) * k / n for k in range(n + 1)]

        zr = mpmath.mpf(m.z_support_radius)
        tr = mpmath.mpf(m.t_support_radius)
        w = mpmath.mpf(abs(wmag))
        s_ = mpmath.mpf(abs(s))
        zm = mpmath.mpf(m.z_mass)
        tm = mpmath.mpf(m.t_mass)
        two_pi = 2 * mpmath.pi

        if w == 0:
            zh = mpmath.mpf(1)
        else:
            def fz(r):
                x = two_pi * w * r
                return g(r / zr) * two_pi ** d * r ** (2 * d - 1) * mpmath.besselj(d - 1, x) / x ** (d - 1)

            pts = breaks(float(zr), float(w))
            zh = mpmath.fsum(panel_sum(fz, a, b) for a, b in zip(pts[:-1], pts[1:])) / zm
        if s_ == 0:
            th = mpmath.mpf(1)
        else:
            def ft(t):
                return 2 * g(t / tr) * mpmath.cos(two_pi * s_ * t)

            pts = breaks(float(tr), float(s_))
            th = mpmath.fsum(panel_sum(ft, a, b) for a, b in zip(pts[:-1], pts[1:])) / tm
        return float(zh * th)


# -- convolution of the body indicator with rho_eps --------------------------

class _TCdf:
    """CDF of the normalised t-factor, as a cubic Hermite table."""

    def __init__(self, m: Mollifier, n: int = 4097):
        tr = m.t_support_radius
        x = np.linspace(-tr, tr, n)
        gx, gw = gauss_legendre(12)
        lo, hi = x[:-1, None], x[1:, None]
        nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gx
        parts = (m.tau(nodes) * (0.5 * (hi - lo)) * gw).sum(axis=1)
        F = np.concatenate([[0.0], np.cumsum(parts)])
        F /= F[-1]
        self.tr = tr
        self.spline = CubicHermiteSpline(x, F, m.tau(x))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= self.tr, 1.0, 0.0)
        inside = np.abs(x) < self.tr
        out[inside] = self.spline(x[inside])
        return out


@dataclass
class _ShellRule:
    sub: int = 6
    nr: int = 32
    nphi: int = 128


def _cdf_for(m: Mollifier) -> _TCdf:
    if "cdf" not in m.ft_grid:
        m.ft_grid["cdf"] = _TCdf(m)
    return m.ft_grid["cdf"]


def convolved_indicator(spec: BodySpec, R: float, m: Mollifier, eps: float,
                        zmag, t, rule: _ShellRule | None = None) -> np.ndarray:
    """``(chi_{B_R} * rho_eps)(p)`` for points with ``|z| = zmag`` and height ``t``.

    The t-integral is exact through the CDF of the t-factor.  The z-integral
    is done in polar coordinates about the origin: the radius is integrated
    by Gauss rules, with the substitution ``r = R - v^beta`` absorbing the
    boundary singularity of the slab thickness; the angle to ``p_z`` by the
    trapezoid rule, which is spectrally accurate for the bump.
    """
    rule = rule or _ShellRule()
    d, q = spec.d, spec.q
    P = np.atleast_1d(np.asarray(zmag, dtype=float))
    T = np.atleast_1d(np.asarray(t, dtype=float))
    P, T = np.broadcast_arrays(P, T)
    E = eps * m.z_support_radius
    cdf = _cdf_for(m)
    out = np.zeros(P.shape)
    sph = _sphere_area(2 * d - 1) if d > 1 else 2.0

    gx, gw = gauss_legendre(rule.nr)
    k = max(spec.beta, 1.0)
    jp = (np.arange(rule.nphi) + 0.5) / rule.nphi * 2 - 1  # midpoints on (-1, 1)

    for i in range(P.size):
        p, pt = P.flat[i], T.flat[i]
        r_lo = max(0.0, p - E)
        r_hi = min(R, p + E)
        if r_hi <= r_lo:
            continue
        # Break the radius where the integrand stops being analytic: the ends
        # of the bump, the radius where its angular range becomes the whole
        # circle, and the radii where the slab edge p_t +- h(r) crosses the
        # support of the t-factor.  Work in v with r = R - v^k.
        Tq = eps ** q * m.t_support_radius
        cuts = [r_lo, r_hi, abs(E - p)]
        for c in (Tq - pt, -Tq - pt, pt - Tq, pt + Tq):
            if c > 0:
                rr = R ** spec.alpha - spec.A * c ** spec.beta
                if rr > 0:
                    cuts.append(rr ** (1 / spec.alpha))
        cuts = np.unique([c for c in cuts if r_lo <= c <= r_hi])
        vb = np.sort((R - cuts).clip(0) ** (1 / k))
        br = np.unique(np.concatenate([np.linspace(a_, b_, rule.sub + 1) for a_, b_ in zip(vb[:-1], vb[1:])]))
        lo, hi = br[:-1, None], br[1:, None]
        v = (0.5 * (lo + hi) + 0.5 * (hi - lo) * gx).ravel()
        wv = (0.5 * (hi - lo) * gw).ravel()
        r = R - v ** k
        jac = k * v ** (k - 1)
        # angular range where the bump is non-zero
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (r * r + p * p - E * E) / (2 * r * p)
        c = np.where((r == 0) | (p == 0), -2.0, c)
        delta = np.arccos(np.clip(c, -1.0, 1.0))
        phi = delta[:, None] * jp[None, :]
        dist = np.sqrt(np.maximum(r[:, None] ** 2 + p * p - 2 * r[:, None] * p * np.cos(phi), 0.0))
        ang = np.sin(phi) ** (2 * d - 2) if d > 1 else 1.0
        I = (eps ** (-2 * d) * m.zeta(dist / eps) * ang).sum(axis=1) * (2 * delta / rule.nphi) * (sph / 2)
        h = ((R ** spec.alpha - r ** spec.alpha).clip(0) / spec.A) ** (1 / spec.beta)
        H = cdf((pt + h) / eps ** q) - cdf((pt - h) / eps ** q)
        out.flat[i] = float(np.sum(I * H * r ** (2 * d - 1) * jac * wv))
    return out


@dataclass(frozen=True)
class SmoothedCount:
    value: float
    deep: int
    shell_points: int
    shell_classes: int


def _shell_classes(spec: BodySpec, R: float, eps: float):
    """Lattice points with ``R - eps < N(p) <= R + eps``, grouped by
    ``(|z|^2, |t|)`` with multiplicities."""
    ex = spec.exponents
    thr_hi = spec.threshold(R + eps)
    thr_lo = spec.threshold(R - eps)
    tmax = _exact.max_t(ex, 0, thr_hi)
    rtab = r_table(2 * spec.d, max(required_nmax(spec, thr_hi), 0) + 1)
    n2s, ts, mult = [], [], []
    for tt in range(tmax + 1):
        hi = _exact.max_n2(ex, tt, thr_hi)
        lo = _exact.max_n2(ex, tt, thr_lo)
        for n2 in range(lo + 1, hi + 1):
            if rtab[n2]:
                n2s.append(n2)
                ts.append(tt)
                mult.append(int(rtab[n2]) * (1 if tt == 0 else 2))
    return np.array(n2s, dtype=np.int64), np.array(ts, dtype=np.int64), np.array(mult, dtype=np.int64)


def smoothed_count_report(spec: BodySpec, R: float, m: Mollifier, eps: float,
                          rule: _ShellRule | None = None) -> SmoothedCount:
    if spec.d != 1 or R > MAX_SMOOTH_R:
        raise BudgetExceeded(f"smoothed counts are limited to d = 1 and R <= {MAX_SMOOTH_R:g}")
    if not 0 < eps < R / 2:
        raise ValueError("need 0 < eps < R/2")
    tab = get_slice_table(2 * spec.d, required_nmax(spec, R) + 1)
    deep = count_sliced(spec, R - eps, tab)
    n2, ts, mult = _shell_classes(spec, R, eps)
    vals = convolved_indicator(spec, R, m, eps, np.sqrt(n2.astype(float)), ts.astype(float), rule)
    # fsum is exactly rounded, so the total does not depend on any ordering
    total = math.fsum([float(deep)] + list(vals * mult))
    return SmoothedCount(total, deep, int(mult.sum()), int(n2.size))


def smoothed_count(spec: BodySpec, R: float, m: Mollifier, eps: float) -> float:
    """``sum_k (chi_{B_R} * rho_eps)(k)`` over the integer lattice."""
    return smoothed_count_report(spec, R, m, eps).value


def pointwise_sandwich(spec: BodySpec, R: float, m: Mollifier, eps: float,
                       points: np.ndarray) -> np.ndarray:
    """Rows ``(lower, chi, upper)`` for points given as ``(|z|, t)`` pairs."""
    pts = np.asarray(points, dtype=float)
    lower = convolved_indicator(spec, R - eps, m, eps, pts[:, 0], pts[:, 1])
    upper = convolved_indicator(spec, R + eps, m, eps, pts[:, 0], pts[:, 1])
    chi = (norm_array(spec, pts[:, 0], pts[:, 1]) <= R).astype(float)
    return np.column_stack([lower, chi, upper])


# -- Poisson summation -------------------------------------------------------

@dataclass(frozen=True)
class Contribution:
    k: tuple
    chi_hat: float
    rho_hat: float

    @property
    def product(self) -> float:
        return self.chi_hat * self.rho_hat


def poisson_contributions(spec: BodySpec, R: float, m: Mollifier, eps: float, K: int,
                          skip_below: float = 1e-16) -> list[Contribution]:
    """Nonzero frequencies with max-norm <= K.

    Both transforms depend only on ``(|k'|, |k''|)``, so each class is
    evaluated once.  Since ``|chi_{B_R}^| <= vol(B_R)``, a frequency whose
    mollifier factor makes that bound fall below ``skip_below`` gets
    ``chi_hat = 0`` without evaluating it.
    """
    if spec.d != 1 or K > MAX_POISSON_K:
        raise BudgetExceeded(f"Poisson sums are limited to d = 1 and K <= {MAX_POISSON_K}")
    vol = ball_volume(spec, R)
    cache: dict = {}
    out = []
    rng = range(-K, K + 1)
    for k in product(rng, repeat=2 * spec.d + 1):
        if not any(k):
            continue
        kz, kt = k[:-1], abs(k[-1])
        key = (sum(c * c for c in kz), kt)
        if key not in cache:
            wmag = math.sqrt(key[0])
            rh = mollifier_ft(m, eps, wmag, kt)
            if abs(rh) * vol < skip_below:
                ch = 0.0
            else:
                ch = R ** spec.volume_dim * ft_general(spec, R * wmag, R ** spec.q * kt)
            cache[key] = (ch, rh)
        ch, rh = cache[key]
        out.append(Contribution(k, ch, rh))
    return out


def poisson_estimate(spec: BodySpec, R: float, m: Mollifier, eps: float, K: int) -> float:
    """Volume plus the truncated dual sum ``sum chi_{B_R}^(k) rho_eps^(k)``."""
    if K < 0:
        raise ValueError("K must be non-negative")
    if K == 0:
        return ball_volume(spec, R)
    terms = poisson_contributions(spec, R, m, eps, K)
    return math.fsum([ball_volume(spec, R)] + [c.product for c in terms])


def write_contributions_csv(terms, path, d: int = 1) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([f"k{i + 1}" for i in range(2 * d)] + ["kt", "chi_hat", "rho_hat", "product"])
        for c in terms:
            wr.writerow(list(c.k) + [f"{c.chi_hat:.17g}", f"{c.rho_hat:.17g}", f"{c.product:.17g}"])


def rho_decay_fit(m: Mollifier, regime: str = "axis", window=(8.0, 512.0),
                  per_octave: int = 2, precise: bool = True):
    """Decay exponent of ``|rho^|`` along the t-axis or the z-hyperplane.

    ``rho^`` is the product of the two factor transforms, each bounded by 1,
    so the two coordinate rays control every direction.  With ``precise``
    the values come from :func:`mollifier_ft_mp`; in double precision the
    transform reaches the rounding floor well before the end of the window.
    """
    from .spectral import FreqSample, fit_decay, geometric_grid

    xs = geometric_grid(window[0], window[1], per_octave)
    if regime == "axis":
        pairs = [(0.0, x) for x in xs]
    elif regime == "hyperplane":
        pairs = [(x, 0.0) for x in xs]
    else:
        raise ValueError(f"unknown regime {regime!r}")
    f = mollifier_ft_mp if precise else (lambda mm, w, s: mollifier_ft(mm, 1.0, w, s))
    return fit_decay([FreqSample(w, s, f(m, w, s)) for w, s in pairs], window)
