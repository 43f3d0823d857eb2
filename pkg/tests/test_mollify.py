import math

import numpy as np
import pytest

from heisenlattice.counting import BudgetExceeded, count_sliced
from heisenlattice.geometry import BodySpec, Point
from heisenlattice.mollify import (
    FT_GRID_MAX, bump, convolved_indicator, make_mollifier, mollifier_dilate_value, mollifier_ft,
    mollifier_ft_mp, mollifier_mass, mollifier_value, poisson_contributions, poisson_estimate,
    pointwise_sandwich, smoothed_count, smoothed_count_report, tau_hat, write_contributions_csv,
    zeta_hat,
)
from heisenlattice.quadrature import gauss_legendre

H12 = BodySpec.heisenberg(1, 2.0, 1.0)
H14 = BodySpec.heisenberg(1, 4.0, 1.0)


@pytest.fixture(scope="module")
def m4():
    return make_mollifier(H14)


@pytest.fixture(scope="module")
def m2():
    return make_mollifier(H12)


def test_support_and_positivity(m4):
    spec = BodySpec.heisenberg(2, 3.0, 2.5)
    m = make_mollifier(spec)
    assert m.z_support_radius ** 3 + 2.5 * m.t_support_radius ** 1.5 == pytest.approx(1.0)
    assert mollifier_value(m, Point((0, 0, 0, 0), 0)) > 0
    assert mollifier_value(m, Point((m.z_support_radius, 0, 0, 0), 0)) == 0
    # flat to all orders: vanishes faster than any power near the edge
    u = 1 - np.geomspace(1e-3, 1e-5, 5)
    assert np.all(bump(u) / (1 - u) ** 20 < 1e-100)
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = Point(tuple(rng.normal(size=4)), rng.normal())
        v = mollifier_value(m, p)
        assert v >= 0
        if v > 0:
            assert spec.alpha and (np.linalg.norm(p.z) < m.z_support_radius and abs(p.t) < m.t_support_radius)


@pytest.mark.parametrize("spec", [H12, H14, BodySpec.heisenberg(2, 3.0, 0.5), BodySpec.euclidean(1, 6.0)])
def test_mass_is_one(spec):
    m = make_mollifier(spec)
    for eps in (1.0, 0.5, 0.1):
        assert mollifier_mass(m, eps) == pytest.approx(1.0, abs=1e-10)


def test_dilate_values(m4):
    p = Point((0.1, -0.2), 0.05)
    assert mollifier_dilate_value(m4, 1.0, p) == mollifier_value(m4, p)
    eps = 0.3
    want = eps ** -4 * mollifier_value(m4, Point((0.1 / eps, -0.2 / eps), 0.05 / eps ** 2))
    assert mollifier_dilate_value(m4, eps, p) == pytest.approx(want, rel=1e-14)
    with pytest.raises(ValueError):
        mollifier_dilate_value(m4, 0.0, p)


def test_transform_at_zero_and_dilation(m4):
    assert mollifier_ft(m4, 1.0, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    for w, s in ((0.5, 1.0), (3.0, 2.0), (10.0, 40.0)):
        for eps in (0.5, 0.1):
            assert abs(mollifier_ft(m4, eps, w, s) - mollifier_ft(m4, 1.0, eps * w, eps ** 2 * s)) <= 1e-9


def test_transform_against_direct_cartesian(m4):
    # 2-D Cartesian Gauss rule for the z-factor, 1-D rule for the t-factor
    x, w = gauss_legendre(40)
    br = np.linspace(-1, 1, 9)
    nodes = (0.5 * (br[:-1, None] + br[1:, None]) + 0.5 * np.diff(br)[:, None] * x).ravel()
    wts = (0.5 * np.diff(br)[:, None] * w).ravel()
    zr, tr = m4.z_support_radius, m4.t_support_radius
    X, Y = np.meshgrid(zr * nodes, zr * nodes, indexing="ij")
    W = np.outer(wts, wts) * zr * zr
    Z = m4.zeta(np.hypot(X, Y))
    for wmag, s in ((0.7, 0.4), (2.5, 3.0)):
        zh = np.sum(Z * np.cos(2 * math.pi * X * wmag) * W)
        th = np.sum(m4.tau(tr * nodes) * np.cos(2 * math.pi * tr * nodes * s) * wts * tr)
        assert mollifier_ft(m4, 1.0, wmag, s, cached=False) == pytest.approx(zh * th, abs=1e-10)


def test_cached_interpolation_accuracy(m4):
    x = np.concatenate([np.linspace(0, 10, 301), np.geomspace(10, FT_GRID_MAX, 301)])
    assert np.max(np.abs(zeta_hat(m4, x) - zeta_hat(m4, x, cached=False))) <= 1e-8
    assert np.max(np.abs(tau_hat(m4, x) - tau_hat(m4, x, cached=False))) <= 1e-8
    # outside the grid the direct route is used
    assert zeta_hat(m4, 150.0) == zeta_hat(m4, 150.0, cached=False)


def test_high_precision_route_agrees(m4):
    for w, s in ((1.5, 0.0), (0.0, 6.0), (4.0, 3.0)):
        assert mollifier_ft_mp(m4, w, s) == pytest.approx(mollifier_ft(m4, 1.0, w, s, cached=False), abs=1e-12)


def _oracle(spec, R, m, eps, p, pt, nrad=120, nang=3000, nt=16, panels=8):
    """Convolution by polar coordinates centred on the lattice point: the
    bump is radial there, the t-interval is integrated by composite Gauss."""
    E = eps * m.z_support_radius
    Tq = eps ** spec.q * m.t_support_radius
    x, w = gauss_legendre(nrad)
    br = np.linspace(0, E, 9)
    rr = (0.5 * (br[:-1, None] + br[1:, None]) + 0.5 * np.diff(br)[:, None] * x).ravel()
    wr = (0.5 * np.diff(br)[:, None] * w).ravel()
    zw = eps ** -2 * m.zeta(rr / eps) * rr * wr
    th = (np.arange(nang) + 0.5) / nang * 2 * np.pi
    tx, tw = gauss_legendre(nt)
    total = 0.0
    for i in range(0, rr.size, 64):
        r = rr[i:i + 64, None]
        dist = np.sqrt(np.maximum(p * p + r * r - 2 * p * r * np.cos(th), 0))
        h = ((R ** spec.alpha - dist ** spec.alpha).clip(0) / spec.A) ** (1 / spec.beta)
        a, b = np.maximum(pt - h, -Tq), np.minimum(pt + h, Tq)
        L = (b - a).clip(0) / panels
        s = (a[..., None, None] + L[..., None, None] * (np.arange(panels)[:, None] + 0.5 * (tx + 1)))
        tint = (eps ** -spec.q * m.tau(s / eps ** spec.q) * tw).sum((-1, -2)) * 0.5 * L
        total += float((zw[i:i + 64, None] * tint).sum())
    return total * 2 * np.pi / nang


@pytest.mark.parametrize("alpha,A,p,pt", [(2.0, 1.0, 2.9, 0.3), (3.0, 2.0, 2.9, 0.3), (4.0, 1.0, 1.5, 8.7)])
def test_convolution_against_oracle(alpha, A, p, pt):
    spec = BodySpec.heisenberg(1, alpha, A)
    m = make_mollifier(spec)
    v = convolved_indicator(spec, 3.0, m, 0.5, p, pt)[0]
    assert v == pytest.approx(_oracle(spec, 3.0, m, 0.5, p, pt), abs=1e-8)


def test_convolution_deep_and_outside(m4):
    # deep: the full mass; outside the (R + eps)-body: nothing
    assert convolved_indicator(H14, 5.0, m4, 0.5, 0.0, 0.0)[0] == pytest.approx(1.0, abs=1e-9)
    assert convolved_indicator(H14, 5.0, m4, 0.5, 5.6, 0.0)[0] == 0.0


def test_small_eps_limit(m2):
    rep = smoothed_count_report(H12, 5.0, m2, 0.01)
    from heisenlattice.counting import build_slice_table
    exact = count_sliced(H12, 5.0, build_slice_table(2, 30))
    assert abs(rep.value - exact) <= rep.shell_points


@pytest.mark.parametrize("R", [3.0, 5.0])
def test_summed_sandwich(R, m2, table2):
    eps = 0.5
    assert smoothed_count(H12, R - eps, m2, eps) - 1e-3 <= count_sliced(H12, R, table2) <= smoothed_count(H12, R + eps, m2, eps) + 1e-3
    v = smoothed_count(H12, 3.0, m2, 0.5)
    assert count_sliced(H12, 2.5, table2) <= v <= count_sliced(H12, 3.5, table2)


def test_pointwise_sandwich(m4):
    rng = np.random.default_rng(5)
    R, eps = 3.0, 0.5
    pts = np.column_stack([rng.uniform(0, 4, 60), rng.uniform(-12, 12, 60)])
    lat = np.array([[math.sqrt(a * a + b * b), t] for a, b, t in rng.integers(-3, 4, size=(40, 3))])
    rows = pointwise_sandwich(H14, R, m4, eps, np.vstack([pts, lat]))
    assert np.all(rows[:, 0] <= rows[:, 1] + 1e-9)
    assert np.all(rows[:, 1] <= rows[:, 2] + 1e-6)


def test_smoothed_count_budget(m2):
    with pytest.raises(BudgetExceeded):
        smoothed_count(H12, 40.0, m2, 0.5)
    with pytest.raises(BudgetExceeded):
        smoothed_count(BodySpec.heisenberg(2, 2.0, 1.0), 3.0, make_mollifier(BodySpec.heisenberg(2, 2.0, 1.0)), 0.5)
    with pytest.raises(ValueError):
        smoothed_count(H12, 3.0, m2, 2.0)


def test_poisson_basics(m4, tmp_path):
    R, eps = 3.0, 0.5
    from heisenlattice.volume import ball_volume
    assert poisson_estimate(H14, R, m4, eps, 0) == ball_volume(H14, R)
    terms = poisson_contributions(H14, R, m4, eps, 2)
    assert len(terms) == 5 ** 3 - 1
    by_k = {c.k: c.product for c in terms}
    for k, v in by_k.items():
        assert by_k[tuple(-c for c in k)] == v
    p = tmp_path / "t.csv"
    write_contributions_csv(terms, p)
    assert p.read_text().splitlines()[0] == "k1,k2,kt,chi_hat,rho_hat,product"
    with pytest.raises(BudgetExceeded):
        poisson_contributions(H14, R, m4, eps, 33)
    with pytest.raises(ValueError):
        poisson_estimate(H14, R, m4, eps, -1)


def test_poisson_approaches_smoothed_count(m4):
    R, eps = 4.0, 0.5
    sc = smoothed_count(H14, R, m4, eps)
    gaps = [abs(poisson_estimate(H14, R, m4, eps, K) - sc) for K in (2, 4, 8)]
    assert gaps[2] < gaps[1] < gaps[0]


def test_transform_decays_rapidly(m4):
    from heisenlattice.mollify import rho_decay_fit
    for regime in ("axis", "hyperplane"):
        fit = rho_decay_fit(m4, regime)
        assert fit.exponent >= 6, (regime, fit.exponent)
