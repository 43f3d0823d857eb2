import numpy as np
import pytest
from scipy import integrate, special

from heisenlattice.bessel import bessel_j, bessel_ratio


def test_values_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_ratio(3, 0.0) == pytest.approx(1 / 48, rel=1e-15)


@pytest.mark.parametrize("order", [0, 1, 2, 3, 5, 9, 17, 33, 64])
def test_against_scipy(order):
    x = np.concatenate([np.linspace(0, 30, 3001), np.geomspace(30, 1e4, 3000)])
    assert np.max(np.abs(bessel_j(order, x) - special.jv(order, x))) <= 1e-12


def test_first_zero_of_j0():
    lo, hi = 2.0, 3.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if bessel_j(0, mid) > 0:
            lo = mid
        else:
            hi = mid
    assert lo == pytest.approx(2.404825557695773, abs=1e-14)
    # integral definition J0(x) = (1/pi) int_0^pi cos(x sin u) du
    val, _ = integrate.quad(lambda u: np.cos(lo * np.sin(u)), 0, np.pi, epsabs=1e-14, limit=200)
    assert abs(val / np.pi) < 1e-13


def test_ratio_matches_quotient():
    x = np.linspace(0.01, 50, 500)
    for n in (0, 1, 4):
        assert np.allclose(bessel_ratio(n, x), special.jv(n, x) / x ** n, rtol=1e-11, atol=1e-15)


@pytest.mark.parametrize("args", [(-1, 1.0), (65, 1.0), (1.5, 1.0), (0, -1.0), (0, 2e4), (0, np.nan)])
def test_domain_errors(args):
    with pytest.raises(ValueError):
        bessel_j(*args)
