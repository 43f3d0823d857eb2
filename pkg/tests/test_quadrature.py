import numpy as np
import pytest

from heisenlattice.quadrature import QuadratureError, graded_breaks, integrate, refine


def test_polynomial_exact():
    val, err = integrate(lambda x: x ** 7 - 3 * x ** 2, np.array([0.0, 1.0, 2.0]), n=8)
    assert val == pytest.approx(2 ** 8 / 8 - 8, rel=1e-14) and err < 1e-12


def test_graded_breaks_resolve_endpoint_singularity():
    br = graded_breaks(0.0, 1.0, left=True)
    val, _ = integrate(lambda x: x ** -0.5, br, n=16)
    assert val == pytest.approx(2.0, rel=1e-12)
    assert br[0] == 0.0 and br[-1] == 1.0 and np.all(np.diff(br) > 0)


def test_refine_limits_phase_per_panel():
    br = refine(np.array([0.0, 1.0]), lambda x: 100 * x)
    assert np.max(np.diff(100 * br)) <= 0.25 + 1e-12
    val, _ = integrate(lambda x: np.cos(2 * np.pi * 100 * x + 0.3), br, n=16)
    assert val == pytest.approx((np.sin(2 * np.pi * 100 + 0.3) - np.sin(0.3)) / (2 * np.pi * 100), abs=1e-14)


def test_tolerance_is_enforced():
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.abs(x - 0.3337), np.array([0.0, 1.0]), n=2, tol=1e-14)
    with pytest.raises(QuadratureError):
        refine(np.array([0.0, 1.0]), lambda x: 1e9 * x, max_panels=1000)
