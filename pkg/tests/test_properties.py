import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenlattice.counting import count_direct, count_sliced
from heisenlattice.geometry import BodySpec, LatticePoint, Point, dilate, is_member, norm_value, subadditivity_margin
from heisenlattice.spectral import ft_general

alphas = st.sampled_from([1.0, 2.0, 3.0, 4.0, 6.0, 8.0])
coeffs = st.sampled_from([0.5, 1.0, 2.0])
reals = st.floats(-50, 50, allow_nan=False)


@st.composite
def specs(draw, min_alpha=1.0):
    a = draw(alphas.filter(lambda x: x >= min_alpha))
    if draw(st.booleans()):
        return BodySpec.heisenberg(1, a, draw(coeffs))
    return BodySpec(1, a, a, draw(coeffs))


@st.composite
def points(draw):
    return Point(tuple(draw(reals) for _ in range(2)), draw(reals))


@settings(max_examples=300, deadline=None)
@given(specs(), points(), st.floats(1e-3, 1e3))
def test_homogeneity(spec, p, a):
    n = norm_value(spec, p)
    assert abs(norm_value(spec, dilate(spec, p, a)) - a * n) <= 1e-12 * a * n + 1e-300


@settings(max_examples=300, deadline=None)
@given(specs(), st.integers(-5, 5), st.integers(-5, 5), st.integers(-30, 30), st.floats(0.1, 8), st.floats(0, 3))
def test_membership_monotone(spec, a, b, t, R, dR):
    p = LatticePoint((a, b), t)
    if is_member(spec, R, p):
        assert is_member(spec, R + dR, p)


@settings(max_examples=300, deadline=None)
@given(specs(min_alpha=1.0), points(), points())
def test_subadditive(spec, p, q):
    if spec.is_heisenberg:
        scale = norm_value(spec, p) + norm_value(spec, q)
        assert subadditivity_margin(spec, p, q) >= -1e-12 * max(scale, 1.0)


@settings(max_examples=60, deadline=None)
@given(specs(min_alpha=2.0), st.floats(0.5, 6))
def test_sliced_equals_direct(spec, R):
    from heisenlattice.counting import build_slice_table
    tab = build_slice_table(2, 2000)
    assert count_sliced(spec, R, tab) == count_direct(spec, R)


@settings(max_examples=40, deadline=None)
@given(specs(min_alpha=2.0), st.floats(0, 20), st.floats(0, 20))
def test_transform_even_and_bounded(spec, w, s):
    from heisenlattice.volume import unit_volume_closed
    v = ft_general(spec, w, s)
    assert v == ft_general(spec, -w, -s)
    assert abs(v) <= unit_volume_closed(spec) * (1 + 1e-9)
    assert math.isfinite(v)
