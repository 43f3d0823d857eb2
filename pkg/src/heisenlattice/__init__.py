"""Lattice points in Heisenberg-homogeneous norm balls.

Exact counts, volumes, Fourier transforms of the indicator, smoothing
machinery and growth-exponent fits for the bodies
``{(z, t) in R^(2d+1) : |z|^alpha + A |t|^beta <= 1}`` and their dilates.
"""

from .counting import CountResult, SliceTable, count_direct, count_sliced, get_slice_table
from .geometry import BodySpec, LatticePoint, Point, is_member
from .volume import ball_volume, unit_volume_closed

__all__ = [
    "BodySpec", "Point", "LatticePoint", "is_member",
    "SliceTable", "CountResult", "count_direct", "count_sliced", "get_slice_table",
    "ball_volume", "unit_volume_closed",
]
__version__ = "0.1.0"
