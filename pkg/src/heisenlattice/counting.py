"""Exact lattice point counts in the dilated bodies.

Two independent routes are provided:

* :func:`count_direct` enumerates every ``z`` in the bounding box and counts
  the admissible ``t`` on each fibre,
* :func:`count_sliced` sums ``G_2d`` over the integer ``t``-slices using a
  precomputed :class:`SliceTable`.

Both make every boundary decision with the certified comparator in
:mod:`heisenlattice._exact`, so ties are counted and nothing is guessed.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _exact
from ._exact import Threshold
from .geometry import BodySpec

MEMORY_BUDGET_BYTES = 2 * 1024**3
DIRECT_BUDGET_POINTS = 10**9
_MAGIC = b"GCUM"
_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


class BudgetExceeded(RuntimeError):
    """A request would exceed the memory or enumeration budget."""


class TableTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class SliceTable:
    """``cum[n] = #{k in Z^dim2d : |k|^2 <= n}`` for ``0 <= n <= Nmax``."""

    dim2d: int
    Nmax: int
    cum: np.ndarray

    def __post_init__(self):
        self.cum.setflags(write=False)

    def G(self, n):
        return self.cum[n]

    @property
    def r(self) -> np.ndarray:
        return np.diff(self.cum, prepend=0)

    def save(self, path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, _VERSION, self.dim2d, self.Nmax))
            fh.write(self.cum.astype("<u8").tobytes())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "SliceTable":
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) != _HEADER.size:
                raise ValueError(f"{path}: truncated header")
            magic, version, dim2d, nmax = _HEADER.unpack(head)
            if magic != _MAGIC:
                raise ValueError(f"{path}: bad magic {magic!r}")
            if version != _VERSION:
                raise ValueError(f"{path}: unsupported version {version}")
            cum = np.frombuffer(fh.read(), dtype="<u8")
        if cum.size != nmax + 1:
            raise ValueError(f"{path}: expected {nmax + 1} entries, found {cum.size}")
        cum = cum.astype(np.int64)
        if cum[0] != 1 or (nmax >= 1 and cum[1] != 1 + 2 * dim2d):
            raise ValueError(f"{path}: spot check failed")
        return cls(int(dim2d), int(nmax), cum)


# -- r-table backends ---------------------------------------------------------

def _check_budget(nbytes: int) -> None:
    if nbytes > MEMORY_BUDGET_BYTES:
        raise BudgetExceeded(f"table needs ~{nbytes / 2**20:.0f} MiB, budget is "
                             f"{MEMORY_BUDGET_BYTES / 2**20:.0f} MiB")


def r2_sieve(N: int) -> np.ndarray:
    """r_2(n) for n <= N by sieving a^2 + b^2 over the first quadrant."""
    r = np.zeros(N + 1, dtype=np.int64)
    m = math.isqrt(N)
    sq = np.arange(m + 1, dtype=np.int64) ** 2
    w = np.where(np.arange(m + 1) == 0, 1, 2)
    for a in range(m + 1):
        bmax = math.isqrt(N - a * a)
        vals = sq[a] + sq[: bmax + 1]
        # b -> a^2 + b^2 is injective for fixed a
        r[vals] += w[a] * w[: bmax + 1]
    return r


def r4_jacobi(N: int) -> np.ndarray:
    """r_4(n) = 8 * sum of divisors m | n with 4 not dividing m."""
    r = np.zeros(N + 1, dtype=np.int64)
    if N == 0:
        r[0] = 1
        return r
    root = math.isqrt(N)
    # small divisors: strided adds
    for m in range(1, root + 1):
        if m % 4:
            r[m::m] += 8 * m
    # large divisors m > root, grouped by cofactor j = n // m < N // root + 1
    for j in range(1, N // (root + 1) + 1):
        ms = np.arange(root + 1, N // j + 1, dtype=np.int64)
        ms = ms[ms % 4 != 0]
        r[j * ms] += 8 * ms
    r[0] = 1
    return r


def convolve_exact(a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    """Exact truncated convolution of two non-negative integer tables."""
    out = np.zeros(N + 1, dtype=np.int64)
    nz = np.flatnonzero(b[: N + 1])
    for n in nz:
        out[n:] += b[n] * a[: N + 1 - n]
    return out


def r_table(dim2d: int, N: int) -> np.ndarray:
    if dim2d < 2 or dim2d % 2:
        raise ValueError("dim2d must be a positive even integer")
    if dim2d == 2:
        return r2_sieve(N)
    if dim2d == 4:
        return r4_jacobi(N)
    r2 = r2_sieve(N)
    r = r4_jacobi(N)
    for _ in range((dim2d - 4) // 2):
        r = convolve_exact(r, r2, N)
    return r


def build_slice_table(dim2d: int, Nmax: int) -> SliceTable:
    Nmax = int(Nmax)
    if Nmax < 0:
        raise ValueError("Nmax must be non-negative")
    # cum fits int64 only while A_2d * N^(d) stays well below 2^63
    d = dim2d // 2
    if Nmax > 0 and (math.pi ** d / math.factorial(d)) * float(Nmax + 1) ** d > 2.0**62:
        raise BudgetExceeded("cumulative counts would overflow 64-bit integers")
    _check_budget(4 * 8 * (Nmax + 1))
    if dim2d >= 6 and Nmax > 400_000:
        raise BudgetExceeded("convolution backend is limited to Nmax <= 4e5")
    r = r_table(dim2d, Nmax)
    return SliceTable(dim2d, Nmax, np.cumsum(r))


def get_slice_table(dim2d: int, Nmax: int, cache_path=None) -> SliceTable:
    """Load a cached table covering ``Nmax`` or build (and cache) one."""
    cache_path = os.environ.get("HEISEN_TABLE_CACHE", cache_path)
    path = None
    if cache_path:
        path = Path(cache_path)
        if path.is_dir() or not path.suffix:
            path.mkdir(parents=True, exist_ok=True)
            path = path / f"gcum_{dim2d}.bin"
        if path.exists():
            try:
                tab = SliceTable.load(path)
            except ValueError:
                tab = None
            if tab is not None and tab.dim2d == dim2d and tab.Nmax >= Nmax:
                return tab
    tab = build_slice_table(dim2d, Nmax)
    if path is not None:
        tab.save(path)
    return tab


# -- counting -----------------------------------------------------------------

def _as_threshold(spec: BodySpec, R) -> Threshold:
    if isinstance(R, Threshold):
        return R
    return spec.threshold(R)


def max_slice(spec: BodySpec, R) -> int:
    """Largest |t| with a non-empty slice."""
    return _exact.max_t(spec.exponents, 0, _as_threshold(spec, R))


def required_nmax(spec: BodySpec, R) -> int:
    """Table size needed by :func:`count_sliced` at radius ``R``."""
    return _exact.max_n2(spec.exponents, 0, _as_threshold(spec, R))


def count_direct(spec: BodySpec, R, budget: int = DIRECT_BUDGET_POINTS) -> int:
    """Enumerate the z-box and count the t-fibre of every z."""
    thr = _as_threshold(spec, R)
    ex = spec.exponents
    m = math.isqrt(max(required_nmax(spec, thr), 0))
    tmax = max_slice(spec, thr)
    box = (2 * m + 1) ** (2 * spec.d)
    if box * (2 * tmax + 1) > budget or box > 5 * 10**7:
        raise BudgetExceeded(f"direct enumeration would visit ~{box * (2 * tmax + 1):.3g} points")
    sq = np.arange(-m, m + 1, dtype=np.int64) ** 2
    n2 = np.zeros(1, dtype=np.int64)
    for _ in range(2 * spec.d):
        n2 = (n2[:, None] + sq[None, :]).ravel()
    mult = np.bincount(n2)
    total = 0
    for v in np.flatnonzero(mult):
        tm = _exact.max_t(ex, int(v), thr)
        if tm >= 0:
            total += int(mult[v]) * (2 * tm + 1)
    return total


def slice_indices(spec: BodySpec, R) -> np.ndarray:
    """``floor(T(k)^2)`` for k = 0..kmax, certified."""
    thr = _as_threshold(spec, R)
    kmax = max_slice(spec, thr)
    if kmax < 0:
        return np.zeros(0, dtype=np.int64)
    ks = np.arange(kmax + 1, dtype=np.int64)
    return _exact.max_n2_array(spec.exponents, ks, thr)


def count_sliced(spec: BodySpec, R, table: SliceTable) -> int:
    """Sum of ``G_2d`` over the t-slices."""
    if table.dim2d != 2 * spec.d:
        raise ValueError(f"table is for dimension {table.dim2d}, body needs {2 * spec.d}")
    idx = slice_indices(spec, R)
    if idx.size == 0:
        return 0
    if idx[0] > table.Nmax:
        raise TableTooSmall(f"need Nmax >= {int(idx[0])}, table has {table.Nmax}")
    g = table.cum[idx]
    return int(g[0]) + 2 * int(g[1:].sum())


@dataclass(frozen=True)
class CountResult:
    R: float
    count: int
    volume: float
    error: float

    @classmethod
    def make(cls, R: float, count: int, volume: float) -> "CountResult":
        return cls(float(R), int(count), float(volume), float(count - volume))


@dataclass(frozen=True)
class ShellProbe:
    d: int
    M: int
    count_lo: int
    count_hi: int
    count_gap: int
    volume_gap: float


def shell_probe_alpha2(d: int, M: int, table: SliceTable | None = None) -> ShellProbe:
    """Counts at ``R^2 = M`` and ``R^2 = M + 1/2`` for the alpha = 2, A = 1 ball.

    Every lattice point has integer squared norm, so the two counts agree
    while the volume grows by order ``M^d``.
    """
    from .volume import unit_volume_closed

    if M < 1:
        raise ValueError("M must be >= 1")
    spec = BodySpec.heisenberg(d, 2.0, 1.0)
    lo = Threshold.from_power(Fraction(M), 2)
    hi = Threshold.from_power(Fraction(2 * M + 1, 2), 2)
    if table is None or table.Nmax < M + 1:
        table = build_slice_table(2 * d, M + 1)
    c_lo = count_sliced(spec, lo, table)
    c_hi = count_sliced(spec, hi, table)
    diff = Fraction(2 * M + 1, 2) ** (d + 1) - Fraction(M) ** (d + 1)
    vgap = unit_volume_closed(spec) * float(diff)
    return ShellProbe(d, M, c_lo, c_hi, c_hi - c_lo, vgap)
