"""Error-term scans, growth-exponent fits and the exponent predictions they
are compared against."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .counting import CountResult, SliceTable, count_sliced
from .estimators import PowerLawEnvelope
from .geometry import BodySpec
from .quadrature import gauss_legendre, graded_breaks, panel_nodes
from .spectral import FitResult
from .volume import ball_volume, ball_volume_2d


@dataclass
class ErrorScan:
    spec: BodySpec
    samples: list

    def __post_init__(self):
        R = [s.R for s in self.samples]
        if any(b <= a for a, b in zip(R, R[1:])):
            raise ValueError("scan radii must be strictly increasing")

    @property
    def R(self) -> np.ndarray:
        return np.array([s.R for s in self.samples])

    @property
    def errors(self) -> np.ndarray:
        return np.array([s.error for s in self.samples])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["R", "count", "volume", "error"])
            for s in self.samples:
                wr.writerow([repr(s.R), s.count, repr(s.volume), repr(s.error)])

    @classmethod
    def read_csv(cls, spec: BodySpec, path) -> "ErrorScan":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(spec, [CountResult(float(r["R"]), int(r["count"]), float(r["volume"]), float(r["error"]))
                          for r in rows])


@dataclass
class ExponentTable:
    """Known error exponents for Euclidean balls in even dimension ``2d``.

    ``theta1`` is the exponent of the classical ball problem; in dimension 2
    it is open and kept as a labelled conjecture.
    """

    theta1_planar: float = 0.5
    theta1: dict = field(init=False)
    theta2: dict = field(init=False)

    def __post_init__(self):
        self.theta1 = {2: self.theta1_planar}
        self.theta2 = {4: 2.0 / 3.0}
        for d in range(2, 33):
            self.theta1[2 * d] = 2 * d - 2.0
            if d >= 3:
                self.theta2[2 * d] = 0.0

    def is_conjectural(self, dim: int) -> bool:
        return dim == 2

    def describe(self, dim: int) -> str:
        tag = " (conjectural)" if self.is_conjectural(dim) else ""
        return f"theta1({dim}) = {self.theta1[dim]:g}{tag}"


# -- scans -------------------------------------------------------------------

_WORKER_TABLE: SliceTable | None = None


def _init_worker(table: SliceTable) -> None:
    global _WORKER_TABLE
    _WORKER_TABLE = table


def _count_chunk(args):
    spec, radii = args
    return [count_sliced(spec, R, _WORKER_TABLE) for R in radii]


def error_scan(spec: BodySpec, R_grid, table: SliceTable, workers: int = 1) -> ErrorScan:
    """Exact count, volume and error at every radius of the grid."""
    grid = [float(r) for r in R_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1 or len(grid) < 2:
        counts = [count_sliced(spec, R, table) for R in grid]
    else:
        # interleaved chunks balance the cost, which grows with R
        chunks = [grid[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(table,)) as ex:
            parts = list(ex.map(_count_chunk, [(spec, c) for c in chunks]))
        counts = [0] * len(grid)
        for i, part in enumerate(parts):
            counts[i::workers] = part
    return ErrorScan(spec, [CountResult.make(R, c, ball_volume(spec, R)) for R, c in zip(grid, counts)])


def fit_sup_exponent(scan: ErrorScan, windows_per_decade: float = 3) -> FitResult:
    """Growth exponent of the window maxima of ``|E(R)|``."""
    ratio = 10.0 ** (1.0 / windows_per_decade)
    est = PowerLawEnvelope(window_ratio=ratio, min_windows=4).fit(scan.R, scan.errors)
    return FitResult(est.slope_, est.intercept_, est.max_residual_, (float(scan.R[0]), float(scan.R[-1])))


# -- grids -------------------------------------------------------------------

def dyadic_grid(lo: float, hi: float, per_octave: int = 1) -> np.ndarray:
    n = int(math.floor(per_octave * math.log2(hi / lo) + 1e-9))
    return lo * 2.0 ** (np.arange(n + 1) / per_octave)


def offset_grid(radii) -> np.ndarray:
    """Move each radius to ``R^2 = floor(R^2) + 1/4`` (drops repeats)."""
    r2 = np.floor(np.asarray(radii, dtype=float) ** 2) + 0.25
    return np.sqrt(np.unique(r2))


def parse_grid(desc: str) -> np.ndarray:
    """``dyadic:min:max[:per_octave]``, ``offset-dyadic:min:max[:per_octave]``
    or ``linear:min:max:step``."""
    parts = desc.split(":")
    kind = parts[0]
    try:
        nums = [float(p) for p in parts[1:]]
    except ValueError:
        raise ValueError(f"bad grid descriptor {desc!r}") from None
    if kind in ("dyadic", "offset-dyadic"):
        if len(nums) not in (2, 3) or not 0 < nums[0] <= nums[1]:
            raise ValueError(f"bad grid descriptor {desc!r}")
        per = int(nums[2]) if len(nums) == 3 else 1
        if per < 1:
            raise ValueError("points per octave must be >= 1")
        g = dyadic_grid(nums[0], nums[1], per)
        return offset_grid(g) if kind == "offset-dyadic" else g
    if kind == "linear":
        if len(nums) != 3 or nums[2] <= 0 or not 0 < nums[0] <= nums[1]:
            raise ValueError(f"bad grid descriptor {desc!r}")
        n = int(math.floor((nums[1] - nums[0]) / nums[2] + 1e-9))
        return nums[0] + nums[2] * np.arange(n + 1)
    raise ValueError(f"unknown grid kind {kind!r}")


# -- Euler-Maclaurin main term ------------------------------------------------

@dataclass(frozen=True)
class EulerMaclaurin:
    R: float
    E1: float
    volume: float
    deviation: float
    sawtooth: float | None
    agreement: float | None


def _profile(alpha: float, d: int, u: np.ndarray) -> np.ndarray:
    """``g(u) = (1 - u^(alpha/2))^(2d/alpha)`` with ``1 - u^a`` computed
    without cancellation near u = 1."""
    a = alpha / 2
    with np.errstate(divide="ignore"):
        one_minus = -np.expm1(a * np.log(u))
    one_minus = np.where(u == 0, 1.0, one_minus)
    return np.clip(one_minus, 0.0, None) ** (2 * d / alpha)


def _profile_slope(alpha: float, d: int, u: np.ndarray, gap: np.ndarray | None = None) -> np.ndarray:
    """``g'(u)``; ``gap = 1 - u`` may be passed when known more accurately."""
    a = alpha / 2
    g = 2 * d / alpha
    if gap is None:
        gap = 1.0 - u
    one_minus = np.clip(-np.expm1(a * np.log1p(-gap)), 0.0, None)
    return -g * a * u ** (a - 1) * one_minus ** (g - 1)


def _sawtooth_integral(alpha: float, d: int, X: float, n: int = 8) -> float:
    """``\\int_0^1 psi(X t) g'(t) dt`` with one Gauss panel per period of psi
    and a graded mesh on the last period (g' may blow up at t = 1)."""
    J = int(math.floor(X))
    x, w = gauss_legendre(n)
    # full periods [j, j+1], j < J - 1, in the variable x = X t
    j = np.arange(max(J - 1, 0), dtype=float)
    xs = j[:, None] + 0.5 * (x + 1.0)
    psi = xs - j[:, None] - 0.5
    body = np.sum(psi * _profile_slope(alpha, d, xs / X, (X - xs) / X) * 0.5 * w, axis=1)
    total = math.fsum(body)
    # the rest, [J-1, X], split at the jump J and graded toward x = X; it is
    # integrated in the distance y = X - x so that 1 - t stays exact
    lo = float(max(J - 1, 0))
    pieces = [(lo, min(float(J), X))]
    if X > J:
        pieces.append((float(J), X))
    for a_, b_ in pieces:
        if b_ <= a_:
            continue
        br = graded_breaks(X - b_, X - a_, left=(b_ == X))
        Y, W = panel_nodes(br, 2 * n)
        xx = X - Y
        total += float(np.sum((xx - math.floor(a_) - 0.5) * _profile_slope(alpha, d, xx / X, Y / X) * W))
    return total / X


def euler_maclaurin_E1(d: int, alpha: float, R: float, check: bool = True) -> EulerMaclaurin:
    """Slice sum ``A_2d sum_{|k| <= R^2} (R^alpha - |k|^(alpha/2))^(2d/alpha)``
    against the volume of the Heisenberg body (A = 1)."""
    if R < 2:
        raise ValueError("R must be at least 2")
    X = float(R) * float(R)
    K = int(math.floor(X))
    # The slice sum nearly cancels against 2X int g, so its terms are formed
    # and added in extended precision (64-bit mantissa on x86).
    ld = np.longdouble
    u = np.arange(1, K + 1, dtype=ld) / ld(X)
    a = ld(alpha) / 2
    S = np.sum(np.clip(-np.expm1(a * np.log(u)), 0, None) ** (ld(2 * d) / ld(alpha)))
    s_hi = float(S)
    s_lo = float(S - ld(s_hi))
    # Sum of g(|k|/X) over |k| <= X minus 2X int_0^1 g, in double-double.
    with mpmath.workdps(40):
        integral = (mpmath.mpf(2) / alpha) * mpmath.beta(mpmath.mpf(2) / alpha, mpmath.mpf(2 * d) / alpha + 1)
        main = 2 * mpmath.mpf(X) * integral
        hi = float(main)
        lo = float(main - hi)
    dev_unit = math.fsum([1.0, 2 * s_hi, 2 * s_lo, -hi, -lo])
    scale = ball_volume_2d(d) * X ** d
    deviation = scale * dev_unit
    vol = ball_volume(BodySpec.heisenberg(d, alpha, 1.0), R)
    saw = agree = None
    if check:
        saw = 2 * scale * _sawtooth_integral(alpha, d, X)
        agree = abs(saw - deviation) / max(abs(deviation), 1.0)
    return EulerMaclaurin(float(R), vol + deviation, vol, deviation, saw, agree)


def euler_maclaurin_grid(lo: float, hi: float, per_octave: int = 8) -> np.ndarray:
    """Dense radii with ``R^2`` a quarter past an integer (for ``R^2`` integer
    and alpha = 2 the deviation vanishes identically)."""
    return offset_grid(dyadic_grid(lo, hi, per_octave))


def em_deviation_fit(d: int, alpha: float, radii, windows_per_decade: float = 3):
    """Growth exponent of the Euler-Maclaurin deviation and the worst
    cross-check disagreement over ``radii``."""
    recs = [euler_maclaurin_E1(d, alpha, R) for R in radii]
    R = np.array([r.R for r in recs])
    dev = np.array([r.deviation for r in recs])
    est = PowerLawEnvelope(window_ratio=10.0 ** (1.0 / windows_per_decade), min_windows=4).fit(R, dev)
    fit = FitResult(est.slope_, est.intercept_, est.max_residual_, (float(R[0]), float(R[-1])))
    return fit, max(r.agreement for r in recs), recs


def em_predicted_exponent(d: int, alpha: float) -> float:
    return 2 * d - min(2.0, 4.0 * d / alpha)


# -- predictions -------------------------------------------------------------

def predict_delta(alpha: float, d: int = 1) -> float:
    """``delta = 2(1/2 - 2/alpha) / (d + 1/2 - 2/alpha)``."""
    if alpha < 2:
        raise ValueError("alpha must be >= 2")
    return 2 * (0.5 - 2 / alpha) / (d + 0.5 - 2 / alpha)


def predict_epsilon(alpha: float, d: int, R: float) -> float:
    """Mollifier width used with the Poisson bound at radius ``R``."""
    if alpha < 2 or R <= 1:
        raise ValueError("need alpha >= 2 and R > 1")
    if alpha <= 4:
        return 1.0 / R
    return R ** (predict_delta(alpha, d) - 1)


def crossover_alpha(theta: float) -> float:
    """The alpha with ``delta(alpha) = theta`` for d = 1."""
    if not 0 <= theta < 2 / 3:
        raise ValueError("theta must lie in [0, 2/3)")
    return (4 - 2 * theta) / (1 - 1.5 * theta)


@dataclass(frozen=True)
class TheoremExponent:
    exponent: float
    log_power: float


class UncoveredRegime(ValueError):
    pass


def theorem_exponent(spec: BodySpec) -> TheoremExponent:
    """Proven growth exponent (and log power) of the error term."""
    d, a = spec.d, spec.alpha
    if spec.is_heisenberg:
        if spec.A != 1 or a < 2:
            raise UncoveredRegime("only A = 1 and alpha >= 2 are covered")
        if a == 2:
            return TheoremExponent(2.0 * d, 0.0)
        if d == 1:
            if a <= 4:
                return TheoremExponent(2.0, 1.0)
            return TheoremExponent(2.0 + predict_delta(a, 1), 1.0)
        if d == 2:
            return TheoremExponent(4.0, 2.0 / 3.0)
        return TheoremExponent(2.0 * d, 0.0)
    if spec.family == "euclidean" and d == 1 and a >= 2:
        return TheoremExponent(max(1.5, 2 - 2 / a), 1.0)
    raise UncoveredRegime(f"no proven exponent for {spec}")


def fit_summary(fit: FitResult, target: TheoremExponent | None, slack: float = 0.2,
                lower: float | None = None) -> dict:
    """The JSON record written by the scan and fit commands."""
    ok = True
    if target is not None:
        ok = fit.exponent <= target.exponent + slack
    if lower is not None:
        ok = ok and fit.exponent >= lower
    return {
        "exponent": fit.exponent,
        "log_constant": fit.log_constant,
        "max_residual": fit.max_residual,
        "window_min": fit.window[0],
        "window_max": fit.window[1],
        "theorem_exponent": None if target is None else target.exponent,
        "theorem_log_power": None if target is None else target.log_power,
        "pass": bool(ok),
    }


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
