import json
import math

import numpy as np
import pytest

from heisenlattice.analysis import (
    ErrorScan, ExponentTable, UncoveredRegime, crossover_alpha, dyadic_grid, em_deviation_fit,
    em_predicted_exponent, error_scan, euler_maclaurin_E1, euler_maclaurin_grid, fit_summary,
    fit_sup_exponent, offset_grid, parse_grid, predict_delta, predict_epsilon, theorem_exponent,
    write_json,
)
from heisenlattice.counting import CountResult, count_direct
from heisenlattice.geometry import BodySpec
from heisenlattice.volume import ball_volume_2d, unit_volume_closed

H12 = BodySpec.heisenberg(1, 2.0, 1.0)


def test_small_scan(table2):
    scan = error_scan(H12, [1, 2], table2)
    assert [s.count for s in scan.samples] == [7, count_direct(H12, 2)]
    one = error_scan(H12, [3.5], table2)
    assert len(one.samples) == 1
    with pytest.raises(ValueError):
        error_scan(H12, [2, 1], table2)
    with pytest.raises(ValueError):
        ErrorScan(H12, [CountResult.make(2, 1, 1.0), CountResult.make(2, 1, 1.0)])


def test_scan_workers_are_bit_identical(table2):
    grid = parse_grid("offset-dyadic:8:128:4")
    a = error_scan(H12, grid, table2, workers=1)
    b = error_scan(H12, grid, table2, workers=3)
    assert a.samples == b.samples


def test_alpha2_error_is_order_r2(table2_big):
    scan = error_scan(H12, parse_grid("offset-dyadic:8:2048"), table2_big)
    ratio = np.abs(scan.errors) / scan.R ** 2
    assert np.all(ratio <= 2 * ratio.max()) and ratio.max() < 10


def test_synthetic_fit():
    R = dyadic_grid(8, 2048, 4)
    scan = ErrorScan(H12, [CountResult(r, 0, -r * r, r * r) for r in R])
    fit = fit_sup_exponent(scan)
    assert fit.exponent == pytest.approx(2.0, abs=1e-9)
    assert fit.window == (8.0, 2048.0)


def test_csv_round_trip(tmp_path, table2):
    scan = error_scan(H12, parse_grid("offset-dyadic:8:256:2"), table2)
    p = tmp_path / "scan.csv"
    scan.write_csv(p)
    back = ErrorScan.read_csv(H12, p)
    assert back.samples == scan.samples
    assert fit_sup_exponent(back) == fit_sup_exponent(scan)


def test_grids():
    assert list(parse_grid("dyadic:8:64")) == [8, 16, 32, 64]
    assert np.allclose(parse_grid("dyadic:1:4:2"), [1, 2 ** 0.5, 2, 2 ** 1.5, 4])
    assert np.allclose(parse_grid("linear:1:2:0.25"), [1, 1.25, 1.5, 1.75, 2])
    g = parse_grid("offset-dyadic:8:64")
    assert np.allclose(g ** 2 - np.floor(g ** 2), 0.25)
    assert np.allclose(offset_grid([3.0, 3.01]), [math.sqrt(9.25)])
    for bad in ("dyadic:8", "dyadic:0:4", "cubic:1:2", "linear:1:2:0", "dyadic:a:b", "dyadic:1:4:0"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_exponent_table():
    t = ExponentTable()
    assert t.theta1[2] == 0.5 and t.is_conjectural(2) and "conjectural" in t.describe(2)
    assert t.theta1[4] == 2 and t.theta1[8] == 6 and not t.is_conjectural(4)
    assert t.theta2[4] == pytest.approx(2 / 3) and t.theta2[6] == 0
    assert ExponentTable(0.6).theta1[2] == 0.6


def test_predict_delta():
    for d in (1, 2, 3):
        assert predict_delta(4, d) == 0
    assert predict_delta(12) == pytest.approx(0.5, abs=1e-15)
    assert predict_delta(1e12) == pytest.approx(2 / 3, abs=1e-9)
    assert predict_delta(8) == pytest.approx((1 - 4 / 8) / (1.5 - 2 / 8), abs=1e-15)
    a = np.linspace(4, 200, 500)
    assert np.all(np.diff([predict_delta(x) for x in a]) > 0)
    with pytest.raises(ValueError):
        predict_delta(1.5)


def test_crossover():
    assert crossover_alpha(0.5) == pytest.approx(12.0)
    assert predict_delta(crossover_alpha(0.3)) == pytest.approx(0.3)


def test_predict_epsilon():
    assert predict_epsilon(3, 1, 100) == pytest.approx(0.01)
    assert predict_epsilon(4, 1, 100) == pytest.approx(0.01)
    assert predict_epsilon(8, 1, 100) == pytest.approx(100 ** -0.6)
    with pytest.raises(ValueError):
        predict_epsilon(3, 1, 1)


def test_theorem_exponent():
    te = theorem_exponent(BodySpec.heisenberg(3, 5.0, 1.0))
    assert (te.exponent, te.log_power) == (6.0, 0.0)
    te = theorem_exponent(BodySpec.heisenberg(2, 7.0, 1.0))
    assert (te.exponent, te.log_power) == (4.0, pytest.approx(2 / 3))
    te = theorem_exponent(BodySpec.euclidean(1, 4.0))
    assert (te.exponent, te.log_power) == (1.5, 1.0)
    assert theorem_exponent(BodySpec.euclidean(1, 8.0)).exponent == 1.75
    assert theorem_exponent(H12).exponent == 2.0
    assert theorem_exponent(BodySpec.heisenberg(1, 3.0, 1.0)).exponent == 2.0
    assert theorem_exponent(BodySpec.heisenberg(1, 8.0, 1.0)).exponent == pytest.approx(2.4)
    with pytest.raises(UncoveredRegime):
        theorem_exponent(BodySpec.heisenberg(1, 1.5, 1.0))
    with pytest.raises(UncoveredRegime):
        theorem_exponent(BodySpec.heisenberg(1, 4.0, 2.0))


def test_fit_summary_json(tmp_path):
    from heisenlattice.spectral import FitResult
    fit = FitResult(2.05, 0.1, 0.2, (8.0, 2048.0))
    s = fit_summary(fit, theorem_exponent(H12), lower=1.7)
    assert s["pass"] and s["theorem_exponent"] == 2.0 and s["window_max"] == 2048.0
    assert not fit_summary(fit, theorem_exponent(H12), lower=2.1)["pass"]
    write_json(s, tmp_path / "f.json")
    assert json.loads((tmp_path / "f.json").read_text()) == s


def _e1_brute(d, alpha, R):
    X = R * R
    K = int(math.floor(X))
    k = np.arange(-K, K + 1)
    return ball_volume_2d(d) * math.fsum((R ** alpha - np.abs(k) ** (alpha / 2)) ** (2 * d / alpha))


@pytest.mark.parametrize("d,alpha", [(1, 2.0), (1, 4.0), (1, 8.0), (2, 4.0)])
def test_euler_maclaurin_matches_direct_sum(d, alpha):
    for R in (2.0, 5.3, 17.9):
        rec = euler_maclaurin_E1(d, alpha, R)
        assert rec.E1 == pytest.approx(_e1_brute(d, alpha, R), rel=1e-12)
        assert rec.volume == pytest.approx(unit_volume_closed(BodySpec.heisenberg(d, alpha, 1.0)) * R ** (2 * d + 2))
        assert rec.agreement <= 1e-6


def test_euler_maclaurin_integer_square():
    # alpha = 2: the slices are linear in |k| and the trapezoid sum is exact
    for R in (2.0, 3.0, math.sqrt(7), 10.0):
        rec = euler_maclaurin_E1(1, 2.0, R)
        assert abs(rec.deviation) <= 1e-9 * rec.volume
        assert abs(rec.sawtooth - rec.deviation) <= 1e-6 * max(abs(rec.deviation), 1)
    with pytest.raises(ValueError):
        euler_maclaurin_E1(1, 2.0, 1.5)


def test_euler_maclaurin_growth_small():
    fit, agree, _ = em_deviation_fit(1, 4.0, euler_maclaurin_grid(4, 128, 4))
    assert fit.exponent <= em_predicted_exponent(1, 4.0) + 0.15 and agree <= 1e-6
    assert em_predicted_exponent(2, 4.0) == 2.0 and em_predicted_exponent(1, 8.0) == 1.5
