import itertools
import math

import mpmath
import pytest

from heisenlattice.counting import build_slice_table


def brute_count(d, alpha, beta, A, R):
    """Count lattice points by enumerating the whole box at 50 digits.

    Ties are resolved by a second evaluation at 100 digits; a value within
    1e-80 of the threshold is treated as equal (inside).
    """
    m = int(math.floor(R)) + 1
    tmax = int(math.floor((R ** alpha / A) ** (1.0 / beta))) + 1
    total = 0
    with mpmath.workdps(100):
        thr = mpmath.mpf(R) ** alpha
        Am = mpmath.mpf(A)
        for z in itertools.product(range(-m, m + 1), repeat=2 * d):
            n2 = sum(c * c for c in z)
            for t in range(-tmax, tmax + 1):
                lhs = mpmath.mpf(n2) ** (mpmath.mpf(alpha) / 2) + Am * mpmath.mpf(abs(t)) ** beta
                if lhs <= thr or abs(lhs - thr) < mpmath.mpf(10) ** -80:
                    total += 1
    return total


@pytest.fixture(scope="session")
def table2():
    return build_slice_table(2, 1 << 16)


@pytest.fixture(scope="session")
def table4():
    return build_slice_table(4, 1 << 12)


@pytest.fixture(scope="session")
def table2_big():
    # covers alpha = 2 scans up to R = 2048
    return build_slice_table(2, 2048 * 2048 + 1)


# criterion number -> list of (part, ok, detail), filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p[1] for p in parts)
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}")
        for part, pok, detail in parts:
            terminalreporter.write_line(f"    [{'ok' if pok else 'FAIL'}] {part}: {detail}")
