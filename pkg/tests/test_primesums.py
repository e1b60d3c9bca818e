import math

import numpy as np
import pytest
from scipy import special

from rmflab import primesums as ps
from rmflab.errors import DomainError, PoleError, TableTooSmallError
from rmflab.modform import LambdaTable
from rmflab.sieve import sieve

MERTENS_CONSTANT = 0.2614972128476428


def test_unit_weights_recover_mertens(ptab):
    unit = LambdaTable.unit(10**5)
    v = ps.mertens_lambda([1e5], unit, ptab).values[0]
    # sum_{p<=x} 1/p - log log x - M = O(1/log^2 x)
    assert abs(v - MERTENS_CONSTANT) < 1e-3


def test_li_against_exponential_integral():
    for x in (3.0, 100.0, 1e5, 1e7):
        expect = special.expi(math.log(x)) - special.expi(math.log(2.0))
        assert ps.li(x) == pytest.approx(expect, rel=1e-10)
    with pytest.raises(DomainError):
        ps.li(1.5)


def test_series_against_direct_loops(lam, ptab):
    x = 5000
    primes = [int(p) for p in ptab.upto(x)]
    direct_m = sum(lam[p] ** 2 / p for p in primes) - math.log(math.log(x))
    direct_w = sum(lam[p] ** 2 * math.log(p) for p in primes) / x
    direct_pi = sum(lam[p] ** 2 for p in primes)
    direct_rs = sum(lam[n] ** 2 for n in range(1, x + 1)) / x
    assert ps.mertens_lambda([x], lam, ptab).values[0] == pytest.approx(direct_m, abs=1e-12)
    assert ps.weighted_pnt([x], lam, ptab).values[0] == pytest.approx(direct_w, rel=1e-12)
    assert ps.pi_f([x], lam, ptab).values[0] * ps.li(x) == pytest.approx(direct_pi, rel=1e-12)
    assert ps.rankin_selberg([x], lam).values[0] == pytest.approx(direct_rs, rel=1e-12)


def test_prime_number_theorem_shape(lam, ptab):
    w = ps.weighted_pnt([1e3, 1e4, 1e5], lam, ptab).values
    r = ps.pi_f([1e3, 1e4, 1e5], lam, ptab).values
    assert abs(w[-1] - 1) < 0.02 and abs(r[-1] - 1) < 0.02


def test_small_x_edges(lam, ptab):
    assert ps.rankin_selberg([1], lam).values == (1.0,)
    with pytest.raises(DomainError):
        ps.mertens_lambda([1.5], lam, ptab)
    with pytest.raises(DomainError):
        ps.pi_f([2], lam, ptab)
    with pytest.raises(TableTooSmallError):
        ps.rankin_selberg([2e5], lam)


def test_series_validation():
    with pytest.raises(ValueError):
        ps.PrimeSumSeries((2.0, 1.0), (0.0, 0.0), "pi_f")
    with pytest.raises(ValueError):
        ps.PrimeSumSeries((1.0,), (math.nan,), "pi_f")
    with pytest.raises(ValueError):
        ps.PrimeSumSeries((1.0,), (0.0,), "nope")


def test_sym2_factor_matches_satake_form(lam, ptab):
    # 1/L_p = (1 - a^2 X)(1 - X)(1 - b^2 X) with X = p^-s
    p = ptab.upto(50)
    logs = ps.sym2_factor_logs(1.0, p, lam.lam[p])
    for q, lg in zip(p.tolist(), logs.tolist()):
        theta = math.acos(lam[q] / 2)
        a = complex(math.cos(theta), math.sin(theta))
        X = 1 / q
        factor = ((1 - a * a * X) * (1 - X) * (1 - X / (a * a))).real
        assert lg == pytest.approx(-math.log(factor), rel=1e-12)


def test_sym2_euler_limits_and_stability(lam, ptab):
    assert ps.sym2_euler(math.inf, 1e5, lam, ptab) == 1.0
    vals = [v for _, v in ps.sym2_stability(1.0, [1e4, 3e4, 1e5], lam, ptab)]
    assert max(vals) / min(vals) - 1 < 0.01
    with pytest.raises(DomainError):
        ps.sym2_euler(0.5, 100, lam, ptab)


def test_sym2_pole_guard():
    p = np.array([2])
    with pytest.raises(PoleError):
        ps.sym2_factor_logs(0.0, p, np.array([2.0]))


def test_rankin_selberg_constant_close_to_mean_square(lam, ptab):
    c = ps.rankin_selberg_constant(1e5, lam, ptab)
    assert c == pytest.approx(ps.rankin_selberg([1e5], lam).values[0], rel=0.05)


def test_csv_format(tmp_path, lam, ptab):
    s = ps.mertens_lambda([100, 1000], lam, ptab)
    ps.write_series_csv([s], tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "x,value,kind"
    assert float(lines[1].split(",")[1]) == s.values[0]
