import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmflab import modform
from rmflab.errors import BudgetExceededError, ConsistencyError, DeligneViolationError, DomainError, TableTooSmallError

TAU_1_TO_10 = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]


def test_first_coefficients():
    assert [int(t) for t in modform.build_tau_table(10).tau[1:]] == TAU_1_TO_10


def test_ntt_table_matches_direct_expansion():
    n = 600
    tab = modform.build_tau_table(n)
    assert [int(t) for t in tab.tau[1:]] == modform.expand_delta_direct(n)


def test_jacobi_cube_against_product():
    n = 200
    direct = [0] * n
    direct[0] = 1
    for k in range(1, n):
        for _ in range(3):
            for j in range(n - 1, k - 1, -1):
                direct[j] -= direct[j - k]
    assert modform.jacobi_cube(n).tolist() == direct


def test_budget_cap():
    with pytest.raises(BudgetExceededError):
        modform.build_tau_table(10, cap=5)
    with pytest.raises(DomainError):
        modform.build_tau_table(0)


def test_invariants_hold(tau_table):
    counts = tau_table.check_invariants()
    assert counts["congruence"] == 9592
    assert counts["multiplicative"] + counts["hecke"] + counts["congruence"] == modform.N_EXACT - 1


def test_invariants_detect_tampering():
    tab = modform.build_tau_table(200)
    tau = tab.tau.copy()
    tau[6] += 1
    with pytest.raises(ConsistencyError):
        modform.TauTable(200, tau).check_invariants()


def test_lambda_normalisation(tau_table, lam):
    assert lam[2] == pytest.approx(-24 / 2**5.5, rel=1e-15)
    assert lam[1] == 1.0
    for n in (7, 691, 99991):
        assert lam[n] == pytest.approx(int(tau_table.tau[n]) / n**5.5, rel=1e-14)


def test_deligne_bound(lam):
    rep = modform.divisor_bound_report(lam)
    assert rep.max_ratio <= 1 + modform.DELIGNE_SLACK
    bad = modform.LambdaTable(4, np.array([0.0, 1.0, 2.5, 0.0, 0.0]))
    with pytest.raises(DeligneViolationError):
        modform.divisor_bound_report(bad)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_prime_power_recursion_matches_table(lam, p):
    m = 1
    while p ** m <= lam.n_max:
        assert modform.lambda_prime_power(lam[p], m) == pytest.approx(lam[p**m], rel=1e-9, abs=1e-12)
        m += 1


@settings(max_examples=200)
@given(st.floats(0.01, math.pi - 0.01), st.integers(0, 40))
def test_prime_power_is_chebyshev(theta, m):
    # lambda(p^m) = sin((m+1) theta) / sin(theta) with lambda(p) = 2 cos(theta)
    got = modform.lambda_prime_power(2 * math.cos(theta), m)
    assert got == pytest.approx(math.sin((m + 1) * theta) / math.sin(theta), abs=1e-9 * (m + 1) ** 2)


def test_prime_power_domain():
    with pytest.raises(DomainError):
        modform.lambda_prime_power(2.5, 3)
    with pytest.raises(DomainError):
        modform.lambda_prime_power(1.0, -1)
    assert modform.lambda_prime_power(0.3, 0) == 1.0


def test_satake_angle(lam):
    s = modform.SatakeAngle.from_lambda(2, lam[2])
    assert abs(s.alpha) == pytest.approx(1.0)
    assert (s.alpha + s.beta).real == pytest.approx(lam[2])
    assert (s.alpha * s.beta) == pytest.approx(1.0)


def test_csv_and_binary_roundtrip(tmp_path):
    tab = modform.build_tau_table(300)
    modform.write_tau_csv(tab, tmp_path / "tau.csv")
    back = modform.read_tau_csv(tmp_path / "tau.csv")
    assert back.n_max == 300 and list(back.tau) == list(tab.tau)
    text = (tmp_path / "tau.csv").read_text().splitlines()
    assert text[0] == "n,tau" and len(text) == 301
    lam = modform.lambda_from_tau(tab)
    modform.write_lambda_bin(lam, tmp_path / "lam.bin")
    raw = (tmp_path / "lam.bin").read_bytes()
    assert raw[:4] == b"RMFL" and len(raw) == 13 + 8 * 300
    assert np.array_equal(modform.read_lambda_bin(tmp_path / "lam.bin").lam, lam.lam)


def test_require(lam):
    lam.require(10**5)
    with pytest.raises(TableTooSmallError):
        lam.require(10**5 + 1)


def test_unit_table():
    u = modform.LambdaTable.unit(10)
    assert u.lam[0] == 0 and np.all(u.lam[1:] == 1)
