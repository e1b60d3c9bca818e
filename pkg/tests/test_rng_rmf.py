import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmflab import rmf, rng
from rmflab.errors import DomainError, TableTooSmallError
from rmflab.modform import LambdaTable


def test_uniforms_random_access():
    full = rng.uniforms(11, 3, 0, 50)
    for start in (0, 1, 5, 13, 47):
        assert np.array_equal(rng.uniforms(11, 3, start, 50 - start), full[start:])
    assert np.all((full >= 0) & (full < 1))


def test_streams_and_domains_differ():
    a = rng.uniforms(1, 0, 0, 8)
    assert not np.array_equal(a, rng.uniforms(1, 1, 0, 8))
    assert not np.array_equal(a, rng.uniforms(2, 0, 0, 8))
    assert not np.array_equal(a, rng.uniforms(1, 0, 0, 8, domain=rng.DOMAIN_WALKS))


def test_uniforms_look_uniform():
    u = rng.uniforms(5, 0, 0, 200_000)
    assert abs(u.mean() - 0.5) < 5 * math.sqrt(1 / 12 / u.size)
    hist, _ = np.histogram(u, bins=10, range=(0, 1))
    chi2 = ((hist - u.size / 10) ** 2 / (u.size / 10)).sum()
    assert chi2 < 30  # 9 degrees of freedom


def test_lazy_prime_value_matches_sample():
    s = rmf.sample_primes("steinhaus", 1000, 4, stream=2)
    for k in (0, 7, 100, s.primes.size - 1):
        assert rmf.prime_value("steinhaus", 4, 2, k) == s.values[k]
    r = rmf.sample_primes("rademacher", 1000, 4, stream=2)
    assert set(np.unique(r.values).tolist()) <= {-1, 1}
    assert r.sign(2) == rmf.prime_value("rademacher", 4, 2, 0)


def test_model_parse():
    assert rmf.RandomModel.parse("Steinhaus") is rmf.RandomModel.STEINHAUS
    with pytest.raises(DomainError):
        rmf.RandomModel.parse("gaussian")


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3000), st.integers(1, 3000))
def test_steinhaus_completely_multiplicative(m, n):
    s = _sample("steinhaus")
    if m * n <= s.n_max:
        assert rmf.h_value(s, m * n) == pytest.approx(rmf.h_value(s, m) * rmf.h_value(s, n), abs=1e-12)
        assert abs(rmf.h_value(s, n)) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3000), st.integers(1, 3000))
def test_rademacher_multiplicative_on_coprime(m, n):
    s = _sample("rademacher")
    if m * n <= s.n_max and math.gcd(m, n) == 1:
        assert rmf.h_value(s, m * n) == rmf.h_value(s, m) * rmf.h_value(s, n)


def test_rademacher_vanishes_off_squarefree():
    s = _sample("rademacher")
    assert rmf.h_value(s, 12) == 0 and rmf.h_value(s, 49) == 0
    assert rmf.h_value(s, 30) == s.sign(2) * s.sign(3) * s.sign(5)


_SAMPLES = {}


def _sample(model):
    if model not in _SAMPLES:
        _SAMPLES[model] = rmf.sample_primes(model, 10**5, 9, 0)
    return _SAMPLES[model]


def direct_sum(sample, lam, x):
    total = 0j
    for n in range(1, x + 1):
        total += rmf.h_value(sample, n) * lam[n]
    return total


@pytest.mark.parametrize("model", ["steinhaus", "rademacher"])
def test_twisted_sum_against_direct(model, lam):
    s = rmf.sample_primes(model, 3000, 2, 0)
    for x in (1, 4, 97, 3000):
        got = rmf.twisted_sum(s, lam, x).value
        assert got == pytest.approx(direct_sum(s, lam, x), abs=1e-9)
    assert rmf.twisted_sum(s, lam, 1).value == 1


@pytest.mark.parametrize("model", ["steinhaus", "rademacher"])
def test_batch_is_bit_identical_to_scalar(model, lam):
    grid = [10, 500, 2000]
    batch = rmf.batch_twisted_sums(model, lam, grid, 40, 3, threads=1)
    for i in (0, 17, 39):
        s = rmf.sample_primes(model, 2000, 3, stream=i)
        vals = [t.value for t in rmf.twisted_sum_prefix(s, lam, grid)]
        assert batch[i].tolist() == vals


def test_batch_thread_invariance(lam):
    a = rmf.batch_twisted_sums("steinhaus", lam, [100, 5000], 70, 1, threads=1)
    b = rmf.batch_twisted_sums("steinhaus", lam, [100, 5000], 70, 1, threads=4)
    assert a.tobytes() == b.tobytes()


def test_unit_weights_give_plain_sum():
    unit = LambdaTable.unit(500)
    s = rmf.sample_primes("rademacher", 500, 0)
    expect = sum(rmf.h_value(s, n).real for n in range(1, 501))
    assert rmf.twisted_sum(s, unit, 500).value.real == pytest.approx(expect, abs=1e-12)


def test_range_errors(lam):
    s = rmf.sample_primes("steinhaus", 100, 0)
    with pytest.raises(TableTooSmallError):
        rmf.twisted_sum(s, lam, 101)
    with pytest.raises(DomainError):
        rmf.twisted_sum(s, lam, 0)
    with pytest.raises(DomainError):
        rmf.h_value(s, 0)
    with pytest.raises(DomainError):
        rmf.sample_primes("steinhaus", 1, 0)
    with pytest.raises(DomainError):
        s.angle(4)
