import math

import numpy as np
import pytest

from rmflab import moments, rmf
from rmflab.errors import DomainError, TableTooSmallError


def test_q_zero_is_exactly_one(lam):
    for model in ("steinhaus", "rademacher"):
        e = moments.estimate_moment(model, lam, 50, 0.0, 200, 1)
        assert e.mean == 1.0 and e.stderr == 0.0 and e.ci_low == e.ci_high == 1.0


@pytest.mark.parametrize("model", ["steinhaus", "rademacher"])
def test_second_moment_oracle(model, lam):
    exact = moments.exact_second_moment(model, lam, 1000)
    e = moments.estimate_moment(model, lam, 1000, 1.0, 4000, 7)
    assert abs(e.mean - exact) <= 4 * e.stderr
    assert e.ci_low <= e.mean <= e.ci_high


def test_exact_second_moment_small(lam):
    assert moments.exact_second_moment("steinhaus", lam, 1) == 1.0
    assert moments.exact_second_moment("steinhaus", lam, 4) == pytest.approx(
        1 + lam[2] ** 2 + lam[3] ** 2 + lam[4] ** 2, rel=1e-15)
    assert moments.exact_second_moment("rademacher", lam, 4) == pytest.approx(
        1 + lam[2] ** 2 + lam[3] ** 2, rel=1e-15)
    with pytest.raises(TableTooSmallError):
        moments.exact_second_moment("steinhaus", lam, 10**6)


def test_grid_matches_single_estimates(lam):
    grid = moments.moment_grid("steinhaus", lam, [100, 1000], [0.5, 1.0], 300, 4, threads=1)
    single = moments.estimate_moment("steinhaus", lam, 1000, 0.5, 300, 4, threads=3)
    # sample paths are shared, so the x=1000 entry agrees bit for bit
    match = [e for e in grid if e.x == 1000 and e.q == 0.5][0]
    assert match.mean == single.mean and match.stderr == single.stderr


def test_direct_mean_oracle(lam):
    M = 150
    e = moments.estimate_moment("rademacher", lam, 200, 0.75, M, 9)
    vals = []
    for i in range(M):
        s = rmf.sample_primes("rademacher", 200, 9, stream=i)
        vals.append(abs(rmf.twisted_sum(s, lam, 200).value) ** 1.5)
    assert e.mean == pytest.approx(math.fsum(vals) / M, rel=1e-13)
    assert e.stderr == pytest.approx(np.std(vals, ddof=1) / math.sqrt(M), rel=1e-10)


def test_lyapunov_in_q(lam):
    est = moments.moment_grid("steinhaus", lam, [2000], [0.25, 0.5, 0.75, 1.0], 2000, 3)
    norms = [(e.mean ** (1 / e.q), e.stderr / e.mean / e.q * e.mean ** (1 / e.q)) for e in est]
    for (a, sa), (b, sb) in zip(norms, norms[1:]):
        assert b >= a - 2 * math.hypot(sa, sb)


def test_parameter_validation(lam):
    with pytest.raises(DomainError):
        moments.estimate_moment("steinhaus", lam, 100, 1.5, 200, 0)
    with pytest.raises(DomainError):
        moments.estimate_moment("steinhaus", lam, 100, 0.5, 50, 0)
    with pytest.raises(DomainError):
        moments.estimate_moment("steinhaus", lam, 1, 0.5, 200, 0)
    with pytest.raises(TableTooSmallError):
        moments.estimate_moment("steinhaus", lam, 10**6, 0.5, 200, 0)


def test_theorem_ratio(lam):
    est = moments.moment_grid("steinhaus", lam, [1000], [0.0, 1.0], 400, 2)
    pts = moments.theorem_ratio(est)
    assert pts[0].ratio == 1.0
    assert pts[1].ratio == pytest.approx(est[1].mean / 1000)
    fake = moments.MomentEstimate("steinhaus", 2, 0.5, 100, 1.0, 0.0, 1.0, 1.0, 0)
    with pytest.raises(DomainError):
        moments.theorem_ratio([fake])
    with pytest.raises(DomainError):
        moments.theorem_ratio([])
    summ = moments.ratio_summary(pts)
    assert summ[0.0]["spread"] == 1.0


def test_khintchine_indicator(lam):
    a = np.zeros(10)
    a[0] = 1.0
    for r in moments.khintchine_bounds(lam, a, 3.0, 50, 0):
        assert r.moment == 1.0 and r.l2_mass == 1.0 and r.c_emp == 1.0 and r.stderr == 0.0


def test_khintchine_second_moment_orthogonality(lam):
    for r in moments.khintchine_bounds(lam, np.ones(100), 2.0, 20_000, 5):
        assert abs(r.moment - r.l2_mass) <= 4 * r.stderr
        assert r.upper_bound == pytest.approx(2 * r.l2_mass)


def test_khintchine_upper_constant():
    # 2^(m/2-1) m Gamma(m/2) is the Gaussian-tail integral m * int mu^(m-1) exp(-mu^2/2) dmu
    from scipy import integrate

    for m in (1.5, 2.0, 4.0, 6.0):
        integral, _ = integrate.quad(lambda u: m * u ** (m - 1) * math.exp(-u * u / 2), 0, np.inf)
        assert moments.khintchine_upper(m, 1.0) == pytest.approx(integral, rel=1e-10)
    with pytest.raises(DomainError):
        moments.khintchine_bounds(None, np.ones(3), 7.0, 100, 0)


def test_csv_and_json(tmp_path, lam):
    est = moments.moment_grid("steinhaus", lam, [1000], [0.5], 200, 1)
    moments.write_moments_csv(est, tmp_path / "m.csv")
    moments.write_moments_json(est, tmp_path / "m.json")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "model,x,q,M,seed,mean,stderr,ci_low,ci_high,ratio"
    assert len(lines) == 2
    import json

    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc[0]["mean"] == est[0].mean
