"""Partial Euler products of h(n) lambda(n) and Monte Carlo checks of their moments.

Throughout, ``sigma`` is the offset from the critical line: products are
evaluated at s = 1/2 + sigma + it.  Steinhaus local factors use the quadratic
form (1 - alpha z)(1 - beta z) = 1 - lambda(p) z + z^2 with z = h(p) p^-s.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize

from . import rng
from .errors import DomainError, HypothesisError, PoleError, TableTooSmallError
from .modform import LambdaTable, lambda_prime_power
from .parallel import blocks, map_blocks
from .rmf import PrimeSample, RandomModel, _values_from_uniforms
from .sieve import PrimeTable

MC_BLOCK = 250


@dataclass(frozen=True)
class EulerPoint:
    sigma: float
    t: float
    value: complex
    log_value: complex = 0j


@dataclass
class IdentityReport:
    mc_mean: complex
    mc_stderr: float
    analytic: complex
    z_score: float
    M: int
    op: str = ""
    seed: int = 0
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "op": self.op,
            "params": self.params,
            "mc_mean": [self.mc_mean.real, self.mc_mean.imag],
            "mc_stderr": self.mc_stderr,
            "analytic": [self.analytic.real, self.analytic.imag],
            "z": self.z_score,
            "M": self.M,
            "seed": self.seed,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def shell_bounds(x: float, l: int) -> tuple[float, float]:
    """(x^e^-(l+2), x^e^-(l+1)]: the prime range of the l-th shell product."""
    return x ** math.exp(-(l + 2)), x ** math.exp(-(l + 1))


def _log_factors(model: RandomModel, p: np.ndarray, lam_p: np.ndarray, values: np.ndarray, s: complex) -> np.ndarray:
    """Complex log of each local factor of F at s (already signed: log F = sum)."""
    ps = np.exp(-s * np.log(p.astype(np.float64)))
    if model is RandomModel.STEINHAUS:
        z = np.exp(1j * values) * ps
        q = 1.0 - lam_p * z + z * z
        if np.any(q == 0):
            raise PoleError("Steinhaus factor vanishes")
        return -np.log(q)
    q = 1.0 + lam_p * values.astype(np.float64) * ps
    if np.any(q == 0):
        raise PoleError("Rademacher factor vanishes")
    return np.log(q)


def _sum_complex(v: np.ndarray) -> complex:
    return complex(math.fsum(v.real.tolist()), math.fsum(v.imag.tolist()))


def _product_over(sample: PrimeSample, lam: LambdaTable, lo: float, hi: float, sigma: float, t: float) -> EulerPoint:
    if sample.model is RandomModel.STEINHAUS and not sigma > -0.5:
        raise DomainError("Steinhaus factors need sigma > -1/2")
    if hi > sample.n_max or hi > lam.n_max:
        raise TableTooSmallError(f"prime bound {hi:g} exceeds the sample or lambda table")
    i0 = int(np.searchsorted(sample.primes, math.floor(lo), side="right")) if lo >= 2 else 0
    i1 = int(np.searchsorted(sample.primes, math.floor(hi), side="right"))
    if i1 <= i0:
        return EulerPoint(sigma, t, 1.0 + 0j, 0j)
    p = sample.primes[i0:i1]
    logs = _log_factors(sample.model, p, lam.lam[p], sample.values[i0:i1], complex(0.5 + sigma, t))
    total = _sum_complex(logs)
    return EulerPoint(sigma, t, complex(np.exp(total)), total)


def eval_F(sample: PrimeSample, lam: LambdaTable, P: float, sigma: float, t: float) -> EulerPoint:
    """Product over p <= P of the local factors at s = 1/2 + sigma + it."""
    return _product_over(sample, lam, 1.0, P, sigma, t)


def eval_I(sample: PrimeSample, lam: LambdaTable, l: int, x: float, sigma: float, t: float) -> EulerPoint:
    if l < 0:
        raise DomainError("shell index must be non-negative")
    lo, hi = shell_bounds(x, l)
    return _product_over(sample, lam, lo, hi, sigma, t)


# --- Monte Carlo identities -------------------------------------------------

def _prime_slice(ptab: PrimeTable, x_lo: float, x_hi: float) -> tuple[int, int, np.ndarray]:
    i0, i1 = ptab.count_upto(x_lo), ptab.count_upto(x_hi)
    return i0, i1, ptab.primes[i0:i1]


def _analytic_exponent(model: RandomModel, p: np.ndarray, lam_p: np.ndarray, sigma: float,
                       t: float, u: float, t1: float) -> complex:
    logp = np.log(p.astype(np.float64))
    weight = lam_p**2 / np.exp((1.0 + 2.0 * sigma) * logp)
    if model is RandomModel.STEINHAUS:
        shape = 1.0 + 1j * u * np.cos(t * logp) - u * u / 4.0
    else:
        t12 = t1 + t
        c = 2.0 * np.cos(t1 * logp) * np.cos(t12 * logp) - 0.5 * np.cos(2.0 * t12 * logp)
        shape = 1.0 + 1j * u * c - (u * u / 4.0) * (1.0 + np.cos(2.0 * t12 * logp))
    return _sum_complex(np.asarray(weight * shape, dtype=np.complex128))


def _mc_log_values(model, p, lam_p, vals, sigma, t, u, t1) -> np.ndarray:
    """log of the random product for each sample row (complex when u != 0)."""
    logp = np.log(p.astype(np.float64))
    r = np.exp(-(0.5 + sigma) * logp)
    if model is RandomModel.STEINHAUS:
        h = np.exp(1j * vals)
        z0 = h * r
        base = -2.0 * np.log(np.abs(1.0 - lam_p * z0 + z0 * z0))
        if u:
            zt = z0 * np.exp(-1j * t * logp)
            base = base - 1j * u * np.log(np.abs(1.0 - lam_p * zt + zt * zt))
    else:
        hv = vals.astype(np.float64)
        w1 = 1.0 + lam_p * hv * r * np.exp(-1j * t1 * logp)
        base = 2.0 * np.log(np.abs(w1))
        if u:
            w2 = 1.0 + lam_p * hv * r * np.exp(-1j * (t1 + t) * logp)
            base = base + 1j * u * np.log(np.abs(w2))
    return np.asarray(base, dtype=np.complex128)


def _identity_mc(model, ptab, lam, sigma, t, u, t1, x_lo, x_hi, M, seed, threads, op, params) -> IdentityReport:
    i0, i1, p = _prime_slice(ptab, x_lo, x_hi)
    analytic = complex(np.exp(_analytic_exponent(model, p, lam.lam[p], sigma, t, u, t1)))
    if p.size == 0:
        return IdentityReport(1 + 0j, 0.0, analytic, 0.0, M, op, seed, params)
    lam_p = lam.lam[p]

    def run(part: range) -> np.ndarray:
        vals = np.vstack([_values_from_uniforms(model, rng.uniforms(seed, i, i0, i1 - i0)) for i in part])
        logs = _mc_log_values(model, p, lam_p, vals, sigma, t, u, t1)
        if not u and not t1:
            return np.exp(np.array([math.fsum(row) for row in logs.real.tolist()])).astype(np.complex128)
        return np.array([np.exp(_sum_complex(row)) for row in logs])

    X = np.concatenate(map_blocks(run, blocks(M, MC_BLOCK), threads))
    mean = _sum_complex(X) / M
    stderr = math.sqrt(math.fsum((np.abs(X - mean) ** 2).tolist()) / (M - 1) / M) if M > 1 else math.inf
    z = abs(mean - analytic) / stderr if stderr > 0 else 0.0
    return IdentityReport(mean, stderr, analytic, z, M, op, seed, params)


def expectation_identity(model, sigma: float, x_lo: float, x_hi: float, M: int, seed: int, *,
                         lam: LambdaTable, ptab: PrimeTable, threads: int | None = None) -> IdentityReport:
    """E prod_{x_lo<p<=x_hi} |factor|^(-2) (Steinhaus) or |factor|^2 (Rademacher)
    against exp(sum lambda^2(p) / p^(1+2 sigma))."""
    model = RandomModel.parse(model)
    if x_lo < 400:
        raise HypothesisError("x_lo must be at least 400")
    if x_hi < x_lo:
        raise DomainError("x_hi must be at least x_lo")
    if sigma < -1.0 / math.log(x_hi):
        raise HypothesisError("sigma must be at least -1/log(x_hi)")
    lam.require(x_hi)
    params = {"model": model.value, "sigma": sigma, "x_lo": x_lo, "x_hi": x_hi}
    return _identity_mc(model, ptab, lam, sigma, 0.0, 0.0, 0.0, x_lo, x_hi, M, seed, threads,
                        "expectation_identity", params)


def char_identity(model, sigma: float, t: float, u: float, x_lo: float, x_hi: float, M: int, seed: int, *,
                  lam: LambdaTable, ptab: PrimeTable, t1: float = 0.0, u_max: float = 4.0,
                  threads: int | None = None) -> IdentityReport:
    """Mixed product with an |.|^(iu) factor at height t, against its Gaussian-type exponent.

    For Rademacher the first factor sits at height t1 and the second at t1 + t.
    """
    model = RandomModel.parse(model)
    if abs(u) > u_max:
        raise HypothesisError(f"|u| must be at most {u_max}")
    if x_lo < 400 * (1 + u * u):
        raise HypothesisError("x_lo must be at least 400(1 + u^2)")
    if x_hi < x_lo:
        raise DomainError("x_hi must be at least x_lo")
    if sigma < -1.0 / math.log(x_hi):
        raise HypothesisError("sigma must be at least -1/log(x_hi)")
    lam.require(x_hi)
    params = {"model": model.value, "sigma": sigma, "t": t, "u": u, "t1": t1, "x_lo": x_lo, "x_hi": x_hi}
    return _identity_mc(model, ptab, lam, sigma, t, u, t1, x_lo, x_hi, M, seed, threads, "char_identity", params)


# --- Parseval ---------------------------------------------------------------

@dataclass
class ParsevalReport:
    sigma: float
    abscissa: float
    P: float
    z_max: float
    t_max: float
    n_terms: int
    lhs_truncated: float
    lhs_tail_bound: float
    lhs_tail_expected: float
    lhs_exact: bool
    rhs: float
    rhs_doubled: float
    rhs_tail_heuristic: float
    rel_gap: float

    def to_json(self) -> dict:
        return asdict(self)


def smooth_coefficients(sample: PrimeSample, lam: LambdaTable, P: float, z_max: float):
    """P-smooth n <= z_max (ascending) with a_n = h(n) lambda(n), and whether
    every n in the support was reached."""
    i1 = int(np.searchsorted(sample.primes, math.floor(P), side="right"))
    if P > sample.n_max or P > lam.n_max:
        raise TableTooSmallError("P exceeds the sample or lambda table")
    ns = np.array([1], dtype=np.int64)
    a = np.array([1.0 + 0j])
    complete = True
    for k in range(i1):
        p = int(sample.primes[k])
        lp = float(lam.lam[p])
        max_pow = 1 if sample.model is RandomModel.RADEMACHER else 64
        new_n, new_a = [ns], [a]
        pk, m = p, 1
        while m <= max_pow:
            keep = ns <= z_max // pk
            if not keep.any():
                complete = False
                break
            if sample.model is RandomModel.STEINHAUS:
                hk = np.exp(1j * m * float(sample.values[k]))
            else:
                hk = float(sample.values[k])
            new_n.append(ns[keep] * pk)
            new_a.append(a[keep] * (hk * lambda_prime_power(lp, m)))
            if not keep.all():
                complete = False
            pk *= p
            m += 1
        ns = np.concatenate(new_n)
        a = np.concatenate(new_a)
    order = np.argsort(ns, kind="stable")
    return ns[order], a[order], complete


def _local_sums(model: RandomModel, lam_p: np.ndarray, p: np.ndarray, exponent: float, power: int) -> np.ndarray:
    """sum_m |lambda(p^m)|^power p^(-m exponent) for each p."""
    out = np.empty(p.size)
    for k, (lp, pp) in enumerate(zip(lam_p.tolist(), p.tolist())):
        r = pp ** (-exponent)
        if model is RandomModel.RADEMACHER:
            out[k] = 1.0 + abs(lp) ** power * r
            continue
        terms, prev, cur, m, rm = [1.0], 0.0, 1.0, 0, 1.0
        while True:
            prev, cur = cur, lp * cur - prev
            m += 1
            rm *= r
            term = abs(cur) ** power * rm
            terms.append(term)
            if (m + 1) ** power * rm / (1 - r) < 1e-17 * math.fsum(terms):
                break
        out[k] = math.fsum(terms)
    return out


def _rankin_tail_bound(model, lam_p, p, c: float, z_max: float) -> float:
    # |A(x)| <= sum_{n<=x} |a_n| <= x^d prod_p sum_m |lambda(p^m)| p^(-m d) for 0 < d < c
    def log_bound(d: float) -> float:
        logC = float(np.sum(np.log(_local_sums(model, lam_p, p, d, 1))))
        return 2 * logC + (2 * d - 2 * c) * math.log(z_max) - math.log(2 * c - 2 * d)

    res = optimize.minimize_scalar(log_bound, bounds=(0.02 * c, 0.98 * c), method="bounded",
                                   options={"xatol": 1e-4})
    return math.exp(res.fun)


def _rhs_integral(sample, lam, P, sigma, c, lo: int, hi: int) -> float:
    i1 = int(np.searchsorted(sample.primes, math.floor(P), side="right"))
    p = sample.primes[:i1]
    lam_p = lam.lam[p]
    vals = sample.values[:i1]

    def integrand(t: float) -> float:
        if not i1:
            return 1.0 / (c * c + t * t)
        lf = _log_factors(sample.model, p, lam_p, vals, complex(c, t))
        return math.exp(2.0 * float(np.sum(lf.real))) / (c * c + t * t)

    pieces = []
    for k in range(lo, hi):
        val, _ = integrate.quad(integrand, k, k + 1, epsabs=1e-13, epsrel=1e-10, limit=200)
        pieces.append(val)
    return math.fsum(pieces) / (2 * math.pi)


def parseval_check(sample: PrimeSample, lam: LambdaTable, sigma: float, P: float, z_max: float,
                   t_max: float = 1000.0) -> ParsevalReport:
    """Both sides of the mean-square identity for a_n = h(n) lambda(n) on P-smooth n.

    The Dirichlet series is taken at abscissa c = 1/2 + sigma, so the left side is
    the integral of |sum_{n<=x} a_n|^2 / x^(2 + 2 sigma) over [1, inf), evaluated
    exactly on [1, z_max].  Beyond z_max we report a Rankin-type bound built from
    the triangle inequality, and the expected (diagonal) tail for scale.
    """
    if not sigma > 0:
        raise DomainError("sigma must be strictly positive")
    c = 0.5 + sigma
    if z_max < 1 or t_max <= 0:
        raise DomainError("z_max must be >= 1 and t_max positive")
    ns, a, complete = smooth_coefficients(sample, lam, P, z_max)
    A = np.cumsum(a)
    nf = ns.astype(np.float64)
    right = np.append(nf[1:], float(z_max))
    w = (np.exp(-2 * c * np.log(nf)) - np.exp(-2 * c * np.log(right))) / (2 * c)
    lhs = math.fsum((np.abs(A) ** 2 * w).tolist())

    i1 = int(np.searchsorted(sample.primes, math.floor(P), side="right"))
    p = sample.primes[:i1]
    lam_p = lam.lam[p]
    power = 2.0 * c
    zpow = z_max ** (-power)
    diag = float(np.prod(_local_sums(sample.model, lam_p, p, power, 2))) if i1 else 1.0
    lam2 = np.abs(a) ** 2
    expected_tail = (math.fsum((lam2 * zpow).tolist()) + diag
                     - math.fsum((lam2 * np.exp(-power * np.log(nf))).tolist())) / (2 * c)
    if complete:
        tail = float(abs(A[-1]) ** 2) * zpow / (2 * c)
        lhs += tail
        tail_bound = 0.0
    else:
        tail_bound = _rankin_tail_bound(sample.model, lam_p, p, c, z_max)

    T = int(math.ceil(t_max))
    rhs = _rhs_integral(sample, lam, P, sigma, c, -T, T)
    extra = _rhs_integral(sample, lam, P, sigma, c, -2 * T, -T) + _rhs_integral(sample, lam, P, sigma, c, T, 2 * T)
    return ParsevalReport(
        sigma=sigma, abscissa=c, P=P, z_max=z_max, t_max=T, n_terms=int(ns.size),
        lhs_truncated=float(lhs), lhs_tail_bound=float(tail_bound), lhs_tail_expected=max(expected_tail, 0.0),
        lhs_exact=complete, rhs=rhs, rhs_doubled=rhs + extra,
        rhs_tail_heuristic=diag / (math.pi * T), rel_gap=float(abs(lhs - rhs) / rhs),
    )
