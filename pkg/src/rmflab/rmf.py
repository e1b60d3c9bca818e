"""Steinhaus and Rademacher random multiplicative functions and twisted sums.

A sample stores one uniform draw per prime (an angle for Steinhaus, a sign
for Rademacher), addressed by (seed, stream, prime index) through the
counter-based generator.  Twisted sums S(x) = sum_{n<=x} h(n) lambda(n) are
accumulated with ``math.fsum`` so that every value is the correctly rounded
sum of its terms, independent of blocking or thread count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import rng
from .errors import DomainError, TableTooSmallError
from .modform import LambdaTable
from .parallel import blocks, map_blocks
from .sieve import factorize, sieve, smallest_prime_factor

TWO_PI = 2.0 * math.pi
BLOCK = 32


class RandomModel(enum.Enum):
    STEINHAUS = "steinhaus"
    RADEMACHER = "rademacher"

    @classmethod
    def parse(cls, value) -> "RandomModel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown model {value!r}; expected steinhaus or rademacher") from None


@dataclass(frozen=True)
class PrimeSample:
    model: RandomModel
    n_max: int
    seed: int
    stream: int
    primes: np.ndarray
    values: np.ndarray  # angles in [0, 2pi) or signs in {-1, +1}

    def angle(self, p: int) -> float:
        return float(self.values[_prime_position(self.primes, p)])

    def sign(self, p: int) -> int:
        return int(self.values[_prime_position(self.primes, p)])


@dataclass(frozen=True)
class TwistedSum:
    x: int
    value: complex
    model: RandomModel
    seed: int


def _prime_position(primes: np.ndarray, p: int) -> int:
    i = int(np.searchsorted(primes, p))
    if i >= primes.size or primes[i] != p:
        raise DomainError(f"{p} is not a sampled prime")
    return i


@lru_cache(maxsize=8)
def _primes_upto(n_max: int) -> np.ndarray:
    return sieve(n_max).primes if n_max >= 2 else np.zeros(0, dtype=np.int64)


def _values_from_uniforms(model: RandomModel, u: np.ndarray) -> np.ndarray:
    if model is RandomModel.STEINHAUS:
        return TWO_PI * u
    return np.where(u < 0.5, -1, 1).astype(np.int8)


def sample_primes(model, n_max: int, seed: int, stream: int = 0) -> PrimeSample:
    model = RandomModel.parse(model)
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    primes = _primes_upto(n_max)
    u = rng.uniforms(seed, stream, 0, primes.size)
    return PrimeSample(model, n_max, seed, stream, primes, _values_from_uniforms(model, u))


def prime_value(model, seed: int, stream: int, prime_index: int):
    """Value for the prime with 0-based index ``prime_index``, without its predecessors."""
    model = RandomModel.parse(model)
    return _values_from_uniforms(model, rng.uniforms(seed, stream, prime_index, 1))[0]


def h_value(sample: PrimeSample, n: int) -> complex:
    if not 1 <= n <= sample.n_max:
        raise DomainError(f"n={n} outside 1..{sample.n_max}")
    if n == 1:
        return 1.0 + 0.0j
    factors = factorize(n, _spf(sample.n_max))
    if sample.model is RandomModel.RADEMACHER:
        if any(a > 1 for _, a in factors):
            return 0.0 + 0.0j
        s = 1
        for p, _ in factors:
            s *= sample.sign(p)
        return complex(s, 0.0)
    phi = 0.0
    for p, a in reversed(factors):
        phi = math.fmod(phi + a * sample.angle(p), TWO_PI)
    return complex(math.cos(phi), math.sin(phi))


@lru_cache(maxsize=4)
def _spf(n_max: int) -> np.ndarray:
    return smallest_prime_factor(n_max)


class FactorPlan:
    """Factorisation schedule for 2 <= n <= n_max.

    Each n is split as p^a * m with p = spf(n); n is processed after m, which
    has one fewer distinct prime factor, so h(n) can be built level by level
    with whole-array operations.
    """

    def __init__(self, n_max: int):
        self.n_max = n_max
        spf = _spf(n_max)
        self.primes = _primes_upto(n_max)
        pidx = np.full(n_max + 1, -1, dtype=np.int64)
        pidx[self.primes] = np.arange(self.primes.size)
        n = np.arange(2, n_max + 1, dtype=np.int64)
        p = spf[2:]
        m = n // p
        a = np.ones_like(n)
        while True:
            more = (m % p == 0) & (m > 1)
            if not more.any():
                break
            m[more] //= p[more]
            a[more] += 1
        omega = np.full(n_max + 1, -1, dtype=np.int64)
        omega[1] = 0
        todo = np.ones(n.size, dtype=bool)
        self.levels: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
        while todo.any():
            ready = todo & (omega[m] >= 0)
            idx = np.flatnonzero(ready)
            omega[n[idx]] = omega[m[idx]] + 1
            self.levels.append((n[idx], m[idx], pidx[p[idx]], a[idx].astype(np.float64)))
            todo[idx] = False
        sqf = np.zeros(n_max + 1, dtype=bool)
        sqf[1] = True
        for ns, ms, _, aa in self.levels:
            sqf[ns] = (aa == 1) & sqf[ms]
        self.squarefree = sqf


@lru_cache(maxsize=4)
def factor_plan(n_max: int) -> FactorPlan:
    return FactorPlan(n_max)


def h_block(model: RandomModel, plan: FactorPlan, values: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """h(n) for 0 <= n <= plan.n_max and each row of prime values.

    Returns (cos, sin) of the phases for Steinhaus and (sign, None) for
    Rademacher; column 0 is unused.
    """
    rows = values.shape[0]
    if model is RandomModel.STEINHAUS:
        phi = np.zeros((rows, plan.n_max + 1))
        for ns, ms, pis, aa in plan.levels:
            phi[:, ns] = np.fmod(phi[:, ms] + aa * values[:, pis], TWO_PI)
        return np.cos(phi), np.sin(phi)
    sgn = np.zeros((rows, plan.n_max + 1))
    sgn[:, 1] = 1.0
    vals = values.astype(np.float64)
    for ns, ms, pis, aa in plan.levels:
        keep = plan.squarefree[ns]
        sgn[:, ns[keep]] = sgn[:, ms[keep]] * vals[:, pis[keep]]
    return sgn, None


def weighted_terms(model, plan, values, weights) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of h(n) * weights[n] for each sample row."""
    c, s = h_block(model, plan, values)
    w = np.asarray(weights)
    if model is RandomModel.RADEMACHER:
        if np.iscomplexobj(w):
            return c * w.real, c * w.imag
        return c * w, np.zeros_like(c)
    if np.iscomplexobj(w):
        return c * w.real - s * w.imag, s * w.real + c * w.imag
    return c * w, s * w


def _row_sums(re: np.ndarray, im: np.ndarray, cutoffs) -> np.ndarray:
    out = np.empty((re.shape[0], len(cutoffs)), dtype=np.complex128)
    for b in range(re.shape[0]):
        r = re[b].tolist()
        i = im[b].tolist()
        for k, z in enumerate(cutoffs):
            out[b, k] = complex(math.fsum(r[1 : z + 1]), math.fsum(i[1 : z + 1]))
    return out


def _check_range(lam: LambdaTable, n_max: int, x: int) -> None:
    if x < 1:
        raise DomainError("x must be positive")
    if x > n_max or x > lam.n_max:
        raise TableTooSmallError(f"x={x} exceeds the sample range {n_max} or lambda table {lam.n_max}")


def _sample_weights(lam: LambdaTable, x_max: int) -> np.ndarray:
    return lam.lam[: x_max + 1]


def twisted_sum(sample: PrimeSample, lam: LambdaTable, x: int) -> TwistedSum:
    return twisted_sum_prefix(sample, lam, [x])[0]


def twisted_sum_prefix(sample: PrimeSample, lam: LambdaTable, grid) -> list[TwistedSum]:
    """S(z) for each z in an ascending grid, from one pass over the terms."""
    zs = [int(z) for z in grid]
    if not zs or any(b <= a for a, b in zip(zs, zs[1:])):
        raise DomainError("grid must be non-empty and strictly ascending")
    for z in zs:
        _check_range(lam, sample.n_max, z)
    x_max = zs[-1]
    re, im = _terms_for_samples(sample.model, [sample.values[: _prime_count(x_max)]], x_max,
                                _sample_weights(lam, x_max))
    sums = _row_sums(re, im, zs)[0]
    return [TwistedSum(z, _clean(sample.model, v), sample.model, sample.seed) for z, v in zip(zs, sums)]


def _clean(model: RandomModel, v: complex) -> complex:
    return complex(v.real, 0.0) if model is RandomModel.RADEMACHER else complex(v)


def _prime_count(x: int) -> int:
    return int(np.searchsorted(_primes_upto(max(x, 2)), x, side="right"))


def _terms_for_samples(model, value_rows, x_max, weights):
    plan = factor_plan(x_max)
    values = np.vstack(value_rows) if value_rows else np.zeros((0, 0))
    return weighted_terms(model, plan, values, weights[: plan.n_max + 1])


def batch_twisted_sums(model, lam: LambdaTable, grid, M: int, seed: int, threads: int | None = None,
                       weights: np.ndarray | None = None) -> np.ndarray:
    """S_i(z) for samples i = 0..M-1 (stream i) and each z in the grid; shape (M, len(grid)).

    Sample i equals ``sample_primes(model, max(grid), seed, stream=i)`` and each
    entry equals ``twisted_sum`` of that sample bit for bit.  ``weights`` replaces
    lambda(n) when given (indexed from 0, entry 0 unused).
    """
    model = RandomModel.parse(model)
    zs = [int(z) for z in grid]
    x_max = zs[-1]
    if weights is None:
        _check_range(lam, x_max, x_max)
        weights = _sample_weights(lam, x_max)
    n_primes = _prime_count(x_max)
    plan = factor_plan(x_max)
    w = np.asarray(weights)[: plan.n_max + 1]
    if w.size < plan.n_max + 1:
        w = np.concatenate([w, np.zeros(plan.n_max + 1 - w.size, dtype=w.dtype)])

    def run(part: range) -> np.ndarray:
        rows = [_values_from_uniforms(model, rng.uniforms(seed, i, 0, n_primes)) for i in part]
        re, im = weighted_terms(model, plan, np.vstack(rows), w)
        return _row_sums(re, im, zs)

    out = np.concatenate(map_blocks(run, blocks(M, BLOCK), threads))
    if model is RandomModel.RADEMACHER:
        out.imag = 0.0
    return out
