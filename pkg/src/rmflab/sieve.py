"""Segmented prime sieve, smallest-prime-factor and divisor-count tables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SEGMENT = 1 << 18


def _base_primes(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _is_probable_prime(n: int) -> bool:
    # deterministic Miller-Rabin for n < 3.3e24 with these bases
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeTable:
    n_max: int
    primes: np.ndarray

    def __len__(self) -> int:
        return int(self.primes.size)

    def upto(self, x: float) -> np.ndarray:
        """Primes p <= x as a view."""
        return self.primes[: self.count_upto(x)]

    def count_upto(self, x: float) -> int:
        return int(np.searchsorted(self.primes, math.floor(x), side="right"))

    def between(self, lo: float, hi: float) -> np.ndarray:
        """Primes with lo < p <= hi."""
        return self.primes[self.count_upto(lo) : self.count_upto(hi)]

    def spot_check(self, k: int = 64, seed: int = 0) -> bool:
        if not len(self):
            return True
        rng = np.random.default_rng(seed)
        picks = rng.choice(self.primes, size=min(k, len(self)), replace=False)
        return all(_is_probable_prime(int(p)) for p in picks)


def sieve(n_max: int) -> PrimeTable:
    """All primes <= n_max by a segmented sieve of Eratosthenes."""
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    base = _base_primes(math.isqrt(n_max))
    chunks = []
    for lo in range(0, n_max + 1, SEGMENT):
        hi = min(lo + SEGMENT, n_max + 1)
        flags = np.ones(hi - lo, dtype=bool)
        if lo == 0:
            flags[: min(2, hi)] = False
        for p in base:
            p = int(p)
            start = max(p * p, (lo + p - 1) // p * p)
            if start >= hi:
                continue
            flags[start - lo :: p] = False
        chunks.append(np.flatnonzero(flags) + lo)
    return PrimeTable(n_max, np.concatenate(chunks).astype(np.int64))


def smallest_prime_factor(n_max: int) -> np.ndarray:
    """spf[n] for 0 <= n <= n_max; spf[0] = 0 and spf[1] = 1."""
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for p in _base_primes(math.isqrt(n_max)):
        p = int(p)
        seg = spf[p * p :: p]
        seg[seg == 0] = p
    idx = np.arange(n_max + 1, dtype=np.int64)
    unset = spf == 0
    spf[unset] = idx[unset]
    spf[:2] = (0, 1)
    return spf


def divisor_counts(n_max: int) -> np.ndarray:
    """d[n], the number of divisors, for 0 <= n <= n_max (d[0] = 0)."""
    d = np.zeros(n_max + 1, dtype=np.int64)
    for i in range(1, math.isqrt(n_max) + 1):
        d[i * i] += 1
        d[i * (i + 1) :: i] += 2
    return d


def factorize(n: int, spf: np.ndarray) -> list[tuple[int, int]]:
    """Prime factorisation of n as ascending (p, a) pairs, read from an spf table."""
    out: list[tuple[int, int]] = []
    while n > 1:
        p = int(spf[n])
        a = 0
        while n % p == 0:
            n //= p
            a += 1
        out.append((p, a))
    return out


def squarefree_mask(n_max: int) -> np.ndarray:
    mask = np.ones(n_max + 1, dtype=bool)
    mask[0] = False
    for p in _base_primes(math.isqrt(n_max)):
        mask[int(p) * int(p) :: int(p) * int(p)] = False
    return mask
