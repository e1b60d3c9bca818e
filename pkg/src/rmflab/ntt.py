"""Number-theoretic transform over word-size primes, with CRT reconstruction.

All residues are kept below 2**31 so that a product of two residues fits in
an unsigned 64-bit word and every butterfly stays vectorised in numpy.
"""

from __future__ import annotations

import numpy as np

# (prime, generator of the multiplicative group); every p - 1 is divisible by 2**23
NTT_PRIMES: tuple[tuple[int, int], ...] = (
    (998244353, 3),     # 119 * 2**23 + 1
    (469762049, 3),     # 7 * 2**26 + 1
    (167772161, 3),     # 5 * 2**25 + 1
    (754974721, 11),    # 45 * 2**24 + 1
    (2013265921, 31),   # 15 * 2**27 + 1
    (1811939329, 13),   # 27 * 2**26 + 1
)

MAX_LOG2_LENGTH = 23


class CRTMismatchError(ArithmeticError):
    """Raised when the spare modulus disagrees with a CRT reconstruction."""


def _check_generator(p: int, g: int) -> None:
    # g generates (Z/p)^* iff g^((p-1)/q) != 1 for every prime q | p - 1
    m, q, factors = p - 1, 2, set()
    while q * q <= m:
        while m % q == 0:
            factors.add(q)
            m //= q
        q += 1
    if m > 1:
        factors.add(m)
    for q in factors:
        if pow(g, (p - 1) // q, p) == 1:
            raise ValueError(f"{g} is not a generator mod {p}")


def _bit_reverse_permutation(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.uint64)
    rev = np.zeros(n, dtype=np.uint64)
    for b in range(bits):
        rev |= ((idx >> np.uint64(b)) & np.uint64(1)) << np.uint64(bits - 1 - b)
    return rev.astype(np.intp)


class NTTPlan:
    """Precomputed twiddles for cyclic transforms of one length modulo one prime."""

    def __init__(self, length: int, prime: int, generator: int):
        if length < 1 or length & (length - 1):
            raise ValueError("transform length must be a power of two")
        if (prime - 1) % length:
            raise ValueError(f"length {length} does not divide {prime} - 1")
        if prime >= 1 << 31:
            raise ValueError("prime must be below 2**31")
        _check_generator(prime, generator)
        self.length = length
        self.prime = prime
        self._p = np.uint64(prime)
        root = pow(generator, (prime - 1) // length, prime)
        self._fwd = self._powers(root, length // 2)
        self._inv = self._powers(pow(root, prime - 2, prime), length // 2)
        self._n_inv = np.uint64(pow(length, prime - 2, prime))
        self._perm = _bit_reverse_permutation(length)

    def _powers(self, w: int, count: int) -> np.ndarray:
        out = np.empty(max(count, 1), dtype=np.uint64)
        out[0] = 1
        # doubling fill keeps this O(log n) numpy calls
        filled = 1
        step = w
        while filled < count:
            take = min(filled, count - filled)
            out[filled:filled + take] = out[:take] * np.uint64(step) % self._p
            filled += take
            step = step * step % self.prime
        return out[:count]

    def _transform(self, a: np.ndarray, twiddles: np.ndarray) -> np.ndarray:
        n, p = self.length, self._p
        a = a[self._perm].copy()
        half = 1
        while half < n:
            blocks = a.reshape(-1, 2 * half)
            tw = twiddles[:: n // (2 * half)][:half]
            u = blocks[:, :half].copy()
            v = blocks[:, half:] * tw % p
            blocks[:, :half] = (u + v) % p
            blocks[:, half:] = (u + p - v) % p
            half *= 2
        return a

    def forward(self, a: np.ndarray) -> np.ndarray:
        return self._transform(self._pad(a), self._fwd)

    def inverse(self, a: np.ndarray) -> np.ndarray:
        return self._transform(np.asarray(a, dtype=np.uint64), self._inv) * self._n_inv % self._p

    def _pad(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.uint64) % self._p
        if a.size > self.length:
            raise ValueError("input longer than transform length")
        out = np.zeros(self.length, dtype=np.uint64)
        out[: a.size] = a
        return out


def reduce_mod(coeffs, prime: int) -> np.ndarray:
    """Reduce signed integer coefficients into [0, prime) as uint64."""
    arr = np.asarray(coeffs)
    if arr.dtype == object:
        return np.array([int(c) % prime for c in arr], dtype=np.uint64)
    return (arr.astype(np.int64) % prime).astype(np.uint64)


def truncated_square(residues: np.ndarray, n_terms: int, plan: NTTPlan) -> np.ndarray:
    """First ``n_terms`` coefficients of the square of a residue polynomial."""
    if plan.length < 2 * n_terms - 1:
        raise ValueError("transform too short for an alias-free truncated square")
    f = plan.forward(residues[:n_terms])
    return plan.inverse(f * f % plan._p)[:n_terms]


def plan_length(n_terms: int) -> int:
    length = 1
    while length < 2 * n_terms - 1:
        length *= 2
    if length.bit_length() - 1 > MAX_LOG2_LENGTH:
        raise ValueError(f"{n_terms} terms exceed the supported transform length")
    return length


def primes_for_bound(bound: int) -> int:
    """How many NTT primes are needed so that the modulus exceeds 2 * bound."""
    modulus, k = 1, 0
    for p, _ in NTT_PRIMES:
        if k and modulus > 2 * bound:
            break
        modulus *= p
        k += 1
    if modulus <= 2 * bound:
        raise ValueError("coefficient bound exceeds the available NTT primes")
    return k


def crt_signed(residues: list[np.ndarray], primes: list[int]) -> np.ndarray:
    """Garner reconstruction to symmetric (signed) integers, as an object array."""
    k = len(primes)
    digits: list[np.ndarray] = [residues[0].astype(np.uint64)]
    for i in range(1, k):
        p_i = np.uint64(primes[i])
        acc = residues[i].astype(np.uint64) % p_i
        for j in range(i):
            inv = np.uint64(pow(primes[j], primes[i] - 2, primes[i]))
            acc = (acc + p_i - digits[j] % p_i) % p_i * inv % p_i
        digits.append(acc)
    modulus = 1
    for p in primes:
        modulus *= p
    value = digits[-1].astype(object)
    for i in range(k - 2, -1, -1):
        value = value * primes[i] + digits[i].astype(object)
    half = modulus // 2
    return np.where(value > half, value - modulus, value)


def check_spare(values: np.ndarray, spare_residues: np.ndarray, spare_prime: int) -> None:
    got = reduce_mod(values, spare_prime)
    bad = np.flatnonzero(got != spare_residues)
    if bad.size:
        raise CRTMismatchError(
            f"spare prime {spare_prime} disagrees at {bad.size} coefficients (first index {bad[0]})"
        )
