"""Exact Fourier coefficients of the discriminant form and their normalisation.

tau(n) is the coefficient of q^n in q * prod(1 - q^k)^24.  We write the product
as E(q)^8 with E(q) = prod(1 - q^k)^3, whose coefficients are given by Jacobi's
identity, and square three times with NTT convolutions modulo word-size
primes.  lambda(n) = tau(n) / n^(11/2) is the unit-normalised eigenvalue.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ntt
from .errors import BudgetExceededError, ConsistencyError, DeligneViolationError, DomainError
from .sieve import divisor_counts

KAPPA = 12
N_EXACT = 10**5
TAU_CAP = 10**6
DIRECT_CHECK_TERMS = 64
DELIGNE_SLACK = 1e-9
LAMBDA_MAGIC = b"RMFL"
LAMBDA_VERSION = 1


@dataclass(frozen=True)
class TauTable:
    """tau[n] for 1 <= n <= n_max as Python ints; tau[0] is a zero pad."""

    n_max: int
    tau: np.ndarray

    def __getitem__(self, n: int) -> int:
        if not 1 <= n <= self.n_max:
            raise IndexError(n)
        return int(self.tau[n])

    def check_invariants(self) -> dict[str, int]:
        """Exact multiplicativity, Hecke recursion and the 691 congruence.

        Multiplicativity is checked in the equivalent form
        tau(p^a m) = tau(p^a) tau(m) with p = spf(n), which implies it for every
        coprime pair by induction.  Returns the number of checks of each kind.
        """
        from .sieve import smallest_prime_factor

        n_max, tau = self.n_max, self.tau
        if tau[1] != 1:
            raise ConsistencyError("tau(1) != 1")
        spf = smallest_prime_factor(n_max)
        counts = {"multiplicative": 0, "hecke": 0, "congruence": 0}
        for n in range(2, n_max + 1):
            p = int(spf[n])
            pa, m = 1, n
            while m % p == 0:
                m //= p
                pa *= p
            if m > 1:
                if tau[n] != tau[pa] * tau[m]:
                    raise ConsistencyError(f"multiplicativity fails at n={n}")
                counts["multiplicative"] += 1
            elif pa == p:
                if (int(tau[p]) - 1 - pow(p, 11, 691)) % 691:
                    raise ConsistencyError(f"691 congruence fails at p={p}")
                counts["congruence"] += 1
            else:
                p11 = p**11
                if tau[pa] != tau[p] * tau[pa // p] - p11 * tau[pa // (p * p)]:
                    raise ConsistencyError(f"Hecke recursion fails at n={n}")
                counts["hecke"] += 1
        return counts


@dataclass(frozen=True)
class LambdaTable:
    """lam[n] = tau(n) / n^((kappa-1)/2) for 1 <= n <= n_max; lam[0] is a pad."""

    n_max: int
    lam: np.ndarray
    kappa: int = KAPPA

    def __getitem__(self, n: int) -> float:
        if not 1 <= n <= self.n_max:
            raise IndexError(n)
        return float(self.lam[n])

    @classmethod
    def unit(cls, n_max: int) -> "LambdaTable":
        """All-ones weights; turns every prime sum into its classical analogue."""
        lam = np.ones(n_max + 1)
        lam[0] = 0.0
        return cls(n_max, lam, kappa=0)

    def require(self, x: float) -> None:
        from .errors import TableTooSmallError

        if x > self.n_max:
            raise TableTooSmallError(
                f"x={x:g} exceeds the lambda table (n_max={self.n_max}); rebuild with a larger n_max"
            )


@dataclass(frozen=True)
class SatakeAngle:
    p: int
    theta: float

    @classmethod
    def from_lambda(cls, p: int, lambda_p: float) -> "SatakeAngle":
        if abs(lambda_p) > 2 + DELIGNE_SLACK:
            raise DomainError(f"|lambda({p})| = {abs(lambda_p)} exceeds 2")
        return cls(p, math.acos(max(-1.0, min(1.0, lambda_p / 2))))

    @property
    def alpha(self) -> complex:
        return complex(math.cos(self.theta), math.sin(self.theta))

    @property
    def beta(self) -> complex:
        return complex(math.cos(self.theta), -math.sin(self.theta))


def jacobi_cube(n_terms: int) -> np.ndarray:
    """Coefficients of prod_{k>=1} (1 - q^k)^3 up to q^(n_terms-1)."""
    out = np.zeros(n_terms, dtype=np.int64)
    k = 0
    while k * (k + 1) // 2 < n_terms:
        out[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    return out


def expand_delta_direct(n_terms: int) -> list[int]:
    """tau(1..n_terms) by repeated multiplication with (1 - q^k), exact ints."""
    coeffs = np.zeros(n_terms, dtype=object)
    coeffs[0] = 1
    for k in range(1, n_terms):
        for _ in range(24):
            coeffs[k:] = coeffs[k:] - coeffs[:-k]
    return [int(c) for c in coeffs]


def tau_bound(n_max: int) -> int:
    """Integer upper bound for max |tau(n)|, n <= n_max, from |tau(n)| <= d(n) n^5.5."""
    d_max = int(divisor_counts(n_max).max())
    return d_max * (math.isqrt(n_max**11) + 1)


def build_tau_table(n_max: int, cap: int = TAU_CAP) -> TauTable:
    if n_max < 1:
        raise DomainError("n_max must be positive")
    if n_max > cap:
        raise BudgetExceededError(f"n_max={n_max} exceeds the exact-arithmetic cap {cap}")
    n_primes = ntt.primes_for_bound(tau_bound(n_max))
    moduli = ntt.NTT_PRIMES[: n_primes + 1]
    if len(moduli) < n_primes + 1:
        raise BudgetExceededError("not enough NTT primes for a redundancy check")
    length = ntt.plan_length(n_max)
    base = jacobi_cube(n_max)
    residues = []
    for p, g in moduli:
        plan = ntt.NTTPlan(length, p, g)
        r = ntt.reduce_mod(base, p)
        for _ in range(3):
            r = ntt.truncated_square(r, n_max, plan)
        residues.append(r)
    values = ntt.crt_signed(residues[:-1], [p for p, _ in moduli[:-1]])
    ntt.check_spare(values, residues[-1], moduli[-1][0])

    head = min(n_max, DIRECT_CHECK_TERMS)
    direct = expand_delta_direct(head)
    if any(int(values[i]) != direct[i] for i in range(head)):
        raise ConsistencyError("NTT coefficients disagree with the direct expansion")

    tau = np.empty(n_max + 1, dtype=object)
    tau[0] = 0
    tau[1:] = values
    return TauTable(n_max, tau)


def lambda_from_tau(tab: TauTable) -> LambdaTable:
    # int / int is correctly rounded; one more rounding from the sqrt division
    lam = np.zeros(tab.n_max + 1)
    for n in range(1, tab.n_max + 1):
        t = int(tab.tau[n])
        lam[n] = (t / n**5) / math.sqrt(n) if t else 0.0
    return LambdaTable(tab.n_max, lam)


def lambda_prime_power(lambda_p: float, m: int) -> float:
    """lambda(p^m) from lambda(p) by lambda(p^{k+1}) = lambda(p) lambda(p^k) - lambda(p^{k-1})."""
    if abs(lambda_p) > 2 + DELIGNE_SLACK:
        raise DomainError(f"|lambda(p)| = {abs(lambda_p)} exceeds 2")
    if m < 0:
        raise DomainError("m must be non-negative")
    prev, cur = 0.0, 1.0
    for _ in range(m):
        prev, cur = cur, lambda_p * cur - prev
    return cur


@dataclass(frozen=True)
class DivisorBoundReport:
    max_ratio: float
    argmax: int
    n_max: int


def divisor_bound_report(tab: LambdaTable) -> DivisorBoundReport:
    d = divisor_counts(tab.n_max)
    ratio = np.abs(tab.lam[1:]) / d[1:]
    bad = np.flatnonzero(ratio > 1 + DELIGNE_SLACK)
    if bad.size:
        n = int(bad[0]) + 1
        raise DeligneViolationError(f"|lambda({n})|/d({n}) = {ratio[n - 1]!r} exceeds 1")
    k = int(np.argmax(ratio))
    return DivisorBoundReport(float(ratio[k]), k + 1, tab.n_max)


def write_tau_csv(tab: TauTable, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("n,tau\n")
        for n in range(1, tab.n_max + 1):
            fh.write(f"{n},{int(tab.tau[n])}\n")


def read_tau_csv(path) -> TauTable:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "n,tau":
            raise ValueError(f"{path}: unexpected header {header!r}")
        vals = [0]
        for i, line in enumerate(fh, start=1):
            n, t = line.strip().split(",")
            if int(n) != i:
                raise ValueError(f"{path}: row {i} has n={n}")
            vals.append(int(t))
    tau = np.empty(len(vals), dtype=object)
    tau[:] = vals
    return TauTable(len(vals) - 1, tau)


def write_lambda_bin(tab: LambdaTable, path) -> None:
    payload = np.ascontiguousarray(tab.lam[1:], dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(LAMBDA_MAGIC)
        fh.write(struct.pack("<BQ", LAMBDA_VERSION, tab.n_max))
        fh.write(payload.tobytes())


def read_lambda_bin(path) -> LambdaTable:
    raw = Path(path).read_bytes()
    if raw[:4] != LAMBDA_MAGIC:
        raise ValueError(f"{path}: bad magic")
    version, n_max = struct.unpack_from("<BQ", raw, 4)
    if version != LAMBDA_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    body = np.frombuffer(raw, dtype="<f8", offset=13)
    if body.size != n_max:
        raise ValueError(f"{path}: expected {n_max} values, found {body.size}")
    lam = np.zeros(n_max + 1)
    lam[1:] = body
    return LambdaTable(int(n_max), lam)


def build_tables(n_max: int = N_EXACT) -> tuple[TauTable, LambdaTable]:
    tau = build_tau_table(n_max)
    return tau, lambda_from_tau(tau)

