"""Prime sums weighted by lambda^2(p) and the symmetric-square Euler product."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, PoleError
from .modform import LambdaTable
from .sieve import PrimeTable

ZETA2 = math.pi**2 / 6
LI_TOL = 1e-10
KINDS = ("mertens_lambda", "weighted_pnt", "pi_f", "rankin_selberg")


@dataclass(frozen=True)
class PrimeSumSeries:
    grid: tuple[float, ...]
    values: tuple[float, ...]
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly ascending")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("non-finite value in series")

    def rows(self):
        for x, v in zip(self.grid, self.values):
            yield x, v, self.kind


def _grid(grid) -> tuple[float, ...]:
    g = tuple(float(x) for x in grid)
    if not g:
        raise ValueError("empty grid")
    return g


def _prefix_fsums(terms: np.ndarray, counts) -> list[float]:
    # exactly rounded partial sums, so every value is order-independent
    return [math.fsum(terms[:k].tolist()) for k in counts]


def mertens_lambda(grid, lam: LambdaTable, ptab: PrimeTable) -> PrimeSumSeries:
    """sum_{p<=x} lambda^2(p)/p - log log x."""
    g = _grid(grid)
    lam.require(g[-1])
    if g[0] < 2:
        raise DomainError("log log x needs x >= 2")
    p = ptab.upto(g[-1])
    terms = lam.lam[p] ** 2 / p
    sums = _prefix_fsums(terms, [ptab.count_upto(x) for x in g])
    return PrimeSumSeries(g, tuple(s - math.log(math.log(x)) for s, x in zip(sums, g)), "mertens_lambda")


def weighted_pnt(grid, lam: LambdaTable, ptab: PrimeTable) -> PrimeSumSeries:
    """(sum_{p<=x} lambda^2(p) log p) / x."""
    g = _grid(grid)
    lam.require(g[-1])
    p = ptab.upto(g[-1])
    terms = lam.lam[p] ** 2 * np.log(p)
    sums = _prefix_fsums(terms, [ptab.count_upto(x) for x in g])
    return PrimeSumSeries(g, tuple(s / x for s, x in zip(sums, g)), "weighted_pnt")


def li(x: float) -> float:
    """Offset logarithmic integral, integral of du/log u over [2, x]."""
    if x < 2:
        raise DomainError("Li(x) is taken from 2")
    val, _ = integrate.quad(lambda u: 1.0 / math.log(u), 2.0, x, epsabs=0.0, epsrel=LI_TOL, limit=200)
    return val


def pi_f(grid, lam: LambdaTable, ptab: PrimeTable) -> PrimeSumSeries:
    """pi_f(x) / Li(x) with pi_f(x) = sum_{p<=x} lambda^2(p)."""
    g = _grid(grid)
    lam.require(g[-1])
    if g[0] <= 2:
        raise DomainError("pi_f(x)/Li(x) needs x > 2")
    p = ptab.upto(g[-1])
    sums = _prefix_fsums(lam.lam[p] ** 2, [ptab.count_upto(x) for x in g])
    return PrimeSumSeries(g, tuple(s / li(x) for s, x in zip(sums, g)), "pi_f")


def rankin_selberg(grid, lam: LambdaTable) -> PrimeSumSeries:
    """(sum_{n<=x} lambda^2(n)) / x."""
    g = _grid(grid)
    lam.require(g[-1])
    if g[0] < 1:
        raise DomainError("x must be at least 1")
    terms = lam.lam[1 : int(g[-1]) + 1] ** 2
    sums = _prefix_fsums(terms, [int(math.floor(x)) for x in g])
    return PrimeSumSeries(g, tuple(s / x for s, x in zip(sums, g)), "rankin_selberg")


def sym2_factor_logs(s: float, p: np.ndarray, lambda_p: np.ndarray) -> np.ndarray:
    """-log of each local factor (1 - l p^-s + l p^-2s - p^-3s), l = lambda(p^2)."""
    lp2 = lambda_p**2 - 1.0
    ps = np.power(p.astype(float), -s)
    factor = 1.0 - lp2 * ps + lp2 * ps * ps - ps * ps * ps
    if np.any(factor <= 0):
        bad = int(p[np.argmax(factor <= 0)])
        raise PoleError(f"non-positive symmetric-square factor at p={bad}")
    return -np.log(factor)


def sym2_euler(s: float, p_max: float, lam: LambdaTable, ptab: PrimeTable) -> float:
    """Truncated Euler product of L(s, sym^2 f) over p <= p_max.

    lambda(p^2) is taken from the Hecke relation lambda(p)^2 - 1, so only
    lambda at primes is read from the table.
    """
    if not s >= 1:
        raise DomainError("truncation is only certified for s >= 1")
    lam.require(p_max)
    p = ptab.upto(p_max)
    if math.isinf(s):
        return 1.0
    return math.exp(math.fsum(sym2_factor_logs(s, p, lam.lam[p]).tolist()))


def sym2_stability(s: float, p_maxes, lam: LambdaTable, ptab: PrimeTable) -> list[tuple[float, float]]:
    """(p_max, value) for each truncation point, to expose truncation drift."""
    return [(float(pm), sym2_euler(s, pm, lam, ptab)) for pm in p_maxes]


def rankin_selberg_constant(p_max: float, lam: LambdaTable, ptab: PrimeTable) -> float:
    """Estimate of L(1, sym^2 f) / zeta(2) from the truncated product."""
    return sym2_euler(1.0, p_max, lam, ptab) / ZETA2


def write_series_csv(series, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "value", "kind"])
        for s in series:
            for x, v, kind in s.rows():
                w.writerow([format(x, ".17g"), format(v, ".17g"), kind])
