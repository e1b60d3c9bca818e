"""Gaussian random walks between drifting barriers.

The walk W_j = G_1 + ... + G_j has independent Gaussian steps and must stay in
[-a - B j, a + j + g(j)] for every j <= n.  Probabilities are estimated by
Monte Carlo and, for short walks, by a deterministic grid recursion.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import signal, special

from . import rng
from .errors import DomainError, ResolutionError
from .modform import LambdaTable
from .parallel import blocks, map_blocks
from .sieve import PrimeTable

WALK_BLOCK = 4096
DP_MAX_STEPS = 64
DP_TOL = 1e-3
CSV_FIELDS = ("n", "a", "B", "M", "seed", "p_hat", "stderr", "predicted", "ratio")


def log_barrier(j: int) -> float:
    """g(j) = -2 log j."""
    return -2.0 * math.log(j)


def zero_barrier(j: int) -> float:
    return 0.0


G_FUNCTIONS: dict[str, Callable[[int], float]] = {"minus2log": log_barrier, "zero": zero_barrier}


@dataclass
class WalkConfig:
    n: int
    a: float
    B: int = 10
    g: Callable[[int], float] = log_barrier
    step_means: Sequence[float] | None = None
    step_vars: Sequence[float] | None = None
    M: int = 100_000
    seed: int = 0
    means: np.ndarray = field(init=False, repr=False)
    vars: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be at least 1")
        if not self.a > 0:
            raise DomainError("a must be positive")
        if self.B < 1 or int(self.B) != self.B:
            raise DomainError("B must be a positive integer")
        if self.M < 1:
            raise DomainError("M must be positive")
        self.means = np.ones(self.n) if self.step_means is None else np.asarray(self.step_means, dtype=float)
        self.vars = np.full(self.n, 0.5) if self.step_vars is None else np.asarray(self.step_vars, dtype=float)
        if self.means.shape != (self.n,) or self.vars.shape != (self.n,):
            raise DomainError("step_means and step_vars must have length n")
        if not np.all(self.vars > 0):
            raise DomainError("step variances must be positive")
        for j in range(1, self.n + 1):
            if abs(self.g(j)) > 10 * math.log(max(j, 2)):
                raise DomainError(f"|g({j})| exceeds 10 log j")

    def barriers(self, a: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        a = self.a if a is None else a
        j = np.arange(1, self.n + 1)
        g = np.array([self.g(int(k)) for k in j])
        return -a - self.B * j, a + j + g


@dataclass(frozen=True)
class WalkResult:
    n: int
    a: float
    B: int
    M: int
    seed: int
    p_hat: float
    stderr: float
    predicted: float
    ratio: float


def predicted_order(a: float, n: int) -> float:
    return min(1.0, a / math.sqrt(n))


def shell_half_sum(lam: LambdaTable, ptab: PrimeTable, x_j: float, sigma: float = 0.0) -> float:
    """sum over x_j^(1/e) < p <= x_j of lambda^2(p) / (2 p^(1 + 2 sigma))."""
    lam.require(x_j)
    lo = x_j ** math.exp(-1)
    p = ptab.between(lo, x_j)
    if p.size == 0:
        warnings.warn(f"empty prime shell ({lo:g}, {x_j:g}]", stacklevel=2)
        return 0.0
    return math.fsum((lam.lam[p] ** 2 / (2.0 * p ** (1.0 + 2.0 * sigma))).tolist())


def shell_endpoint(x: float, j: int, B: int = 10) -> float:
    """x_j = x^(e^-(l_j + 1)) with l_j = floor(log log x) - (B + 1) - j."""
    l_j = math.floor(math.log(math.log(x))) - (B + 1) - j
    if l_j < 0:
        raise DomainError("shell index l_j is negative; x is too small for this j and B")
    return x ** math.exp(-(l_j + 1))


def step_variance_from_primes(lam: LambdaTable, ptab: PrimeTable, x: float, j: int | None = None,
                              sigma: float = 0.0, B: int = 10) -> float:
    """Step variance of the j-th walk increment; with j=None, x is the shell endpoint itself."""
    x_j = x if j is None else shell_endpoint(x, j, B)
    return shell_half_sum(lam, ptab, x_j, sigma)


def _block_hits(cfg: WalkConfig, a_values, part: range) -> np.ndarray:
    gen = rng.generator(cfg.seed, rng.DOMAIN_WALKS, part.start // WALK_BLOCK)
    Z = gen.standard_normal((len(part), cfg.n))
    W = np.cumsum(cfg.means + np.sqrt(cfg.vars) * Z, axis=1)
    hits = []
    for a in a_values:
        lower, upper = cfg.barriers(a)
        hits.append(int(np.count_nonzero(np.all((W >= lower) & (W <= upper), axis=1))))
    return np.array(hits, dtype=np.int64)


def walk_probabilities(cfg: WalkConfig, a_values, threads: int | None = None) -> list[WalkResult]:
    """Estimates for several barrier offsets from the same Gaussian draws."""
    a_values = [float(a) for a in a_values]
    for a in a_values:
        if not a > 0:
            raise DomainError("a must be positive")
    hits = sum(map_blocks(lambda part: _block_hits(cfg, a_values, part), blocks(cfg.M, WALK_BLOCK), threads))
    out = []
    for a, h in zip(a_values, hits.tolist()):
        p = h / cfg.M
        pred = predicted_order(a, cfg.n)
        out.append(WalkResult(cfg.n, a, cfg.B, cfg.M, cfg.seed, p, math.sqrt(p * (1 - p) / cfg.M), pred, p / pred))
    return out


def walk_probability(cfg: WalkConfig, threads: int | None = None) -> WalkResult:
    return walk_probabilities(cfg, [cfg.a], threads)[0]


# --- deterministic oracle ---------------------------------------------------

def _dp_once(means, sds, lower, upper, h: float) -> float:
    n = means.size
    cum_mean = np.cumsum(means)
    cum_sd = np.sqrt(np.cumsum(sds**2))
    # below this the walk carries no representable mass, so the grid can stop there
    lo = float(np.min(np.maximum(lower, cum_mean - 40 * cum_sd)))
    hi = float(np.max(np.minimum(upper, cum_mean + 40 * cum_sd)))
    if hi <= lo:
        return 0.0
    n_cells = int(math.ceil((hi - lo) / h))
    edges = lo + h * np.arange(n_cells + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])

    def clipped(L, U):
        left, right = np.maximum(edges[:-1], L), np.minimum(edges[1:], U)
        return np.clip(right - left, 0.0, None), 0.5 * (left + right)

    mass = None
    for j in range(n):
        # cells cut by a barrier are integrated at the midpoint of their surviving part
        w, at = clipped(lower[j], upper[j])
        if j == 0:
            dens = np.exp(-0.5 * ((at - means[0]) / sds[0]) ** 2) / (sds[0] * math.sqrt(2 * math.pi))
        else:
            half = int(math.ceil(12 * sds[j] / h))
            shift = int(round(means[j] / h))
            # centre the kernel window on the mean so the truncation is symmetric
            k = h * np.arange(shift - half, shift + half + 1)
            kern = np.exp(-0.5 * ((k - means[j]) / sds[j]) ** 2) / (sds[j] * math.sqrt(2 * math.pi))
            full = signal.fftconvolve(mass, kern)
            # full[i] corresponds to cell i + shift - half
            start = half - shift
            dens = np.zeros(n_cells)
            src = np.arange(n_cells) + start
            ok = (src >= 0) & (src < full.size)
            dens[ok] = full[src[ok]]
            cut = (w > 0) & (w < h)
            dens[cut] = np.interp(at[cut], mid, dens)
        mass = dens * w
    return float(np.clip(mass.sum(), 0.0, 1.0))


@dataclass(frozen=True)
class DPResult:
    probability: float
    error_estimate: float
    cell_width: float


def barrier_dp_oracle(cfg: WalkConfig, a: float | None = None, cells_per_sd: int = 32) -> DPResult:
    """Barrier probability by repeated convolution on a uniform grid.

    Runs at cell widths h and h/2 and extrapolates the O(h^2) error away; the
    difference between the two runs is the reported error estimate.
    """
    if cfg.n > DP_MAX_STEPS:
        raise DomainError(f"the grid oracle is limited to n <= {DP_MAX_STEPS}")
    lower, upper = cfg.barriers(a)
    sds = np.sqrt(cfg.vars)
    h = float(sds.min()) / cells_per_sd
    coarse = _dp_once(cfg.means, sds, lower, upper, h)
    fine = _dp_once(cfg.means, sds, lower, upper, h / 2)
    err = abs(fine - coarse) / 3
    if err > DP_TOL:
        raise ResolutionError(f"grid error estimate {err:.2e} exceeds {DP_TOL}")
    return DPResult(min(max(fine + (fine - coarse) / 3, 0.0), 1.0), err, h / 2)


def normal_interval(mean: float, sd: float, lo: float, hi: float) -> float:
    return 0.5 * (special.erf((hi - mean) / (sd * math.sqrt(2))) - special.erf((lo - mean) / (sd * math.sqrt(2))))


def write_walks_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in results:
            w.writerow([r.n, format(r.a, ".17g"), r.B, r.M, r.seed, format(r.p_hat, ".17g"),
                        format(r.stderr, ".17g"), format(r.predicted, ".17g"), format(r.ratio, ".17g")])
