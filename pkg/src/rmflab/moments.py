"""Monte Carlo low moments E|S(x)|^(2q) of twisted sums and Khintchine-type bounds."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np

from . import rng
from .errors import DomainError, TableTooSmallError
from .modform import LambdaTable
from .rmf import RandomModel, batch_twisted_sums, factor_plan

BOOTSTRAP_RESAMPLES = 1000
MIN_SAMPLES = 100
CSV_FIELDS = ("model", "x", "q", "M", "seed", "mean", "stderr", "ci_low", "ci_high", "ratio")


@dataclass(frozen=True)
class MomentEstimate:
    model: str
    x: int
    q: float
    M: int
    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    seed: int


@dataclass(frozen=True)
class RatioPoint:
    x: int
    q: float
    ratio: float


def _summarise(values: np.ndarray, boot_idx: np.ndarray) -> tuple[float, float, float, float]:
    M = values.size
    mean = math.fsum(values.tolist()) / M
    stderr = float(np.std(values, ddof=1)) / math.sqrt(M)
    boot = values[boot_idx].mean(axis=1)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    # the percentile interval can miss a degenerate mean by rounding; keep it inside
    return mean, stderr, min(float(lo), mean), max(float(hi), mean)


def _bootstrap_indices(M: int, seed: int) -> np.ndarray:
    return rng.generator(seed, rng.DOMAIN_BOOTSTRAP).integers(0, M, size=(BOOTSTRAP_RESAMPLES, M))


def _check_params(lam: LambdaTable, xs, qs, M: int) -> None:
    if M < MIN_SAMPLES:
        raise DomainError(f"M must be at least {MIN_SAMPLES}")
    for q in qs:
        if not 0 <= q <= 1:
            raise DomainError("q must lie in [0, 1]")
    for x in xs:
        if x < 2:
            raise DomainError("x must be at least 2")
        if x > lam.n_max:
            raise TableTooSmallError(f"x={x} exceeds the lambda table")


def moment_grid(model, lam: LambdaTable, xs, qs, M: int, seed: int, threads: int | None = None) -> list[MomentEstimate]:
    """Estimates for every (x, q); all points share the same M samples."""
    model = RandomModel.parse(model)
    xs = sorted({int(x) for x in xs})
    qs = [float(q) for q in qs]
    _check_params(lam, xs, qs, M)
    S = batch_twisted_sums(model, lam, xs, M, seed, threads)
    absS = np.abs(S)
    boot_idx = _bootstrap_indices(M, seed)
    out = []
    for k, x in enumerate(xs):
        for q in qs:
            vals = absS[:, k] ** (2.0 * q)  # 0.0 ** 0.0 == 1.0
            mean, stderr, lo, hi = _summarise(vals, boot_idx)
            out.append(MomentEstimate(model.value, x, q, M, mean, stderr, lo, hi, seed))
    return out


def estimate_moment(model, lam: LambdaTable, x: int, q: float, M: int, seed: int,
                    threads: int | None = None) -> MomentEstimate:
    return moment_grid(model, lam, [x], [q], M, seed, threads)[0]


def _normaliser(x: float, q: float) -> float:
    if x <= math.e:
        raise DomainError("log log x must be positive (x > e)")
    return (x / (1.0 + (1.0 - q) * math.sqrt(math.log(math.log(x))))) ** q


def theorem_ratio(estimates) -> list[RatioPoint]:
    ests = list(estimates)
    if not ests:
        raise DomainError("no estimates")
    return [RatioPoint(e.x, e.q, e.mean / _normaliser(e.x, e.q)) for e in ests]


def ratio_summary(points) -> dict[float, dict[str, float]]:
    """Per q: min, max and max/min of the ratio across x."""
    by_q = defaultdict(list)
    for pt in points:
        by_q[pt.q].append(pt.ratio)
    return {q: {"min": min(r), "max": max(r), "spread": max(r) / min(r)} for q, r in sorted(by_q.items())}


def exact_second_moment(model, lam: LambdaTable, x: int) -> float:
    """sum_{n<=x} lambda^2(n), over square-free n for Rademacher."""
    model = RandomModel.parse(model)
    if x < 1:
        raise DomainError("x must be positive")
    lam.require(x)
    terms = lam.lam[1 : x + 1] ** 2
    if model is RandomModel.RADEMACHER and x >= 2:
        terms = terms[factor_plan(x).squarefree[1 : x + 1]]
    return math.fsum(terms.tolist())


@dataclass
class KhintchineReport:
    model: str
    m: float
    M: int
    seed: int
    moment: float  # E|sum h(n) lambda(n) a_n|^m
    stderr: float
    l2_mass: float  # E|sum|^2, i.e. sum lambda^2 |a_n|^2 over the support of h
    c_emp: float
    upper_bound: float
    upper_ok: bool
    upper_ok_mc: bool  # within two standard errors


def khintchine_upper(m: float, l2_mass: float) -> float:
    return 2 ** (m / 2 - 1) * m * math.gamma(m / 2) * l2_mass ** (m / 2)


def khintchine_bounds(lam: LambdaTable, a, m: float, M: int, seed: int,
                      models=("steinhaus", "rademacher"), threads: int | None = None) -> list[KhintchineReport]:
    """Monte Carlo m-th moments of sum_{n<=n0} h(n) lambda(n) a_n against the
    sub-Gaussian upper bound and the lower-bound shape (sum lambda^2 |a_n|^2)^(1/2)."""
    a = np.asarray(a)
    n0 = a.size
    if not 1 < m <= 6:
        raise DomainError("m must lie in (1, 6]")
    if M < 2:
        raise DomainError("M must be at least 2")
    lam.require(n0)
    w = np.zeros(n0 + 1, dtype=np.complex128 if np.iscomplexobj(a) else np.float64)
    w[1:] = lam.lam[1 : n0 + 1] * a
    out = []
    for model in models:
        model = RandomModel.parse(model)
        if n0 >= 2:
            S = batch_twisted_sums(model, lam, [n0], M, seed, threads, weights=w)[:, 0]
            support = np.ones(n0 + 1, dtype=bool)
            if model is RandomModel.RADEMACHER:
                support = factor_plan(n0).squarefree
        else:
            S = np.full(M, w[1], dtype=np.complex128)
            support = np.ones(2, dtype=bool)
        vals = np.abs(S) ** m
        moment = math.fsum(vals.tolist()) / M
        stderr = float(np.std(vals, ddof=1)) / math.sqrt(M)
        l2 = math.fsum((np.abs(w[1:]) ** 2 * support[1 : n0 + 1]).tolist())
        ub = khintchine_upper(m, l2)
        c_emp = moment ** (1 / m) / math.sqrt(l2) if l2 > 0 else math.nan
        out.append(KhintchineReport(model.value, m, M, seed, moment, stderr, l2, c_emp, ub,
                                    moment <= ub, moment <= ub + 2 * stderr))
    return out


def _record(e: MomentEstimate) -> dict:
    rec = asdict(e)
    rec["ratio"] = e.mean / _normaliser(e.x, e.q) if e.x > math.e else None
    return {k: rec[k] for k in CSV_FIELDS}


def write_moments_csv(estimates, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for e in estimates:
            rec = _record(e)
            w.writerow([format(v, ".17g") if isinstance(v, float) else ("" if v is None else v)
                        for v in rec.values()])


def write_moments_json(estimates, path) -> None:
    with open(path, "w") as fh:
        json.dump([_record(e) for e in estimates], fh, indent=1, sort_keys=False)
        fh.write("\n")
