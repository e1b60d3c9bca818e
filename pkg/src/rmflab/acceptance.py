"""Acceptance suite: each criterion pairs an implementation run with an
independent oracle or a statistical band, at the stated tolerance."""

from __future__ import annotations

import filecmp
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import euler, modform, moments, primesums, walks
from .modform import N_EXACT
from .rmf import sample_primes
from .sieve import factorize, sieve, smallest_prime_factor

MODELS = ("steinhaus", "rademacher")


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"criterion {self.cid:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name} ({self.seconds:.1f} s)"

    def record(self) -> dict:
        return {"id": self.cid, "name": self.name, "passed": self.passed, "seconds": round(self.seconds, 3),
                "detail": repr(self.detail)}


class Context:
    """Tables and expensive samples shared between criteria."""

    def __init__(self, seed: int = 7, threads: int | None = None):
        self.seed = seed
        self.threads = threads
        self._tau = None
        self._lam = None
        self._ptab = None
        self._grids: dict[str, list] = {}
        self._results: dict[int, CriterionResult] = {}

    @property
    def tau(self):
        if self._tau is None:
            self._tau = modform.build_tau_table(N_EXACT)
        return self._tau

    @property
    def lam(self):
        if self._lam is None:
            self._lam = modform.lambda_from_tau(self.tau)
        return self._lam

    @property
    def ptab(self):
        if self._ptab is None:
            self._ptab = sieve(N_EXACT)
        return self._ptab

    def moment_grid(self, model: str):
        if model not in self._grids:
            self._grids[model] = moments.moment_grid(model, self.lam, [10**3, 10**4, 10**5], [0.5, 0.75, 1.0],
                                                     4000, self.seed, self.threads)
        return self._grids[model]

    def result(self, cid: int) -> CriterionResult:
        if cid not in self._results:
            fn = CRITERIA[cid]
            t0 = time.perf_counter()
            passed, detail = fn(self)
            self._results[cid] = CriterionResult(cid, fn.__doc__.strip().splitlines()[0], passed, detail,
                                                 time.perf_counter() - t0)
        return self._results[cid]


def c1(ctx: Context):
    """Coefficient exactness"""
    t0 = time.perf_counter()
    small = modform.build_tau_table(2000)
    direct = modform.expand_delta_direct(2000)
    exact_small = all(int(small.tau[n]) == direct[n - 1] for n in range(1, 2001))
    counts = ctx.tau.check_invariants()  # raises on the first failure
    elapsed = time.perf_counter() - t0
    return exact_small and elapsed < 60, {"counts": counts, "seconds": elapsed}


def c2(ctx: Context):
    """Deligne bound"""
    # divisor counts rebuilt from factorisations, independent of the sieve-based table
    spf = smallest_prime_factor(N_EXACT)
    d = np.ones(N_EXACT + 1)
    for n in range(2, N_EXACT + 1):
        d[n] = math.prod(a + 1 for _, a in factorize(n, spf))
    ratio = np.abs(ctx.lam.lam[1:]) / d[1:]
    worst = int(np.argmax(ratio)) + 1
    ok = bool(np.all(np.abs(ctx.lam.lam[1:]) <= d[1:] * (1 + 1e-9)))
    report = modform.divisor_bound_report(ctx.lam)
    return ok and report.max_ratio == ratio[worst - 1], {"max_ratio": float(ratio.max()), "argmax": worst}


def c3(ctx: Context):
    """Rankin-Selberg consistency"""
    rs = primesums.rankin_selberg([1e5], ctx.lam).values[0]
    c_f = primesums.rankin_selberg_constant(1e5, ctx.lam, ctx.ptab)
    rel = abs(rs - c_f) / c_f
    return rel <= 0.05, {"mean_square": rs, "euler_constant": c_f, "rel_gap": rel}


def c4(ctx: Context):
    """Mertens stabilization"""
    s = primesums.mertens_lambda([1e4, 1e5], ctx.lam, ctx.ptab).values
    return abs(s[1] - s[0]) < 0.05, {"x=1e4": s[0], "x=1e5": s[1], "diff": abs(s[1] - s[0])}


def c5(ctx: Context):
    """Second-moment oracle"""
    detail, ok = {}, True
    for model in MODELS:
        exact = moments.exact_second_moment(model, ctx.lam, 1000)
        hits = 0
        for k in range(10):
            e = moments.estimate_moment(model, ctx.lam, 1000, 1.0, 4000, ctx.seed + k, ctx.threads)
            hits += abs(e.mean - exact) <= 4 * e.stderr
        detail[model] = {"exact": exact, "passes": hits}
        ok &= hits >= 9
    return ok, detail


def c6(ctx: Context):
    """Low-moment ratio band"""
    detail, ok = {}, True
    for model in MODELS:
        pts = moments.theorem_ratio(ctx.moment_grid(model))
        summary = moments.ratio_summary(pts)
        in_range = all(0.05 <= p.ratio <= 20 for p in pts)
        spread_ok = all(s["spread"] <= 3 for s in summary.values())
        detail[model] = {"ratios": {(p.x, p.q): p.ratio for p in pts}, "spread": {q: s["spread"] for q, s in summary.items()}}
        ok &= in_range and spread_ok
    return ok, detail


def c7(ctx: Context):
    """Cancellation direction"""
    detail, ok = {}, True
    for model in MODELS:
        half = sorted((e for e in ctx.moment_grid(model) if e.q == 0.5), key=lambda e: e.x)
        norm = [(e.mean / math.sqrt(e.x), e.stderr / math.sqrt(e.x)) for e in half]
        steps = [b[0] <= a[0] + 2 * math.hypot(a[1], b[1]) for a, b in zip(norm, norm[1:])]
        detail[model] = [v for v, _ in norm]
        ok &= all(steps)
    return ok, detail


def c8(ctx: Context):
    """Expectation identity"""
    detail, ok = {}, True
    x_hi = 1e4
    for model in MODELS:
        for sigma in (0.0, 1 / math.log(x_hi)):
            zs = [euler.expectation_identity(model, sigma, 400, x_hi, 5000, ctx.seed * 1000 + k,
                                             lam=ctx.lam, ptab=ctx.ptab, threads=ctx.threads).z_score
                  for k in range(100)]
            hits = sum(z <= 4 for z in zs)
            detail[(model, round(sigma, 6))] = {"passes": hits, "max_z": max(zs)}
            ok &= hits >= 95
    return ok, detail


def c9(ctx: Context):
    """Parseval identity"""
    gaps, ok = [], True
    for k in range(5):
        sample = sample_primes("steinhaus", 100, ctx.seed + k)
        rep = euler.parseval_check(sample, ctx.lam, 0.1, 100, 1e6, 1e3)
        doubled_gap = abs(rep.lhs_truncated - rep.rhs_doubled) / rep.rhs_doubled
        gaps.append((rep.rel_gap, doubled_gap))
        ok &= rep.rel_gap <= 0.05 and doubled_gap <= 0.05
    return ok, {"gaps": gaps}


def c10(ctx: Context):
    """Khintchine bounds"""
    a = np.ones(100)
    detail, ok = {}, True
    for m in (2, 4):
        runs = [moments.khintchine_bounds(ctx.lam, a, m, 20_000, ctx.seed + k, MODELS, ctx.threads) for k in range(20)]
        for i, model in enumerate(MODELS):
            reps = [r[i] for r in runs]
            hits = sum(r.upper_ok_mc for r in reps)
            c_min = min(r.c_emp for r in reps)
            detail[(model, m)] = {"upper_passes": hits, "c_min": c_min}
            ok &= hits >= 19 and c_min >= 0.3
    return ok, detail


def c11(ctx: Context):
    """Barrier probability"""
    t0 = time.perf_counter()
    a_vals = [1.0, 2.0, 4.0, 8.0]
    cfg = walks.WalkConfig(n=400, a=1.0, B=10, g=walks.log_barrier, step_vars=[0.5] * 400, M=100_000, seed=ctx.seed)
    res = walks.walk_probabilities(cfg, a_vals, ctx.threads)
    ratios = [r.ratio for r in res]
    band_ok = min(ratios) > 0 and max(ratios) / min(ratios) <= 3
    cfg50 = walks.WalkConfig(n=50, a=1.0, B=10, g=walks.log_barrier, step_vars=[0.5] * 50, M=100_000, seed=ctx.seed)
    res50 = walks.walk_probabilities(cfg50, a_vals, ctx.threads)
    dp = [walks.barrier_dp_oracle(cfg50, a).probability for a in a_vals]
    dp_ok = all(abs(r.p_hat - d) <= 3 * r.stderr for r, d in zip(res50, dp))
    elapsed = time.perf_counter() - t0
    detail = {"ratios": ratios, "spread": max(ratios) / min(ratios) if min(ratios) > 0 else math.inf,
              "band_ok": band_ok, "dp_ok": dp_ok, "mc_n50": [r.p_hat for r in res50], "dp_n50": dp,
              "seconds": elapsed}
    return band_ok and dp_ok and elapsed < 300, detail


def _reproducibility_runs(seed: int) -> list[list[str]]:
    s = str(seed)
    return [
        ["prime-sums", "--grid", "1e3,1e4,1e5"],
        ["moments", "--model", "steinhaus", "--x", "1e3,1e4", "--q", "0.5,1", "--samples", "400", "--seed", s],
        ["moments", "--model", "rademacher", "--x", "1e3", "--q", "0.5,1", "--samples", "400", "--seed", s,
         "--format", "json"],
        ["euler-check", "--op", "expectation", "--model", "rademacher", "--samples", "1000", "--seed", s],
        ["euler-check", "--op", "char", "--x-lo", "800", "--x-hi", "5000", "--t", "0.3", "--u", "1",
         "--samples", "1000", "--seed", s, "--format", "json"],
        ["parseval", "--P", "30", "--z-max", "1e5", "--t-max", "50", "--seed", s],
        ["walks", "--n", "50", "--samples", "20000", "--seed", s, "--dp"],
    ]


def c12(ctx: Context):
    """Reproducibility across thread counts"""
    from .cli import CACHE_ENV, run

    mismatches, codes = [], []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        old = os.environ.get(CACHE_ENV)
        os.environ[CACHE_ENV] = str(tmp / "cache")
        try:
            taus = []
            for k in (1, 2):
                out = tmp / f"tau{k}.csv"
                codes.append(run(["tau", "--nmax", "1e5", "--out", str(out), "--threads", str(k)]))
                taus.append(out)
            if not filecmp.cmp(*taus, shallow=False):
                mismatches.append("tau")
            for i, argv in enumerate(_reproducibility_runs(ctx.seed)):
                outs = []
                for threads in (1, 3):
                    out = tmp / f"run{i}_t{threads}.dat"
                    codes.append(run(argv + ["--out", str(out), "--threads", str(threads)]))
                    outs.append(out)
                if not filecmp.cmp(*outs, shallow=False):
                    mismatches.append(argv[0])
        finally:
            if old is None:
                os.environ.pop(CACHE_ENV, None)
            else:
                os.environ[CACHE_ENV] = old
    return not mismatches and all(c == 0 for c in codes), {"mismatches": mismatches, "exit_codes": codes}


CRITERIA = {1: c1, 2: c2, 3: c3, 4: c4, 5: c5, 6: c6, 7: c7, 8: c8, 9: c9, 10: c10, 11: c11, 12: c12}


def run_all(seed: int = 7, threads: int | None = None, only=None) -> list[CriterionResult]:
    ctx = Context(seed, threads)
    ids = sorted(CRITERIA) if not only else sorted(set(only))
    return [ctx.result(cid) for cid in ids]
