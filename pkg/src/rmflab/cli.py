"""Command-line entry point: ``rmflab <subcommand> [--flags]``.

Every run writes its data file plus ``<out>.manifest.json`` recording the
parameters, seed, library versions and wall time.  Exit status is 0 on
success, 2 on validation errors and 1 on anything unexpected.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
from dataclasses import asdict
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import euler, modform, moments, primesums, walks
from .errors import CacheMissingError, RMFLabError, TableTooSmallError
from .modform import LambdaTable
from .parallel import default_threads
from .rmf import sample_primes
from .sieve import sieve

CACHE_ENV = "RMFLAB_CACHE_DIR"
LAMBDA_FILE = "lambda.bin"
TAU_FILE = "tau.csv"


class _Validation(Exception):
    pass


# --- argument types ----------------------------------------------------------

def sci_int(text: str) -> int:
    """Integer flag that also accepts 1e5 style input."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v) or v != int(v):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


def sci_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _list_of(kind):
    def parse(text: str):
        return [kind(t) for t in text.split(",") if t.strip()]

    return parse


# --- cache -------------------------------------------------------------------

def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "rmflab")


def load_lambda(n_needed: int) -> LambdaTable:
    path = cache_dir() / LAMBDA_FILE
    if not path.exists():
        raise CacheMissingError(f"no lambda table at {path}; run `rmflab tau --nmax {max(n_needed, 1)}` first")
    tab = modform.read_lambda_bin(path)
    if tab.n_max < n_needed:
        raise TableTooSmallError(
            f"cached table covers n <= {tab.n_max} but {n_needed} is needed; rerun `rmflab tau --nmax {n_needed}`")
    return tab


# --- output helpers ----------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return "" if v is None else v


def _write_records(records: list[dict], path: Path, fmt: str) -> None:
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(records, fh, indent=1)
            fh.write("\n")
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if records:
            w.writerow(records[0].keys())
        for rec in records:
            w.writerow([_fmt(v) for v in rec.values()])


def _versions() -> dict:
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"rmflab": own, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def write_manifest(out: Path, command: str, params: dict, seed, wall: float, extra: dict | None = None) -> Path:
    path = out.with_name(out.name + ".manifest.json")
    doc = {"subcommand": command, "params": params, "seed": seed, "outputs": [out.name],
           "versions": _versions(), "wall_time_s": wall}
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=1, default=str) + "\n")
    return path


# --- subcommands -------------------------------------------------------------

def cmd_tau(args) -> dict:
    tab = modform.build_tau_table(args.nmax)
    if args.check:
        tab.check_invariants()
    lam = modform.lambda_from_tau(tab)
    modform.divisor_bound_report(lam)
    if args.format == "json":
        _write_records([{"n": n, "tau": str(tab.tau[n])} for n in range(1, tab.n_max + 1)], args.out, "json")
    else:
        modform.write_tau_csv(tab, args.out)
    cdir = cache_dir()
    cdir.mkdir(parents=True, exist_ok=True)
    modform.write_tau_csv(tab, cdir / TAU_FILE)
    modform.write_lambda_bin(lam, cdir / LAMBDA_FILE)
    return {"cache": str(cdir)}


def cmd_lambda(args) -> dict:
    lam = load_lambda(args.nmax)
    if args.format == "bin":
        modform.write_lambda_bin(LambdaTable(args.nmax, lam.lam[: args.nmax + 1].copy()), args.out)
    else:
        recs = [{"n": n, "lambda": float(lam.lam[n])} for n in range(1, args.nmax + 1)]
        _write_records(recs, args.out, args.format)
    return {}


def cmd_prime_sums(args) -> dict:
    x_max = max(args.grid)
    lam = load_lambda(int(x_max))
    ptab = sieve(max(int(x_max), 2))
    kinds = primesums.KINDS if args.kinds == ["all"] else args.kinds
    fns = {"mertens_lambda": lambda g: primesums.mertens_lambda(g, lam, ptab),
           "weighted_pnt": lambda g: primesums.weighted_pnt(g, lam, ptab),
           "pi_f": lambda g: primesums.pi_f(g, lam, ptab),
           "rankin_selberg": lambda g: primesums.rankin_selberg(g, lam)}
    for k in kinds:
        if k not in fns:
            raise _Validation(f"unknown kind {k!r}")
    series = [fns[k](args.grid) for k in kinds]
    if args.format == "json":
        _write_records([{"x": x, "value": v, "kind": k} for s in series for x, v, k in s.rows()], args.out, "json")
    else:
        primesums.write_series_csv(series, args.out)
    c_f = primesums.rankin_selberg_constant(x_max, lam, ptab)
    return {"sym2_constant": c_f}


def cmd_moments(args) -> dict:
    lam = load_lambda(max(args.x))
    ests = moments.moment_grid(args.model, lam, args.x, args.q, args.samples, args.seed, args.threads)
    if args.format == "json":
        moments.write_moments_json(ests, args.out)
    else:
        moments.write_moments_csv(ests, args.out)
    return {}


def cmd_euler_check(args) -> dict:
    lam = load_lambda(int(args.x_hi))
    ptab = sieve(int(args.x_hi))
    if args.op == "expectation":
        rep = euler.expectation_identity(args.model, args.sigma, args.x_lo, args.x_hi, args.samples, args.seed,
                                         lam=lam, ptab=ptab, threads=args.threads)
    else:
        rep = euler.char_identity(args.model, args.sigma, args.t, args.u, args.x_lo, args.x_hi, args.samples,
                                  args.seed, lam=lam, ptab=ptab, t1=args.t1, threads=args.threads)
    doc = rep.to_json()
    if args.format == "json":
        args.out.write_text(json.dumps(doc, indent=1) + "\n")
    else:
        flat = {"op": doc["op"], **doc["params"], "M": doc["M"], "seed": doc["seed"],
                "mc_re": doc["mc_mean"][0], "mc_im": doc["mc_mean"][1], "mc_stderr": doc["mc_stderr"],
                "analytic_re": doc["analytic"][0], "analytic_im": doc["analytic"][1], "z": doc["z"]}
        _write_records([flat], args.out, "csv")
    return {}


def cmd_parseval(args) -> dict:
    lam = load_lambda(int(args.P) if args.P >= 2 else 2)
    sample = sample_primes(args.model, max(int(args.P), 2), args.seed, args.stream)
    rep = euler.parseval_check(sample, lam, args.sigma, args.P, args.z_max, args.t_max)
    rec = {"model": args.model, "seed": args.seed, "stream": args.stream, **rep.to_json()}
    _write_records([rec], args.out, args.format)
    return {}


def cmd_walks(args) -> dict:
    g = walks.G_FUNCTIONS[args.g]
    means = None if args.step_mean is None else [args.step_mean] * args.n
    var = [args.step_var] * args.n
    cfg = walks.WalkConfig(n=args.n, a=args.a[0], B=args.B, g=g, step_means=means, step_vars=var,
                           M=args.samples, seed=args.seed)
    results = walks.walk_probabilities(cfg, args.a, args.threads)
    recs = [{k: getattr(r, k) for k in walks.CSV_FIELDS} for r in results]
    extra = {}
    if args.dp:
        dp = [walks.barrier_dp_oracle(cfg, a) for a in args.a]
        extra["dp_oracle"] = [asdict(d) for d in dp]
    _write_records(recs, args.out, args.format)
    return extra


def cmd_all_acceptance(args) -> dict:
    from . import acceptance

    results = acceptance.run_all(seed=args.seed, threads=args.threads, only=args.only)
    recs = [r.record() for r in results]
    _write_records(recs, args.out, args.format)
    for r in results:
        print(r.line())
    return {"criteria": [{"id": r.cid, "name": r.name, "passed": r.passed} for r in results]}


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rmflab", description="Twisted random multiplicative function experiments.",
                                allow_abbrev=False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, default_out, formats=("csv", "json")):
        sp = sub.add_parser(name, help=help_, allow_abbrev=False,
                            formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        sp.set_defaults(fn=fn)
        sp.add_argument("--out", type=Path, default=Path(default_out), help="data file to write")
        sp.add_argument("--format", choices=formats, default=formats[0])
        sp.add_argument("--threads", type=sci_int, default=default_threads(), help="worker threads")
        sp.add_argument("--seed", type=sci_int, default=0, help="master seed")
        return sp

    sp = add("tau", cmd_tau, "build tau(n) exactly and refresh the table cache", "tau.csv")
    sp.add_argument("--nmax", type=sci_int, default=modform.N_EXACT)
    sp.add_argument("--check", action="store_true", help="verify multiplicativity, Hecke and 691 relations")

    sp = add("lambda", cmd_lambda, "export normalised lambda(n) from the cache", "lambda.csv", ("csv", "json", "bin"))
    sp.add_argument("--nmax", type=sci_int, default=1000)

    sp = add("prime-sums", cmd_prime_sums, "prime sums weighted by lambda^2(p)", "prime_sums.csv")
    sp.add_argument("--grid", type=_list_of(sci_float), default=[1e3, 1e4, 1e5])
    sp.add_argument("--kinds", type=_list_of(str), default=["all"])

    sp = add("moments", cmd_moments, "Monte Carlo moments E|S(x)|^(2q)", "moments.csv")
    sp.add_argument("--model", choices=("steinhaus", "rademacher"), default="steinhaus")
    sp.add_argument("--x", type=_list_of(sci_int), default=[1000])
    sp.add_argument("--q", type=_list_of(sci_float), default=[0.5])
    sp.add_argument("--samples", type=sci_int, default=4000)

    sp = add("euler-check", cmd_euler_check, "Monte Carlo check of an Euler-product identity", "euler_check.csv")
    sp.add_argument("--op", choices=("expectation", "char"), default="expectation")
    sp.add_argument("--model", choices=("steinhaus", "rademacher"), default="steinhaus")
    sp.add_argument("--sigma", type=sci_float, default=0.0)
    sp.add_argument("--t", type=sci_float, default=0.0)
    sp.add_argument("--u", type=sci_float, default=0.0)
    sp.add_argument("--t1", type=sci_float, default=0.0)
    sp.add_argument("--x-lo", type=sci_float, default=400.0)
    sp.add_argument("--x-hi", type=sci_float, default=1e4)
    sp.add_argument("--samples", type=sci_int, default=5000)

    sp = add("parseval", cmd_parseval, "both sides of the Dirichlet-series mean-square identity", "parseval.csv")
    sp.add_argument("--model", choices=("steinhaus", "rademacher"), default="steinhaus")
    sp.add_argument("--sigma", type=sci_float, default=0.1)
    sp.add_argument("--P", type=sci_float, default=100.0)
    sp.add_argument("--z-max", type=sci_float, default=1e6)
    sp.add_argument("--t-max", type=sci_float, default=1e3)
    sp.add_argument("--stream", type=sci_int, default=0)

    sp = add("walks", cmd_walks, "Gaussian barrier walk probabilities", "walks.csv")
    sp.add_argument("--n", type=sci_int, default=400)
    sp.add_argument("--a", type=_list_of(sci_float), default=[1.0, 2.0, 4.0, 8.0])
    sp.add_argument("--B", type=sci_int, default=10)
    sp.add_argument("--g", choices=sorted(walks.G_FUNCTIONS), default="minus2log")
    sp.add_argument("--step-mean", type=sci_float, default=None, help="default 1")
    sp.add_argument("--step-var", type=sci_float, default=0.5)
    sp.add_argument("--samples", type=sci_int, default=100_000)
    sp.add_argument("--dp", action="store_true", help="also run the grid oracle (n <= 64)")

    sp = add("all-acceptance", cmd_all_acceptance, "run every acceptance criterion", "acceptance.csv")
    sp.add_argument("--only", type=_list_of(sci_int), default=None, help="criterion numbers to run")
    return p


def _params(args) -> dict:
    skip = {"fn", "command", "out", "seed"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in skip}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("rmflab: --threads must be at least 1", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        extra = args.fn(args)
    except (RMFLabError, _Validation, ValueError) as exc:
        print(f"rmflab {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"rmflab {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1
    write_manifest(args.out, args.command, _params(args), args.seed, time.perf_counter() - t0, extra)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
