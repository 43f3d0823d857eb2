"""Command-line front end: ``heisenlattice <command> [options]``.

Exit status: 0 pass, 1 a requested check failed, 2 usage error, 3 resource
limit (table too large, enumeration budget, ...).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

from . import analysis, counting, mollify, spectral, volume
from .geometry import BodySpec

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3

COMMANDS = ("count", "volume", "scan", "fourier", "fit", "sandwich", "poisson",
            "shell-probe", "euler-maclaurin")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    spec: BodySpec
    args: argparse.Namespace
    workers: int = 1
    output: str | None = None
    fmt: str = "json"
    table_cache: str | None = None
    seed: int = 0


def _spec_from(ns) -> BodySpec:
    if ns.family == "heisenberg":
        return BodySpec.heisenberg(ns.d, ns.alpha, ns.A)
    if ns.A != 1.0:
        raise UsageError("the euclidean family has A = 1")
    return BodySpec.euclidean(ns.d, ns.alpha)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", choices=("heisenberg", "euclidean"), default="heisenberg")
    common.add_argument("--d", type=int, default=1)
    common.add_argument("--alpha", type=float, default=2.0)
    common.add_argument("--A", type=float, default=1.0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--output", "-o")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--table-cache")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="heisenlattice", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("count", parents=[common], help="exact lattice count at radius R")
    s.add_argument("--R", type=float, required=True)
    s.add_argument("--method", choices=("sliced", "direct"), default="sliced")

    s = sub.add_parser("volume", parents=[common], help="volume of the dilate B_R")
    s.add_argument("--R", type=float, default=1.0)
    s.add_argument("--method", choices=("closed_form", "quadrature"), default="closed_form")

    s = sub.add_parser("scan", parents=[common], help="error term over a radius grid")
    s.add_argument("--grid", required=True)
    s.add_argument("--fit", action="store_true")
    s.add_argument("--windows-per-decade", type=float, default=3.0)
    s.add_argument("--slack", type=float, default=0.2)

    s = sub.add_parser("fourier", parents=[common], help="Fourier samples along a ray")
    s.add_argument("--ray", choices=("axis", "hyperplane", "diagonal"), default="axis")
    s.add_argument("--grid", default="dyadic:8:512:8")
    s.add_argument("--fit", action="store_true")
    s.add_argument("--tolerance", type=float, default=0.15)

    s = sub.add_parser("fit", parents=[common], help="refit a scan CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--windows-per-decade", type=float, default=3.0)
    s.add_argument("--slack", type=float, default=0.2)

    s = sub.add_parser("sandwich", parents=[common], help="smoothed counts around R")
    s.add_argument("--R", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)

    s = sub.add_parser("poisson", parents=[common], help="truncated dual-lattice sum")
    s.add_argument("--R", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--K", type=int, default=8)

    s = sub.add_parser("shell-probe", parents=[common], help="count gap across R^2 = M")
    s.add_argument("--M", type=int, required=True)

    s = sub.add_parser("euler-maclaurin", parents=[common], help="slice-sum main term")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--R", type=float)
    g.add_argument("--grid")
    s.add_argument("--windows-per-decade", type=float, default=3.0)
    return p


def _emit(cfg: RunConfig, payload, default_fmt: str = "json") -> None:
    fmt = cfg.fmt or default_fmt
    if fmt == "json":
        text = json.dumps(payload, indent=2) + "\n"
        if cfg.output:
            with open(cfg.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        raise UsageError("this command writes JSON")


def _table_for(cfg: RunConfig, nmax: int) -> counting.SliceTable:
    return counting.get_slice_table(2 * cfg.spec.d, nmax, cfg.table_cache)


def _fit_target(spec: BodySpec):
    try:
        return analysis.theorem_exponent(spec)
    except analysis.UncoveredRegime:
        return None


def _cmd_count(cfg):
    a = cfg.args
    if a.method == "direct":
        n = counting.count_direct(cfg.spec, a.R)
    else:
        tab = _table_for(cfg, max(counting.required_nmax(cfg.spec, a.R), 0) + 1)
        n = counting.count_sliced(cfg.spec, a.R, tab)
    print(n)
    return EXIT_OK


def _cmd_volume(cfg):
    rep = volume.volume_report(cfg.spec, cfg.args.R, cfg.args.method)
    print(f"{rep.scaled_volume:.17g}")
    return EXIT_OK


def _scan_fit_payload(cfg, scan, wpd, slack):
    fit = analysis.fit_sup_exponent(scan, wpd)
    target = _fit_target(cfg.spec)
    lower = 2 * cfg.spec.d - 0.3 if cfg.spec.is_heisenberg and cfg.spec.alpha == 2 else None
    return analysis.fit_summary(fit, target, slack, lower)


def _cmd_scan(cfg):
    a = cfg.args
    grid = analysis.parse_grid(a.grid)
    tab = _table_for(cfg, max(counting.required_nmax(cfg.spec, grid[-1]), 0) + 1)
    scan = analysis.error_scan(cfg.spec, grid, tab, cfg.workers)
    if cfg.output:
        scan.write_csv(cfg.output)
    elif not a.fit:
        _scan_to_stdout(scan)
    if a.fit:
        summary = _scan_fit_payload(cfg, scan, a.windows_per_decade, a.slack)
        print(json.dumps(summary, indent=2))
        return EXIT_OK if summary["pass"] else EXIT_FAIL
    return EXIT_OK


def _scan_to_stdout(scan):
    print("R,count,volume,error")
    for s in scan.samples:
        print(f"{s.R!r},{s.count},{s.volume!r},{s.error!r}")


def _cmd_fit(cfg):
    scan = analysis.ErrorScan.read_csv(cfg.spec, cfg.args.input)
    summary = _scan_fit_payload(cfg, scan, cfg.args.windows_per_decade, cfg.args.slack)
    _emit(cfg, summary)
    return EXIT_OK if summary["pass"] else EXIT_FAIL


def _cmd_fourier(cfg):
    a = cfg.args
    xs = analysis.parse_grid(a.grid)
    direction = {"axis": (0.0, 1.0), "hyperplane": (1.0, 0.0),
                 "diagonal": (math.sqrt(0.5), math.sqrt(0.5))}[a.ray]
    samples = spectral.sample_ray(cfg.spec, direction, xs)
    if cfg.output:
        spectral.write_samples_csv(samples, cfg.output)
    if not a.fit:
        if not cfg.output:
            print("wmag,s,value")
            for smp in samples:
                print(f"{smp.wmag:.17g},{smp.s:.17g},{smp.value:.17g}")
        return EXIT_OK
    fit = spectral.fit_decay(samples, (float(xs[0]), float(xs[-1])))
    pred = None
    if a.ray in ("axis", "hyperplane") and cfg.spec.alpha >= 2:
        pred = spectral.predicted_decay_exponent(cfg.spec, a.ray)
    ok = pred is None or abs(fit.exponent - pred) <= a.tolerance
    print(json.dumps({"exponent": fit.exponent, "log_constant": fit.log_constant,
                      "max_residual": fit.max_residual, "window_min": fit.window[0],
                      "window_max": fit.window[1], "predicted_exponent": pred, "pass": ok}, indent=2))
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_sandwich(cfg):
    a = cfg.args
    m = mollify.make_mollifier(cfg.spec)
    lo = mollify.smoothed_count(cfg.spec, a.R - a.eps, m, a.eps)
    hi = mollify.smoothed_count(cfg.spec, a.R + a.eps, m, a.eps)
    tab = _table_for(cfg, counting.required_nmax(cfg.spec, a.R) + 1)
    c = counting.count_sliced(cfg.spec, a.R, tab)
    ok = lo - 1e-3 <= c <= hi + 1e-3
    _emit(cfg, {"R": a.R, "eps": a.eps, "lower": lo, "count": c, "upper": hi, "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_poisson(cfg):
    a = cfg.args
    m = mollify.make_mollifier(cfg.spec)
    terms = mollify.poisson_contributions(cfg.spec, a.R, m, a.eps, a.K) if a.K > 0 else []
    est = mollify.poisson_estimate(cfg.spec, a.R, m, a.eps, a.K)
    sc = mollify.smoothed_count(cfg.spec, a.R, m, a.eps)
    if cfg.output:
        mollify.write_contributions_csv(terms, cfg.output, cfg.spec.d)
    print(json.dumps({"R": a.R, "eps": a.eps, "K": a.K, "estimate": est,
                      "smoothed_count": sc, "discrepancy": abs(est - sc)}, indent=2))
    return EXIT_OK


def _cmd_shell_probe(cfg):
    d, M = cfg.spec.d, cfg.args.M
    tab = _table_for(cfg, M + 1)
    pr = counting.shell_probe_alpha2(d, M, tab)
    unit = volume.unit_volume_closed(BodySpec.heisenberg(d, 2.0, 1.0))
    bound = 0.9 * unit * (d + 1) * M ** d
    ok = pr.count_gap == 0 and pr.volume_gap >= bound
    _emit(cfg, {"d": d, "M": M, "count_lo": pr.count_lo, "count_hi": pr.count_hi,
                "count_gap": pr.count_gap, "volume_gap": pr.volume_gap,
                "volume_gap_bound": bound, "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_euler_maclaurin(cfg):
    a = cfg.args
    spec = cfg.spec
    if not spec.is_heisenberg or spec.A != 1:
        raise UsageError("euler-maclaurin needs the heisenberg family with A = 1")
    if a.R is not None:
        r = analysis.euler_maclaurin_E1(spec.d, spec.alpha, a.R)
        ok = r.agreement <= 1e-6
        _emit(cfg, {"R": r.R, "E1": r.E1, "volume": r.volume, "deviation": r.deviation,
                    "sawtooth": r.sawtooth, "agreement": r.agreement, "pass": ok})
        return EXIT_OK if ok else EXIT_FAIL
    radii = analysis.parse_grid(a.grid)
    fit, worst, recs = analysis.em_deviation_fit(spec.d, spec.alpha, radii, a.windows_per_decade)
    target = analysis.em_predicted_exponent(spec.d, spec.alpha)
    ok = fit.exponent <= target + 0.15 and worst <= 1e-6
    _emit(cfg, {"exponent": fit.exponent, "log_constant": fit.log_constant,
                "max_residual": fit.max_residual, "window_min": fit.window[0],
                "window_max": fit.window[1], "predicted_exponent": target,
                "worst_agreement": worst, "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


_HANDLERS = {
    "count": _cmd_count, "volume": _cmd_volume, "scan": _cmd_scan, "fit": _cmd_fit,
    "fourier": _cmd_fourier, "sandwich": _cmd_sandwich, "poisson": _cmd_poisson,
    "shell-probe": _cmd_shell_probe, "euler-maclaurin": _cmd_euler_maclaurin,
}


def run(cfg: RunConfig) -> int:
    try:
        return _HANDLERS[cfg.command](cfg)
    except (counting.BudgetExceeded, counting.TableTooSmall, MemoryError) as exc:
        print(f"heisenlattice: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (UsageError, ValueError) as exc:
        print(f"heisenlattice: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if ns.workers < 1:
            raise UsageError("--workers must be >= 1")
        spec = _spec_from(ns)
    except (UsageError, ValueError) as exc:
        print(f"heisenlattice: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cfg = RunConfig(ns.command, spec, ns, ns.workers, ns.output, ns.format,
                    os.environ.get("HEISEN_TABLE_CACHE", ns.table_cache), ns.seed)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
